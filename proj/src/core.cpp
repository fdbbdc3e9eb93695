// SPDX-License-Identifier: Apache-2.0
#include "corag/core.hpp"

#include <unordered_set>
#include <utility>

namespace corag {

Query::Query(std::string id_, Tokens text_, std::vector<std::string> gold,
             std::vector<std::string> candidates)
    : id(std::move(id_)),
      text(std::move(text_)),
      gold_answers(std::move(gold)),
      candidate_doc_ids(std::move(candidates)) {
  if (gold_answers.empty()) {
    throw ContractViolation("query " + id + ": gold_answers is empty");
  }
  if (candidate_doc_ids.empty()) {
    throw ContractViolation("query " + id + ": no candidate documents");
  }
  std::unordered_set<std::string> seen;
  for (const auto& d : candidate_doc_ids) {
    if (!seen.insert(d).second) {
      throw ContractViolation("query " + id + ": duplicate candidate " + d);
    }
  }
}

Document::Document(std::string id_, Tokens text_, std::set<std::string> gold)
    : id(std::move(id_)), text(std::move(text_)), gold_for(std::move(gold)) {
  if (text.empty()) {
    throw ContractViolation("document " + id + ": empty text");
  }
}

Corpus::Corpus(std::vector<Document> docs) {
  for (auto& d : docs) add(std::move(d));
}

void Corpus::add(Document doc) {
  auto id = doc.id;
  if (!docs_.emplace(id, std::move(doc)).second) {
    throw ContractViolation("duplicate document id " + id);
  }
}

const Document& Corpus::at(const std::string& id) const {
  auto it = docs_.find(id);
  if (it == docs_.end()) throw LookupError("unknown document id: " + id);
  return it->second;
}

void Corpus::check_resolvable(const Query& q) const {
  for (const auto& d : q.candidate_doc_ids) {
    if (!contains(d)) {
      throw LookupError("unknown document id: " + d + " (query " + q.id + ")");
    }
  }
}

}  // namespace corag
