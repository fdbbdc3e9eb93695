// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace corag {

using Tokens = std::vector<std::string>;

/// Thrown when a caller breaks a documented precondition.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an id cannot be resolved. The message names the id.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A policy update was refused because the gradient had a NaN or inf.
class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Query {
  std::string id;
  Tokens text;
  std::vector<std::string> gold_answers;
  std::vector<std::string> candidate_doc_ids;

  Query() = default;
  Query(std::string id, Tokens text, std::vector<std::string> gold_answers,
        std::vector<std::string> candidate_doc_ids);

  std::size_t num_candidates() const { return candidate_doc_ids.size(); }
};

struct Document {
  std::string id;
  Tokens text;
  // Synthetic-environment annotation. Only oracle metrics read this.
  std::set<std::string> gold_for;

  Document() = default;
  Document(std::string id, Tokens text, std::set<std::string> gold_for = {});
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Document> docs);

  void add(Document doc);
  const Document& at(const std::string& id) const;
  bool contains(const std::string& id) const { return docs_.count(id) != 0; }
  std::size_t size() const { return docs_.size(); }

  /// Throws LookupError for the first candidate id of `q` not in the corpus.
  void check_resolvable(const Query& q) const;

  auto begin() const { return docs_.begin(); }
  auto end() const { return docs_.end(); }

 private:
  std::map<std::string, Document> docs_;
};

using Dataset = std::vector<Query>;

}  // namespace corag
