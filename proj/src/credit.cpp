// SPDX-License-Identifier: Apache-2.0
#include "corag/credit.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "corag/text.hpp"

namespace corag {

void SuccessLedger::record(const std::string& query_id,
                           const std::string& doc_id, Reward reward) {
  auto& e = entries_[{query_id, doc_id}];
  e.trials += 1;
  e.successes += reward.value;
}

LedgerEntry SuccessLedger::entry(const std::string& query_id,
                                 const std::string& doc_id) const {
  auto it = entries_.find({query_id, doc_id});
  return it == entries_.end() ? LedgerEntry{} : it->second;
}

void SuccessLedger::restore(const std::string& query_id,
                            const std::string& doc_id, LedgerEntry e) {
  if (e.trials < 0 || e.successes < 0 || e.successes > e.trials) {
    throw ContractViolation("ledger entry (" + query_id + ", " + doc_id +
                            ") has invalid counts");
  }
  entries_[{query_id, doc_id}] = e;
}

SmoothingConfig::SmoothingConfig(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw ContractViolation("alpha must lie in (0, 0.5)");
  }
}

void record_outcome(SuccessLedger& ledger, const std::string& query_id,
                    const SelectedSet& selected, Reward reward) {
  for (const auto& d : selected.docs) ledger.record(query_id, d.doc_id, reward);
}

double mean_success(const SuccessLedger& ledger, const std::string& query_id,
                    const std::string& doc_id) {
  const auto e = ledger.entry(query_id, doc_id);
  if (e.trials == 0) {
    throw IneligibleDocument("no trials recorded for (" + query_id + ", " +
                             doc_id + ")");
  }
  return static_cast<double>(e.successes) / static_cast<double>(e.trials);
}

double smoothed_parameter(double lbar, double alpha) {
  if (!(lbar >= 0.0 && lbar <= 1.0)) {
    throw ContractViolation("smoothed_parameter: lbar outside [0, 1]");
  }
  SmoothingConfig check(alpha);
  return alpha + (1.0 - 2.0 * alpha) * lbar;
}

PreferenceLabels sample_labels(const SuccessLedger& ledger,
                               const std::string& query_id,
                               const std::vector<std::string>& candidates,
                               double alpha, Rng& rng) {
  PreferenceLabels out;
  for (const auto& doc : candidates) {
    if (ledger.entry(query_id, doc).trials == 0) continue;
    const double p =
        smoothed_parameter(mean_success(ledger, query_id, doc), alpha);
    const int bit = rng.bernoulli(p) ? 1 : 0;
    (bit ? out.positives : out.negatives).push_back(doc);
    out.bits.emplace_back(doc, bit);
  }
  return out;
}

PreferenceLabels warm_start_labels(const Query& q, const Corpus& corpus) {
  std::vector<Tokens> answers;
  for (const auto& g : q.gold_answers) {
    auto t = normalize_text(g);
    if (!t.empty()) answers.push_back(std::move(t));
  }
  PreferenceLabels out;
  for (const auto& id : q.candidate_doc_ids) {
    const auto& text = corpus.at(id).text;
    bool hit = false;
    for (const auto& a : answers) {
      if (contains_subsequence(text, a)) {
        hit = true;
        break;
      }
    }
    (hit ? out.positives : out.negatives).push_back(id);
    out.bits.emplace_back(id, hit ? 1 : 0);
  }
  return out;
}

void write_ledger(std::ostream& out, const SuccessLedger& ledger) {
  for (const auto& [key, e] : ledger.entries()) {
    out << nlohmann::json::array({key.first, key.second, e.successes, e.trials})
               .dump()
        << '\n';
  }
}

SuccessLedger read_ledger(std::istream& in) {
  SuccessLedger ledger;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    ledger.restore(rec.at(0).get<std::string>(), rec.at(1).get<std::string>(),
                   {rec.at(2).get<long>(), rec.at(3).get<long>()});
  }
  return ledger;
}

}  // namespace corag
