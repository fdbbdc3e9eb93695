// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "corag/core.hpp"
#include "corag/reranker.hpp"
#include "corag/reward.hpp"
#include "corag/rng.hpp"

namespace corag {

/// Querying the mean success of a document that was never selected.
class IneligibleDocument : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct LedgerEntry {
  long successes = 0;
  long trials = 0;
  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

/// Per (query, document) tally of binary task-success signals. Counts only
/// grow; the ledger accumulates across the whole run.
class SuccessLedger {
 public:
  using Key = std::pair<std::string, std::string>;

  void record(const std::string& query_id, const std::string& doc_id,
              Reward reward);

  /// Zero entry when the pair was never recorded.
  LedgerEntry entry(const std::string& query_id,
                    const std::string& doc_id) const;

  const std::map<Key, LedgerEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Restores a serialized entry. Throws ContractViolation on bad counts.
  void restore(const std::string& query_id, const std::string& doc_id,
               LedgerEntry e);

  friend bool operator==(const SuccessLedger&, const SuccessLedger&) = default;

 private:
  std::map<Key, LedgerEntry> entries_;
};

class SmoothingConfig {
 public:
  explicit SmoothingConfig(double alpha = 0.1);
  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

struct PreferenceLabels {
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
  /// (doc_id, sampled bit) for every labeled document, in candidate order.
  std::vector<std::pair<std::string, int>> bits;
};

/// Every selected document gets one trial, and a success if reward is 1.
void record_outcome(SuccessLedger& ledger, const std::string& query_id,
                    const SelectedSet& selected, Reward reward);

/// successes / trials. Throws IneligibleDocument when trials == 0.
double mean_success(const SuccessLedger& ledger, const std::string& query_id,
                    const std::string& doc_id);

/// alpha + (1 - 2 alpha) * lbar, always within [alpha, 1 - alpha].
double smoothed_parameter(double lbar, double alpha);

/// Bernoulli label per tried candidate; untried candidates are left out.
PreferenceLabels sample_labels(const SuccessLedger& ledger,
                               const std::string& query_id,
                               const std::vector<std::string>& candidates,
                               double alpha, Rng& rng);

/// Coarse bootstrap labels: candidates whose text contains a gold answer are
/// positive, the rest negative.
PreferenceLabels warm_start_labels(const Query& q, const Corpus& corpus);

/// Line-delimited `query_id, doc_id, successes, trials` records.
void write_ledger(std::ostream& out, const SuccessLedger& ledger);
SuccessLedger read_ledger(std::istream& in);

}  // namespace corag
