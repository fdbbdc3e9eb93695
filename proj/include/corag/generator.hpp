// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corag/core.hpp"
#include "corag/reranker.hpp"
#include "corag/rng.hpp"
#include "corag/softmax.hpp"

namespace corag {

/// Extractive answer-candidate feature map g(q, D, a):
///   0  occurrences of the candidate in D, each weighted by 1/rank
///   1  1.0 if the candidate occurs in the top-ranked document
///   2  candidate length in tokens / kCandidateLengthScale
///   3  candidate tokens that also occur in the query
///   4  bias (1.0)
inline constexpr int kGenFeatureDim = 5;
inline constexpr double kCandidateLengthScale = 4.0;
inline constexpr const char* kGenFeatureMap = "extractive-v1";

struct CandidateConfig {
  int max_ngram = 2;
  std::size_t max_candidates = 256;
};

struct AnswerCandidate {
  std::string text;
  Tokens tokens;
  VectorXd features;
};

/// Distinct n-grams (n <= max_ngram) of the selected documents in
/// first-occurrence order: document rank, then position, then n. Truncated
/// to the first max_candidates.
std::vector<AnswerCandidate> build_candidates(const Query& q,
                                              const SelectedSet& selected,
                                              const Corpus& corpus,
                                              const CandidateConfig& cfg = {});

MatrixXd candidate_matrix(const std::vector<AnswerCandidate>& candidates);

class GenerationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeneratorPolicy {
  VectorXd phi = VectorXd::Zero(kGenFeatureDim);
  double tau = 0.7;

  GeneratorPolicy() = default;
  GeneratorPolicy(VectorXd phi, double tau);
};

/// pi_phi over the candidate rows: softmax(G phi / tau).
VectorXd generator_probabilities(const GeneratorPolicy& policy,
                                 const MatrixXd& features);

struct Generation {
  std::string answer;
  double log_prob = 0.0;
  std::size_t candidate = 0;
};

Generation sample_candidate(const GeneratorPolicy& policy,
                            const std::vector<AnswerCandidate>& candidates,
                            Rng& rng);

/// Deterministic decoding: highest-probability candidate, earliest on ties.
Generation greedy_candidate(const GeneratorPolicy& policy,
                            const std::vector<AnswerCandidate>& candidates);

Generation generate(const GeneratorPolicy& policy, const Query& q,
                    const SelectedSet& selected, const Corpus& corpus, Rng& rng,
                    const CandidateConfig& cfg = {});

enum class AdvantageNorm { kMean, kMeanStd };

AdvantageNorm parse_advantage_norm(std::string_view s);
std::string_view to_string(AdvantageNorm n);

inline constexpr double kAdvantageEps = 1e-8;

/// (r - mean) / (population std + eps); exactly zero for a flat group.
/// kMean skips the division.
std::vector<double> compute_advantages(
    std::span<const double> rewards,
    AdvantageNorm norm = AdvantageNorm::kMeanStd);

struct RolloutGroup {
  std::string query_id;
  SelectedSet selected;
  std::vector<Generation> responses;
  std::vector<int> rewards;
  std::vector<double> advantages;

  bool flat() const;
  double mean_reward() const;
};

RolloutGroup rollout_group(const GeneratorPolicy& policy, const Query& q,
                           const SelectedSet& selected, const Corpus& corpus,
                           int group_size, Rng& rng,
                           const CandidateConfig& cfg = {},
                           AdvantageNorm norm = AdvantageNorm::kMeanStd);

/// -(1/G) sum_i A_i log pi(a_i) on candidate rows `features`, where
/// `sampled[i]` indexes the row of response i.
LossAndGrad grpo_generator_loss(const MatrixXd& features, const VectorXd& phi,
                                double tau,
                                std::span<const std::size_t> sampled,
                                std::span<const double> advantages);

LossAndGrad grpo_generator_loss(const GeneratorPolicy& policy,
                                const RolloutGroup& group, const Query& q,
                                const Corpus& corpus,
                                const CandidateConfig& cfg = {});

/// Plain gradient step. Throws NonFiniteGradient without touching the policy.
GeneratorPolicy update_generator(const GeneratorPolicy& policy,
                                 const VectorXd& gradient,
                                 double learning_rate);

}  // namespace corag
