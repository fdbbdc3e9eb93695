// SPDX-License-Identifier: Apache-2.0
#include "corag/generator.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "corag/reward.hpp"
#include "corag/text.hpp"

namespace corag {

namespace {

std::size_t count_occurrences(const Tokens& hay, const Tokens& needle) {
  if (needle.size() > hay.size()) return 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + i)) ++n;
  }
  return n;
}

}  // namespace

std::vector<AnswerCandidate> build_candidates(const Query& q,
                                              const SelectedSet& selected,
                                              const Corpus& corpus,
                                              const CandidateConfig& cfg) {
  if (cfg.max_ngram < 1) {
    throw ContractViolation("build_candidates: max_ngram must be >= 1");
  }
  std::vector<const Tokens*> docs;
  for (const auto& s : selected.docs) docs.push_back(&corpus.at(s.doc_id).text);

  std::vector<AnswerCandidate> out;
  std::unordered_set<std::string> seen;
  auto collect = [&](const Tokens& doc) {
    for (std::size_t pos = 0; pos < doc.size(); ++pos) {
      for (int n = 1; n <= cfg.max_ngram && pos + n <= doc.size(); ++n) {
        if (out.size() == cfg.max_candidates) return;
        Tokens gram(doc.begin() + pos, doc.begin() + pos + n);
        std::string key = join_tokens(gram);
        if (!seen.insert(key).second) continue;
        out.push_back({std::move(key), std::move(gram), {}});
      }
    }
  };
  for (const Tokens* doc : docs) collect(*doc);

  const std::unordered_set<std::string> query_tokens(q.text.begin(),
                                                     q.text.end());
  for (auto& c : out) {
    double weighted = 0.0;
    for (std::size_t r = 0; r < docs.size(); ++r) {
      weighted += static_cast<double>(count_occurrences(*docs[r], c.tokens)) /
                  static_cast<double>(r + 1);
    }
    double in_query = 0.0;
    for (const auto& t : c.tokens) in_query += query_tokens.count(t) ? 1.0 : 0.0;
    c.features.resize(kGenFeatureDim);
    c.features << weighted,
        (!docs.empty() && count_occurrences(*docs.front(), c.tokens) > 0) ? 1.0
                                                                          : 0.0,
        static_cast<double>(c.tokens.size()) / kCandidateLengthScale, in_query,
        1.0;
  }
  return out;
}

MatrixXd candidate_matrix(const std::vector<AnswerCandidate>& candidates) {
  MatrixXd x(candidates.size(), kGenFeatureDim);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    x.row(i) = candidates[i].features;
  }
  return x;
}

GeneratorPolicy::GeneratorPolicy(VectorXd p, double t)
    : phi(std::move(p)), tau(t) {
  if (phi.size() != kGenFeatureDim) {
    throw ContractViolation("generator phi must have dimension " +
                            std::to_string(kGenFeatureDim));
  }
  if (!phi.allFinite()) throw ContractViolation("generator phi not finite");
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw ContractViolation("generator temperature must be positive");
  }
}

VectorXd generator_probabilities(const GeneratorPolicy& policy,
                                 const MatrixXd& features) {
  return softmax((features * policy.phi) / policy.tau);
}

Generation sample_candidate(const GeneratorPolicy& policy,
                            const std::vector<AnswerCandidate>& candidates,
                            Rng& rng) {
  if (candidates.empty()) throw GenerationFailure("no answer candidates");
  const VectorXd logp =
      log_softmax((candidate_matrix(candidates) * policy.phi) / policy.tau);
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t pick = candidates.size() - 1;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cum += std::exp(logp[i]);
    if (u < cum) {
      pick = i;
      break;
    }
  }
  return {candidates[pick].text, logp[pick], pick};
}

Generation greedy_candidate(const GeneratorPolicy& policy,
                            const std::vector<AnswerCandidate>& candidates) {
  if (candidates.empty()) throw GenerationFailure("no answer candidates");
  const VectorXd z = candidate_matrix(candidates) * policy.phi;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < z.size(); ++i) {
    if (z[i] > z[best]) best = i;
  }
  const VectorXd logp = log_softmax(z / policy.tau);
  const auto idx = static_cast<std::size_t>(best);
  return {candidates[idx].text, logp[best], idx};
}

Generation generate(const GeneratorPolicy& policy, const Query& q,
                    const SelectedSet& selected, const Corpus& corpus, Rng& rng,
                    const CandidateConfig& cfg) {
  return sample_candidate(policy, build_candidates(q, selected, corpus, cfg),
                          rng);
}

AdvantageNorm parse_advantage_norm(std::string_view s) {
  if (s == "mean") return AdvantageNorm::kMean;
  if (s == "mean_std") return AdvantageNorm::kMeanStd;
  throw ContractViolation("advantage_norm must be mean or mean_std, got " +
                          std::string(s));
}

std::string_view to_string(AdvantageNorm n) {
  return n == AdvantageNorm::kMean ? "mean" : "mean_std";
}

std::vector<double> compute_advantages(std::span<const double> rewards,
                                       AdvantageNorm norm) {
  if (rewards.size() < 2) {
    throw ContractViolation("compute_advantages: need at least 2 rewards");
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);

  std::vector<double> out(rewards.size(), 0.0);
  if (sd == 0.0) return out;
  const double denom = norm == AdvantageNorm::kMeanStd ? sd + kAdvantageEps : 1.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out[i] = (rewards[i] - mean) / denom;
  }
  return out;
}

bool RolloutGroup::flat() const {
  return std::all_of(rewards.begin(), rewards.end(),
                     [&](int r) { return r == rewards.front(); });
}

double RolloutGroup::mean_reward() const {
  if (rewards.empty()) return 0.0;
  return std::accumulate(rewards.begin(), rewards.end(), 0.0) /
         static_cast<double>(rewards.size());
}

RolloutGroup rollout_group(const GeneratorPolicy& policy, const Query& q,
                           const SelectedSet& selected, const Corpus& corpus,
                           int group_size, Rng& rng, const CandidateConfig& cfg,
                           AdvantageNorm norm) {
  if (group_size < 2) {
    throw ContractViolation("rollout_group: group_size must be >= 2");
  }
  const auto candidates = build_candidates(q, selected, corpus, cfg);
  RolloutGroup g;
  g.query_id = q.id;
  g.selected = selected;
  std::vector<double> rewards;
  for (int i = 0; i < group_size; ++i) {
    g.responses.push_back(sample_candidate(policy, candidates, rng));
    const int r = containment_reward(q.gold_answers, g.responses.back().answer).value;
    g.rewards.push_back(r);
    rewards.push_back(r);
  }
  g.advantages = compute_advantages(rewards, norm);
  return g;
}

LossAndGrad grpo_generator_loss(const MatrixXd& features, const VectorXd& phi,
                                double tau,
                                std::span<const std::size_t> sampled,
                                std::span<const double> advantages) {
  if (sampled.size() != advantages.size() || sampled.empty()) {
    throw ContractViolation("grpo_generator_loss: malformed group");
  }
  LossAndGrad out{0.0, VectorXd::Zero(phi.size())};
  if (std::all_of(advantages.begin(), advantages.end(),
                  [](double a) { return a == 0.0; })) {
    return out;
  }
  const VectorXd logp = log_softmax((features * phi) / tau);
  const VectorXd probs = logp.array().exp().matrix();
  // Per-candidate weight: total advantage of the responses that picked it.
  VectorXd weights = VectorXd::Zero(features.rows());
  for (std::size_t i = 0; i < sampled.size(); ++i) {
    if (static_cast<Eigen::Index>(sampled[i]) >= features.rows()) {
      throw ContractViolation("grpo_generator_loss: response index out of range");
    }
    weights[sampled[i]] += advantages[i];
  }
  const double g = static_cast<double>(sampled.size());
  out.loss = -weights.dot(logp) / g;
  out.grad = -weighted_log_softmax_grad(features, probs, weights) / (g * tau);
  return out;
}

LossAndGrad grpo_generator_loss(const GeneratorPolicy& policy,
                                const RolloutGroup& group, const Query& q,
                                const Corpus& corpus,
                                const CandidateConfig& cfg) {
  if (group.responses.size() != group.advantages.size()) {
    throw ContractViolation("grpo_generator_loss: malformed group");
  }
  std::vector<std::size_t> sampled;
  for (const auto& r : group.responses) sampled.push_back(r.candidate);
  const auto candidates = build_candidates(q, group.selected, corpus, cfg);
  return grpo_generator_loss(candidate_matrix(candidates), policy.phi,
                             policy.tau, sampled, group.advantages);
}

GeneratorPolicy update_generator(const GeneratorPolicy& policy,
                                 const VectorXd& gradient,
                                 double learning_rate) {
  if (gradient.size() != policy.phi.size()) {
    throw ContractViolation("update_generator: gradient dimension mismatch");
  }
  if (!gradient.allFinite()) {
    throw NonFiniteGradient("generator gradient is not finite; step aborted");
  }
  return GeneratorPolicy(policy.phi - learning_rate * gradient, policy.tau);
}

}  // namespace corag
