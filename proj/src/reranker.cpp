// SPDX-License-Identifier: Apache-2.0
#include "corag/reranker.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace corag {

RerankerPolicy::RerankerPolicy(VectorXd t) : theta(std::move(t)) {
  if (theta.size() != kRerankFeatureDim) {
    throw ContractViolation("reranker theta must have dimension " +
                            std::to_string(kRerankFeatureDim));
  }
  if (!theta.allFinite()) throw ContractViolation("reranker theta not finite");
}

std::vector<std::string> SelectedSet::ids() const {
  std::vector<std::string> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.doc_id);
  return out;
}

VectorXd reranker_features(const Query& q, const Document& d) {
  const std::unordered_set<std::string> query_tokens(q.text.begin(),
                                                     q.text.end());
  double overlap = 0.0;
  std::unordered_set<std::string> present;
  for (const auto& tok : d.text) {
    if (query_tokens.count(tok)) {
      overlap += 1.0;
      present.insert(tok);
    }
  }
  const double len = static_cast<double>(d.text.size());
  VectorXd f(kRerankFeatureDim);
  f << overlap, overlap / len,
      query_tokens.empty()
          ? 0.0
          : static_cast<double>(present.size()) / query_tokens.size(),
      len / kRerankLengthScale, 1.0;
  return f;
}

MatrixXd candidate_features(const Query& q, const Corpus& corpus) {
  MatrixXd x(q.num_candidates(), kRerankFeatureDim);
  for (std::size_t i = 0; i < q.num_candidates(); ++i) {
    x.row(i) = reranker_features(q, corpus.at(q.candidate_doc_ids[i]));
  }
  return x;
}

double score(const RerankerPolicy& policy, const Query& q, const Document& d) {
  if (policy.theta.size() != kRerankFeatureDim) {
    throw ContractViolation("score: theta dimension mismatch");
  }
  return policy.theta.dot(reranker_features(q, d));
}

std::vector<std::size_t> top_k_indices(const VectorXd& scores,
                                       std::span<const std::string> ids,
                                       std::size_t k) {
  if (static_cast<std::size_t>(scores.size()) != ids.size()) {
    throw ContractViolation("top_k_indices: scores/ids size mismatch");
  }
  if (k == 0) throw ContractViolation("top_k_indices: k must be >= 1");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t m = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + m, order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return ids[a] < ids[b];
                    });
  order.resize(m);
  return order;
}

SelectedSet rank_and_select(const RerankerPolicy& policy, const Query& q,
                            const Corpus& corpus, std::size_t k) {
  corpus.check_resolvable(q);
  const VectorXd scores = candidate_features(q, corpus) * policy.theta;
  SelectedSet out;
  for (auto i : top_k_indices(scores, q.candidate_doc_ids, k)) {
    out.docs.push_back({q.candidate_doc_ids[i], scores[i]});
  }
  return out;
}

VectorXd softmax_distribution(const RerankerPolicy& policy, const Query& q,
                              const Corpus& corpus) {
  return softmax(candidate_features(q, corpus) * policy.theta);
}

LossAndGrad grpo_rerank_loss(const MatrixXd& features, const VectorXd& theta,
                             const VectorXd& advantages) {
  if (advantages.size() != features.rows()) {
    throw ContractViolation("grpo_rerank_loss: advantages not aligned");
  }
  LossAndGrad out{0.0, VectorXd::Zero(theta.size())};
  const auto active = (advantages.array() != 0.0).count();
  if (active == 0) return out;

  const VectorXd scores = features * theta;
  const VectorXd logp = log_softmax(scores);
  const VectorXd probs = logp.array().exp().matrix();
  const double scale = 1.0 / static_cast<double>(active);
  out.loss = -scale * advantages.dot(logp);
  out.grad = -scale * weighted_log_softmax_grad(features, probs, advantages);
  return out;
}

RankLoss margin_rank_loss(const MatrixXd& positive_features,
                          const MatrixXd& negative_features,
                          const VectorXd& theta, double gamma) {
  if (!(gamma > 0.0)) throw ContractViolation("margin_rank_loss: gamma <= 0");
  RankLoss out;
  out.grad = VectorXd::Zero(theta.size());
  if (positive_features.rows() == 0 || negative_features.rows() == 0) {
    out.skipped = true;
    return out;
  }
  const VectorXd pos = positive_features * theta;
  const VectorXd neg = negative_features * theta;
  for (Eigen::Index i = 0; i < pos.size(); ++i) {
    for (Eigen::Index j = 0; j < neg.size(); ++j) {
      ++out.pairs;
      const double arg = neg[j] - pos[i] + gamma;
      // Exactly at the kink the pair contributes nothing.
      if (arg > 0.0) {
        out.loss += arg;
        out.grad += negative_features.row(j).transpose() -
                    positive_features.row(i).transpose();
      }
    }
  }
  return out;
}

LossAndGrad grpo_rerank_loss(const RerankerPolicy& policy, const Query& q,
                             const Corpus& corpus, const VectorXd& advantages) {
  return grpo_rerank_loss(candidate_features(q, corpus), policy.theta,
                          advantages);
}

namespace {

MatrixXd feature_rows(const Query& q, const Corpus& corpus,
                      const std::vector<std::string>& ids) {
  MatrixXd x(ids.size(), kRerankFeatureDim);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    x.row(i) = reranker_features(q, corpus.at(ids[i]));
  }
  return x;
}

}  // namespace

RankLoss margin_rank_loss(const RerankerPolicy& policy, const Query& q,
                          const Corpus& corpus,
                          const std::vector<std::string>& positives,
                          const std::vector<std::string>& negatives,
                          double gamma) {
  const std::unordered_set<std::string> pos(positives.begin(), positives.end());
  for (const auto& n : negatives) {
    if (pos.count(n)) {
      throw ContractViolation("margin_rank_loss: " + n +
                              " is both positive and negative");
    }
  }
  return margin_rank_loss(feature_rows(q, corpus, positives),
                          feature_rows(q, corpus, negatives), policy.theta,
                          gamma);
}

RerankerPolicy update_reranker(const RerankerPolicy& policy,
                               const VectorXd& gradient, double learning_rate) {
  if (gradient.size() != policy.theta.size()) {
    throw ContractViolation("update_reranker: gradient dimension mismatch");
  }
  if (!gradient.allFinite()) {
    throw NonFiniteGradient("reranker gradient is not finite; step aborted");
  }
  return RerankerPolicy(policy.theta - learning_rate * gradient);
}

}  // namespace corag
