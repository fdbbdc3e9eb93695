// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "corag/core.hpp"
#include "corag/softmax.hpp"

namespace corag {

/// Lexical feature map f(q, d):
///   0  query-token occurrences in the document
///   1  feature 0 divided by document length
///   2  fraction of distinct query tokens present in the document
///   3  document length / kRerankLengthScale
///   4  bias (1.0)
/// Never reads Document::gold_for.
inline constexpr int kRerankFeatureDim = 5;
inline constexpr double kRerankLengthScale = 32.0;
inline constexpr const char* kRerankFeatureMap = "lexical-v1";

VectorXd reranker_features(const Query& q, const Document& d);

/// One row per candidate, in candidate order.
MatrixXd candidate_features(const Query& q, const Corpus& corpus);

struct RerankerPolicy {
  VectorXd theta = VectorXd::Zero(kRerankFeatureDim);

  RerankerPolicy() = default;
  explicit RerankerPolicy(VectorXd t);
};

struct ScoredDocument {
  std::string doc_id;
  double score = 0.0;
};

/// Top-k documents in descending score order, ties by ascending doc id.
struct SelectedSet {
  std::vector<ScoredDocument> docs;

  std::size_t size() const { return docs.size(); }
  bool empty() const { return docs.empty(); }
  std::vector<std::string> ids() const;
};

struct LossAndGrad {
  double loss = 0.0;
  VectorXd grad;
};

struct RankLoss : LossAndGrad {
  bool skipped = false;  // one of the label sets was empty
  std::size_t pairs = 0;
};

double score(const RerankerPolicy& policy, const Query& q, const Document& d);

/// Candidate indices of the min(k, N) best scores. Ties go to the smaller id.
std::vector<std::size_t> top_k_indices(const VectorXd& scores,
                                       std::span<const std::string> ids,
                                       std::size_t k);

SelectedSet rank_and_select(const RerankerPolicy& policy, const Query& q,
                            const Corpus& corpus, std::size_t k);

VectorXd softmax_distribution(const RerankerPolicy& policy, const Query& q,
                              const Corpus& corpus);

// Feature-level kernels; the Query-level overloads below build the feature
// rows and forward here.

LossAndGrad grpo_rerank_loss(const MatrixXd& features, const VectorXd& theta,
                             const VectorXd& advantages);

RankLoss margin_rank_loss(const MatrixXd& positive_features,
                          const MatrixXd& negative_features,
                          const VectorXd& theta, double gamma);

/// -sum_i A_i log pi(d_i), averaged over candidates with nonzero advantage.
LossAndGrad grpo_rerank_loss(const RerankerPolicy& policy, const Query& q,
                             const Corpus& corpus, const VectorXd& advantages);

/// Pairwise hinge sum over (positive, negative) pairs. Empty positives or
/// negatives yield loss 0 with `skipped` set.
RankLoss margin_rank_loss(const RerankerPolicy& policy, const Query& q,
                          const Corpus& corpus,
                          const std::vector<std::string>& positives,
                          const std::vector<std::string>& negatives,
                          double gamma);

/// Plain gradient step. Throws NonFiniteGradient without touching the policy.
RerankerPolicy update_reranker(const RerankerPolicy& policy,
                               const VectorXd& gradient, double learning_rate);

}  // namespace corag
