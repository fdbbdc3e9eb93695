// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "corag/core.hpp"
#include "corag/credit.hpp"
#include "corag/generator.hpp"
#include "corag/reranker.hpp"
#include "corag/rng.hpp"

namespace corag {

enum class TrainingMode { kJoint, kRerankerOnly, kGeneratorOnly };

/// Accepts `joint`, `reranker_only`, `generator_only` and the hyphenated
/// spellings.
TrainingMode parse_training_mode(std::string_view s);
std::string_view to_string(TrainingMode m);

struct TrainerConfig {
  int iterations = 200;
  int k_train = 1;
  int k_infer = 3;
  double alpha = 0.1;
  double gamma = 1.0;
  double lr_reranker = 0.05;
  double lr_generator = 0.01;
  int group_size = 8;
  double temperature = 0.7;
  /// Negative means 10% of `iterations`.
  int warm_start_iters = -1;
  AdvantageNorm advantage_norm = AdvantageNorm::kMeanStd;
  std::uint64_t seed = 42;
  TrainingMode training_mode = TrainingMode::kJoint;
  int max_ngram = 2;
  int max_candidates = 256;
  /// Write a checkpoint every this many iterations; 0 writes only the final one.
  int checkpoint_interval = 0;

  int resolved_warm_start() const;
  CandidateConfig candidates() const;

  /// Throws ContractViolation listing every invalid field.
  void validate() const;
};

nlohmann::json config_to_json(const TrainerConfig& c);

/// Strict parse: unknown keys and ill-typed values are reported together.
TrainerConfig config_from_json(const nlohmann::json& j);
TrainerConfig load_config(const std::filesystem::path& path);

/// Hash of every field that shapes the trajectory (iterations and
/// checkpoint_interval excluded), as 16 hex digits.
std::string config_hash(const TrainerConfig& c);

struct IterationMetrics {
  int iteration = 0;
  double mean_reward = 0.0;
  double accuracy = 0.0;
  double hit_at_1 = 0.0;
  double loss_rank = 0.0;
  double loss_gen = 0.0;
  int rank_skips = 0;
  int flat_groups = 0;
  int update_aborts = 0;

  friend bool operator==(const IterationMetrics&,
                         const IterationMetrics&) = default;
};

inline constexpr const char* kMetricsHeader =
    "iteration,mean_reward,accuracy,hit_at_1,loss_rank,loss_gen,rank_skips,"
    "flat_groups";

std::string format_metrics_row(const IterationMetrics& m);

struct TrainState {
  RerankerPolicy reranker;
  GeneratorPolicy generator;
  SuccessLedger ledger;
  /// Completed iterations (epochs over the dataset).
  int iteration = 0;
  std::vector<IterationMetrics> metrics;
};

TrainState initial_state(const TrainerConfig& config);

struct StepMetrics {
  double mean_reward = 0.0;
  double loss_rank = 0.0;
  double loss_gen = 0.0;
  bool rank_skipped = false;
  bool flat_group = false;
  bool warm_start = false;
  int update_aborts = 0;
  SelectedSet selected;
  PreferenceLabels labels;
  RolloutGroup group;
};

/// One pass of the cooperative inner loop for a single query: select,
/// roll out, reward, record, label, update reranker, update generator.
StepMetrics train_step(TrainState& state, const Query& q, const Corpus& corpus,
                       const TrainerConfig& config, Rng& rng);

/// Stream used by train_step for (query, iteration).
Rng step_rng(const TrainerConfig& config, const std::string& query_id,
             int iteration);

/// Visiting order of the dataset in a given iteration.
std::vector<std::size_t> query_order(const TrainerConfig& config,
                                     std::size_t num_queries, int iteration);

struct EvalMetrics {
  int k = 0;
  int effective_k = 0;  // k clamped to the largest candidate set
  bool clamped = false;
  std::size_t queries = 0;
  double accuracy = 0.0;
  double hit_at_k = 0.0;
};

nlohmann::json eval_to_json(const EvalMetrics& m);

/// Greedy evaluation: top-k selection, argmax answer, containment reward.
EvalMetrics evaluate(const TrainState& state, const Dataset& dataset,
                     const Corpus& corpus, int k,
                     const CandidateConfig& cfg = {});

struct TrainOptions {
  /// Directory for checkpoints; empty disables them.
  std::filesystem::path checkpoint_dir;
  /// Metrics CSV, appended to; empty disables it.
  std::filesystem::path metrics_csv;
  std::function<void(const IterationMetrics&)> on_iteration;
};

/// Runs iterations state.iteration .. config.iterations - 1.
void train(TrainState& state, const Dataset& dataset, const Corpus& corpus,
           const TrainerConfig& config, const TrainOptions& options = {});

TrainState train(const Dataset& dataset, const Corpus& corpus,
                 const TrainerConfig& config, const TrainOptions& options = {});

}  // namespace corag
