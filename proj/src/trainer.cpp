// SPDX-License-Identifier: Apache-2.0
#include "corag/trainer.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "corag/checkpoint.hpp"
#include "corag/io.hpp"
#include "corag/reward.hpp"
#include "corag/synthenv.hpp"

namespace corag {

using nlohmann::json;

TrainingMode parse_training_mode(std::string_view s) {
  if (s == "joint") return TrainingMode::kJoint;
  if (s == "reranker_only" || s == "reranker-only") {
    return TrainingMode::kRerankerOnly;
  }
  if (s == "generator_only" || s == "generator-only") {
    return TrainingMode::kGeneratorOnly;
  }
  throw ContractViolation(
      "training_mode must be joint, reranker_only or generator_only, got " +
      std::string(s));
}

std::string_view to_string(TrainingMode m) {
  switch (m) {
    case TrainingMode::kJoint: return "joint";
    case TrainingMode::kRerankerOnly: return "reranker_only";
    case TrainingMode::kGeneratorOnly: return "generator_only";
  }
  return "joint";
}

int TrainerConfig::resolved_warm_start() const {
  return warm_start_iters >= 0 ? warm_start_iters : iterations / 10;
}

CandidateConfig TrainerConfig::candidates() const {
  return {max_ngram, static_cast<std::size_t>(max_candidates)};
}

void TrainerConfig::validate() const {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const char* field) {
    if (!ok) bad.emplace_back(field);
  };
  check(iterations >= 0, "iterations");
  check(k_train >= 1, "k_train");
  check(k_infer >= 1, "k_infer");
  check(alpha > 0.0 && alpha < 0.5, "alpha");
  check(gamma > 0.0, "gamma");
  check(lr_reranker > 0.0, "lr_reranker");
  check(lr_generator > 0.0, "lr_generator");
  check(group_size >= 2, "group_size");
  check(temperature > 0.0, "temperature");
  check(max_ngram >= 1, "max_ngram");
  check(max_candidates >= 1, "max_candidates");
  check(checkpoint_interval >= 0, "checkpoint_interval");
  if (!bad.empty()) {
    std::string msg = "invalid config values:";
    for (const auto& b : bad) msg += " " + b;
    throw ContractViolation(msg);
  }
}

json config_to_json(const TrainerConfig& c) {
  return {{"iterations", c.iterations},
          {"k_train", c.k_train},
          {"k_infer", c.k_infer},
          {"alpha", c.alpha},
          {"gamma", c.gamma},
          {"lr_reranker", c.lr_reranker},
          {"lr_generator", c.lr_generator},
          {"group_size", c.group_size},
          {"temperature", c.temperature},
          {"warm_start_iters", c.resolved_warm_start()},
          {"advantage_norm", std::string(to_string(c.advantage_norm))},
          {"seed", c.seed},
          {"training_mode", std::string(to_string(c.training_mode))},
          {"max_ngram", c.max_ngram},
          {"max_candidates", c.max_candidates},
          {"checkpoint_interval", c.checkpoint_interval}};
}

TrainerConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ContractViolation("config must be a JSON object");
  TrainerConfig c;
  std::vector<std::string> bad;
  auto field = [&](const char* key, auto& dst) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
      using T = std::decay_t<decltype(dst)>;
      if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw std::invalid_argument("type");
      } else {
        if (!it->is_number()) throw std::invalid_argument("type");
      }
      dst = it->template get<std::decay_t<decltype(dst)>>();
    } catch (const std::exception&) {
      bad.push_back(std::string(key) + " (bad value)");
    }
  };
  field("iterations", c.iterations);
  field("k_train", c.k_train);
  field("k_infer", c.k_infer);
  field("alpha", c.alpha);
  field("gamma", c.gamma);
  field("lr_reranker", c.lr_reranker);
  field("lr_generator", c.lr_generator);
  field("group_size", c.group_size);
  field("temperature", c.temperature);
  field("warm_start_iters", c.warm_start_iters);
  field("seed", c.seed);
  field("max_ngram", c.max_ngram);
  field("max_candidates", c.max_candidates);
  field("checkpoint_interval", c.checkpoint_interval);
  auto enum_field = [&](const char* key, auto parse) {
    auto it = j.find(key);
    if (it == j.end()) return;
    try {
      parse(it->get<std::string>());
    } catch (const std::exception&) {
      bad.push_back(std::string(key) + " (bad value)");
    }
  };
  enum_field("advantage_norm", [&](const std::string& s) {
    c.advantage_norm = parse_advantage_norm(s);
  });
  enum_field("training_mode", [&](const std::string& s) {
    c.training_mode = parse_training_mode(s);
  });

  static const std::set<std::string> known = {
      "iterations",   "k_train",          "k_infer",        "alpha",
      "gamma",        "lr_reranker",      "lr_generator",   "group_size",
      "temperature",  "warm_start_iters", "advantage_norm", "seed",
      "training_mode", "max_ngram",       "max_candidates", "checkpoint_interval"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) bad.push_back(key + " (unknown key)");
  }
  if (!bad.empty()) {
    std::string msg = "malformed config:";
    for (std::size_t i = 0; i < bad.size(); ++i) {
      msg += (i ? ", " : " ") + bad[i];
    }
    throw ContractViolation(msg);
  }
  c.validate();
  return c;
}

TrainerConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractViolation(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const TrainerConfig& c) {
  json j = config_to_json(c);
  j.erase("iterations");
  j.erase("checkpoint_interval");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(j.dump()));
  return buf;
}

std::string format_metrics_row(const IterationMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%d",
                m.iteration, m.mean_reward, m.accuracy, m.hit_at_1, m.loss_rank,
                m.loss_gen, m.rank_skips, m.flat_groups);
  return buf;
}

TrainState initial_state(const TrainerConfig& config) {
  TrainState s;
  s.generator = GeneratorPolicy(VectorXd::Zero(kGenFeatureDim),
                                config.temperature);
  return s;
}

Rng step_rng(const TrainerConfig& config, const std::string& query_id,
             int iteration) {
  return Rng::derive(config.seed,
                     "step/" + std::to_string(iteration) + "/" + query_id);
}

std::vector<std::size_t> query_order(const TrainerConfig& config,
                                     std::size_t num_queries, int iteration) {
  std::vector<std::size_t> order(num_queries);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::derive(config.seed, "order/" + std::to_string(iteration));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.index(i)]);
  }
  return order;
}

StepMetrics train_step(TrainState& state, const Query& q, const Corpus& corpus,
                       const TrainerConfig& config, Rng& rng) {
  corpus.check_resolvable(q);
  const auto cand_cfg = config.candidates();
  StepMetrics m;

  m.selected = rank_and_select(state.reranker, q, corpus,
                               static_cast<std::size_t>(config.k_train));
  try {
    m.group = rollout_group(state.generator, q, m.selected, corpus,
                            config.group_size, rng, cand_cfg,
                            config.advantage_norm);
  } catch (const GenerationFailure&) {
    // Nothing to say: every rollout scores 0.
    m.group.query_id = q.id;
    m.group.selected = m.selected;
    m.group.rewards.assign(static_cast<std::size_t>(config.group_size), 0);
    m.group.advantages.assign(static_cast<std::size_t>(config.group_size), 0.0);
  }
  m.mean_reward = m.group.mean_reward();
  m.flat_group = m.group.flat();

  for (int r : m.group.rewards) {
    record_outcome(state.ledger, q.id, m.selected, Reward(r));
  }

  m.warm_start = state.iteration < config.resolved_warm_start();
  m.labels = m.warm_start ? warm_start_labels(q, corpus)
                          : sample_labels(state.ledger, q.id,
                                          q.candidate_doc_ids, config.alpha, rng);

  const RankLoss rank = margin_rank_loss(state.reranker, q, corpus,
                                         m.labels.positives,
                                         m.labels.negatives, config.gamma);
  m.rank_skipped = rank.skipped;
  m.loss_rank = rank.loss;

  LossAndGrad gen{0.0, VectorXd::Zero(kGenFeatureDim)};
  if (!m.group.responses.empty()) {
    gen = grpo_generator_loss(state.generator, m.group, q, corpus, cand_cfg);
  }
  m.loss_gen = gen.loss;

  if (!rank.skipped && config.training_mode != TrainingMode::kGeneratorOnly) {
    try {
      state.reranker =
          update_reranker(state.reranker, rank.grad, config.lr_reranker);
    } catch (const NonFiniteGradient&) {
      ++m.update_aborts;
    }
  }
  if (!m.flat_group && config.training_mode != TrainingMode::kRerankerOnly) {
    try {
      state.generator =
          update_generator(state.generator, gen.grad, config.lr_generator);
    } catch (const NonFiniteGradient&) {
      ++m.update_aborts;
    }
  }
  return m;
}

json eval_to_json(const EvalMetrics& m) {
  return {{"k", m.k},
          {"effective_k", m.effective_k},
          {"clamped", m.clamped},
          {"queries", m.queries},
          {"accuracy", m.accuracy},
          {"hit_at_k", m.hit_at_k}};
}

EvalMetrics evaluate(const TrainState& state, const Dataset& dataset,
                     const Corpus& corpus, int k, const CandidateConfig& cfg) {
  if (k < 1) throw ContractViolation("evaluate: k must be >= 1");
  EvalMetrics out;
  out.k = k;
  std::size_t max_n = 0;
  for (const auto& q : dataset) max_n = std::max(max_n, q.num_candidates());
  out.effective_k = static_cast<int>(std::min<std::size_t>(k, max_n));
  out.clamped = static_cast<std::size_t>(k) > max_n;
  out.queries = dataset.size();
  if (dataset.empty()) return out;

  std::size_t correct = 0, hits = 0;
  for (const auto& q : dataset) {
    const auto selected = rank_and_select(state.reranker, q, corpus,
                                          static_cast<std::size_t>(k));
    if (oracle_hit_at_k(selected, q, corpus)) ++hits;
    const auto candidates = build_candidates(q, selected, corpus, cfg);
    if (candidates.empty()) continue;
    const auto answer = greedy_candidate(state.generator, candidates);
    correct += static_cast<std::size_t>(
        containment_reward(q.gold_answers, answer.answer).value);
  }
  const double n = static_cast<double>(dataset.size());
  out.accuracy = static_cast<double>(correct) / n;
  out.hit_at_k = static_cast<double>(hits) / n;
  return out;
}

namespace {

std::filesystem::path checkpoint_path(const std::filesystem::path& dir,
                                      int iteration) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "checkpoint-%06d.jsonl", iteration);
  return dir / buf;
}

}  // namespace

void train(TrainState& state, const Dataset& dataset, const Corpus& corpus,
           const TrainerConfig& config, const TrainOptions& options) {
  config.validate();
  if (dataset.empty()) throw ContractViolation("train: empty dataset");
  for (const auto& q : dataset) corpus.check_resolvable(q);

  std::ofstream csv;
  if (!options.metrics_csv.empty()) {
    const bool fresh = !std::filesystem::exists(options.metrics_csv) ||
                       std::filesystem::file_size(options.metrics_csv) == 0;
    csv.open(options.metrics_csv, std::ios::app);
    if (!csv) throw IoError("cannot open " + options.metrics_csv.string());
    if (fresh) csv << kMetricsHeader << '\n';
  }
  if (!options.checkpoint_dir.empty()) {
    std::filesystem::create_directories(options.checkpoint_dir);
  }

  const auto cand_cfg = config.candidates();
  while (state.iteration < config.iterations) {
    IterationMetrics it;
    it.iteration = state.iteration + 1;
    double reward_sum = 0.0, rank_sum = 0.0, gen_sum = 0.0;
    int rank_count = 0;
    for (std::size_t idx : query_order(config, dataset.size(), state.iteration)) {
      const Query& q = dataset[idx];
      Rng rng = step_rng(config, q.id, state.iteration);
      const StepMetrics m = train_step(state, q, corpus, config, rng);
      reward_sum += m.mean_reward;
      gen_sum += m.loss_gen;
      if (m.rank_skipped) {
        ++it.rank_skips;
      } else {
        rank_sum += m.loss_rank;
        ++rank_count;
      }
      it.flat_groups += m.flat_group ? 1 : 0;
      it.update_aborts += m.update_aborts;
    }
    const double n = static_cast<double>(dataset.size());
    it.mean_reward = reward_sum / n;
    it.loss_gen = gen_sum / n;
    it.loss_rank = rank_count ? rank_sum / rank_count : 0.0;
    ++state.iteration;

    it.accuracy = evaluate(state, dataset, corpus, config.k_infer, cand_cfg).accuracy;
    it.hit_at_1 = evaluate(state, dataset, corpus, 1, cand_cfg).hit_at_k;
    state.metrics.push_back(it);

    if (csv.is_open()) {
      csv << format_metrics_row(it) << '\n';
      csv.flush();
      if (!csv) throw IoError("write failed: " + options.metrics_csv.string());
    }
    if (!options.checkpoint_dir.empty() && config.checkpoint_interval > 0 &&
        state.iteration % config.checkpoint_interval == 0) {
      save_checkpoint(checkpoint_path(options.checkpoint_dir, state.iteration),
                      state, config);
    }
    if (options.on_iteration) options.on_iteration(it);
  }
  if (!options.checkpoint_dir.empty()) {
    save_checkpoint(options.checkpoint_dir / "checkpoint-final.jsonl", state,
                    config);
  }
}

TrainState train(const Dataset& dataset, const Corpus& corpus,
                 const TrainerConfig& config, const TrainOptions& options) {
  TrainState state = initial_state(config);
  train(state, dataset, corpus, config, options);
  return state;
}

}  // namespace corag
