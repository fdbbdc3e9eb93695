// SPDX-License-Identifier: Apache-2.0
// Acceptance checks: one PASS/FAIL line per criterion with its runtime.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "corag/checkpoint.hpp"
#include "corag/credit.hpp"
#include "corag/generator.hpp"
#include "corag/reranker.hpp"
#include "corag/synthenv.hpp"
#include "corag/trainer.hpp"
#include "support/oracles.hpp"

namespace {

using namespace corag;
using corag::testing::brute_force_ngrams;
using corag::testing::brute_force_top_k;
using corag::testing::central_difference;
using corag::testing::random_matrix;
using corag::testing::random_vector;
using corag::testing::relative_error;
namespace fs = std::filesystem;

/// Collects failed conditions for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::string s;
    for (const auto& n : notes_) s += (s.empty() ? "" : "; ") + n;
    for (const auto& f : failures_) s += (s.empty() ? "failed: " : "; failed: ") + f;
    if (failed_ > static_cast<int>(failures_.size())) {
      s += "; +" + std::to_string(failed_ - static_cast<int>(failures_.size())) + " more";
    }
    return s;
  }

 private:
  int failed_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SynthSpec reference_spec() {
  SynthSpec s;
  s.num_queries = 200;
  s.candidates_per_query = 10;
  s.gold_docs_per_query = 1;
  s.distractor_overlap = 0.4;
  s.vocab_size = 500;
  s.doc_length = 20;
  s.answer_ngram_len = 1;
  s.seed = 42;
  return s;
}

TrainerConfig reference_config(TrainingMode mode = TrainingMode::kJoint) {
  TrainerConfig c;
  c.iterations = 200;
  c.seed = 42;
  c.training_mode = mode;
  return c;
}

const SynthTask& reference_task() {
  static const SynthTask task = generate_task(reference_spec());
  return task;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("corag-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

/// The joint reference run, trained once and shared.
const TrainState& reference_run() {
  static const TrainState state = [] {
    TrainOptions opts;
    opts.metrics_csv = scratch_dir() / "reference-a.csv";
    return train(reference_task().dataset, reference_task().corpus, reference_config(), opts);
  }();
  return state;
}

// ---------------------------------------------------------------- criteria

void formula_oracles(Check& c) {
  c.expect(smoothed_parameter(0.0, 0.1) == 0.1, "p(0) == alpha");
  c.expect(smoothed_parameter(1.0, 0.1) == 0.9, "p(1) == 1 - alpha");
  for (double alpha : {0.01, 0.2, 0.45}) {
    c.expect(smoothed_parameter(0.0, alpha) == alpha, "p(0) == alpha at " + fmt(alpha));
    c.expect(smoothed_parameter(1.0, alpha) == 1.0 - alpha, "p(1) at " + fmt(alpha));
  }

  const MatrixXd pos = MatrixXd::Constant(1, 1, 0.2), neg = MatrixXd::Constant(1, 1, 0.5);
  const VectorXd one = VectorXd::Ones(1);
  const auto violated = margin_rank_loss(pos, neg, one, 1.0);
  c.expect(violated.loss == 1.3, "hinge example loss 1.3, got " + fmt(violated.loss));
  const auto satisfied = margin_rank_loss(MatrixXd::Constant(1, 1, 2.5), neg, one, 1.0);
  c.expect(satisfied.loss == 0.0 && satisfied.grad[0] == 0.0, "satisfied margin gives zero");

  const std::vector<double> r4 = {1, 0, 0, 1};
  const auto a4 = compute_advantages(r4);
  const double expect4[] = {1, -1, -1, 1};
  for (int i = 0; i < 4; ++i) c.expect(std::abs(a4[i] - expect4[i]) < 1e-6, "[1,0,0,1] advantages");
  const std::vector<double> r1 = {1, 0, 0, 0};
  const auto a1 = compute_advantages(r1);
  c.expect(std::abs(a1[0] - std::sqrt(3.0)) < 1e-6, "[1,0,0,0] leading advantage");
  for (int i = 1; i < 4; ++i) {
    c.expect(std::abs(a1[i] + 1.0 / std::sqrt(3.0)) < 1e-6, "[1,0,0,0] trailing advantage");
  }
  const std::vector<double> flat = {1, 1, 1, 1};
  for (double a : compute_advantages(flat)) c.expect(a == 0.0, "flat group gives zero");
}

void gradient_checks(Check& c) {
  Rng rng(Rng::derive(2024, "acceptance/gradients"));
  double worst_margin = 0, worst_rerank = 0, worst_gen = 0;

  for (int done = 0; done < 100;) {
    const auto np = static_cast<Eigen::Index>(1 + rng.index(4));
    const auto nn = static_cast<Eigen::Index>(1 + rng.index(5));
    const MatrixXd pos = random_matrix(rng, np, kRerankFeatureDim, 0, 3);
    const MatrixXd neg = random_matrix(rng, nn, kRerankFeatureDim, 0, 3);
    const VectorXd theta = random_vector(rng, kRerankFeatureDim, -1, 1);
    const double gamma = corag::testing::uniform(rng, 0.5, 2.0);
    const VectorXd sp = pos * theta, sn = neg * theta;
    bool near_kink = false;
    for (Eigen::Index i = 0; i < np; ++i)
      for (Eigen::Index j = 0; j < nn; ++j) near_kink |= std::abs(gamma - sp[i] + sn[j]) < 1e-3;
    if (near_kink) continue;
    const auto r = margin_rank_loss(pos, neg, theta, gamma);
    const auto fd = central_difference(
        [&](const VectorXd& t) { return margin_rank_loss(pos, neg, t, gamma).loss; }, theta);
    worst_margin = std::max(worst_margin, relative_error(r.grad, fd));
    ++done;
  }

  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng.index(12));
    const MatrixXd x = random_matrix(rng, n, kRerankFeatureDim, 0, 3);
    const VectorXd theta = random_vector(rng, kRerankFeatureDim, -1, 1);
    VectorXd adv = random_vector(rng, n, -2, 2);
    const auto r = grpo_rerank_loss(x, theta, adv);
    const auto fd = central_difference(
        [&](const VectorXd& t) { return grpo_rerank_loss(x, t, adv).loss; }, theta);
    worst_rerank = std::max(worst_rerank, relative_error(r.grad, fd));
  }

  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng.index(8));
    const MatrixXd x = random_matrix(rng, n, kGenFeatureDim, -1, 1);
    const VectorXd phi = random_vector(rng, kGenFeatureDim, -1, 1);
    const double tau = corag::testing::uniform(rng, 0.3, 2.0);
    const std::size_t g = 2 + rng.index(8);
    std::vector<std::size_t> sampled(g);
    std::vector<double> adv(g);
    for (std::size_t i = 0; i < g; ++i) {
      sampled[i] = rng.index(static_cast<std::size_t>(n));
      adv[i] = corag::testing::uniform(rng, -2, 2);
    }
    const auto r = grpo_generator_loss(x, phi, tau, sampled, adv);
    const auto fd = central_difference(
        [&](const VectorXd& p) { return grpo_generator_loss(x, p, tau, sampled, adv).loss; }, phi);
    worst_gen = std::max(worst_gen, relative_error(r.grad, fd));
  }

  c.note("max rel err margin " + fmt(worst_margin) + ", rerank " + fmt(worst_rerank) +
         ", generator " + fmt(worst_gen));
  c.expect(worst_margin < 1e-5, "margin gradient");
  c.expect(worst_rerank < 1e-5, "rerank gradient");
  c.expect(worst_gen < 1e-5, "generator gradient");
}

void label_distribution(Check& c) {
  const double alpha = 0.1;
  const int draws = 10000;
  Rng rng(Rng::derive(2024, "acceptance/labels"));
  const std::vector<std::pair<double, LedgerEntry>> cases = {
      {0.0, {0, 4}}, {0.5, {2, 4}}, {0.75, {3, 4}}, {1.0, {4, 4}}};
  for (const auto& [lbar, entry] : cases) {
    SuccessLedger ledger;
    ledger.restore("q", "d", entry);
    int positives = 0;
    for (int i = 0; i < draws; ++i) {
      positives += static_cast<int>(sample_labels(ledger, "q", {"d"}, alpha, rng).positives.size());
    }
    const double p = alpha + (1 - 2 * alpha) * lbar;
    const double freq = static_cast<double>(positives) / draws;
    const double bound = 3 * std::sqrt(p * (1 - p) / draws);
    c.note("lbar " + fmt(lbar) + ": " + fmt(freq) + " vs " + fmt(p));
    c.expect(std::abs(freq - p) <= bound, "frequency at lbar " + fmt(lbar));
  }
}

void brute_force_equivalence(Check& c) {
  Rng rng(Rng::derive(2024, "acceptance/brute"));
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(20);
    VectorXd scores(static_cast<Eigen::Index>(n));
    std::vector<double> raw(n);
    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse scores so ties are common.
      raw[i] = static_cast<double>(rng.index(6)) * 0.5;
      scores[static_cast<Eigen::Index>(i)] = raw[i];
      ids[i] = "d" + std::to_string(rng.next_u64() % 1000);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (ids.size() != n) {
      --trial;
      continue;
    }
    for (std::size_t i = n; i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);
    const std::size_t k = 1 + rng.index(n + 2);
    std::vector<std::string> got;
    for (std::size_t i : top_k_indices(scores, ids, k)) got.push_back(ids[i]);
    c.expect(got == brute_force_top_k(raw, ids, k), "top-k instance " + std::to_string(trial));
  }

  for (int trial = 0; trial < 200; ++trial) {
    Corpus corpus;
    std::vector<Tokens> docs;
    std::vector<std::string> ids;
    SelectedSet sel;
    for (std::size_t d = 0, nd = 1 + rng.index(4); d < nd; ++d) {
      Tokens t;
      for (std::size_t i = 0, len = 1 + rng.index(12); i < len; ++i) {
        t.push_back("t" + std::to_string(rng.index(7)));
      }
      ids.push_back("d" + std::to_string(d));
      corpus.add(Document(ids.back(), t));
      docs.push_back(t);
      sel.docs.push_back({ids.back(), 0.0});
    }
    const Query q("q", {"t0"}, {"x"}, ids);
    const int max_n = 1 + static_cast<int>(rng.index(3));
    std::vector<std::string> got;
    for (const auto& cand : build_candidates(q, sel, corpus, {max_n, 1u << 20})) {
      got.push_back(cand.text);
    }
    c.expect(got == brute_force_ngrams(docs, max_n), "n-gram instance " + std::to_string(trial));
  }

  // Ledger against a recount of the raw event log of a real training run.
  const auto& task = reference_task();
  TrainerConfig config = reference_config();
  config.k_train = 3;
  TrainState state = initial_state(config);
  std::map<std::pair<std::string, std::string>, LedgerEntry> recount;
  for (int it = 0; it < 2; ++it, ++state.iteration) {
    for (std::size_t idx : query_order(config, task.dataset.size(), it)) {
      const auto& q = task.dataset[idx];
      Rng r = step_rng(config, q.id, it);
      const auto m = train_step(state, q, task.corpus, config, r);
      for (int reward : m.group.rewards) {
        for (const auto& id : m.selected.ids()) {
          recount[{q.id, id}].trials += 1;
          recount[{q.id, id}].successes += reward;
        }
      }
    }
  }
  c.expect(state.ledger.entries() == recount, "ledger recount");
  c.note(std::to_string(recount.size()) + " ledger entries recounted");
}

void invariances(Check& c) {
  Rng rng(Rng::derive(2024, "acceptance/invariance"));
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.index(15));
    const VectorXd z = random_vector(rng, n, -5, 5);
    const double shift = static_cast<double>(static_cast<int>(rng.index(64)) - 32);
    const VectorXd a = softmax(z), b = softmax((z.array() + shift).matrix());
    c.expect((a - b).lpNorm<Eigen::Infinity>() < 1e-12, "softmax shift");
    std::vector<std::string> ids;
    VectorXd s(n), t(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      ids.push_back("d" + std::to_string(i));
      s[i] = static_cast<double>(rng.index(5));
      t[i] = s[i] + shift;
    }
    const std::size_t k = 1 + rng.index(static_cast<std::size_t>(n));
    c.expect(top_k_indices(s, ids, k) == top_k_indices(t, ids, k), "top-k shift");

    std::vector<double> rewards(2 + rng.index(10));
    for (auto& r : rewards) r = rng.bernoulli(0.5) ? 1.0 : 0.0;
    double sum = 0;
    for (double a : compute_advantages(rewards)) sum += a;
    c.expect(std::abs(sum) < 1e-9, "advantages sum to zero");

    const double alpha = 1e-3 + 0.497 * rng.uniform();
    const double p = smoothed_parameter(rng.uniform(), alpha);
    c.expect(p >= alpha && p <= 1 - alpha, "p within [alpha, 1 - alpha]");
  }

  reference_run();
  TrainOptions opts;
  opts.metrics_csv = scratch_dir() / "reference-b.csv";
  train(reference_task().dataset, reference_task().corpus, reference_config(), opts);
  const std::string a = slurp(scratch_dir() / "reference-a.csv");
  const std::string b = slurp(scratch_dir() / "reference-b.csv");
  c.expect(!a.empty() && a == b, "identical-seed runs give identical metrics CSVs");
  c.note("metrics CSVs " + std::string(a == b ? "identical" : "differ") + " (" +
         std::to_string(a.size()) + " bytes)");
}

void cooperative_convergence(Check& c) {
  const auto& task = reference_task();
  const auto config = reference_config();
  const auto untrained = evaluate(initial_state(config), task.dataset, task.corpus,
                                  config.k_infer, config.candidates());
  const auto& joint = reference_run().metrics.back();

  auto final_accuracy = [&](TrainingMode mode) {
    return train(task.dataset, task.corpus, reference_config(mode)).metrics.back().accuracy;
  };
  const double reranker_only = final_accuracy(TrainingMode::kRerankerOnly);
  const double generator_only = final_accuracy(TrainingMode::kGeneratorOnly);

  c.note("untrained " + fmt(untrained.accuracy) + ", joint " + fmt(joint.accuracy) +
         " (hit@1 " + fmt(joint.hit_at_1) + "), reranker_only " + fmt(reranker_only) +
         ", generator_only " + fmt(generator_only));
  c.expect(untrained.accuracy < 0.3, "untrained accuracy < 0.3");
  c.expect(joint.accuracy >= 0.9, "joint accuracy >= 0.9");
  c.expect(joint.hit_at_1 >= 0.9, "joint hit@1 >= 0.9");
  c.expect(joint.accuracy >= reranker_only, "joint >= reranker_only");
  c.expect(joint.accuracy >= generator_only, "joint >= generator_only");
}

void top_n_robustness(Check& c) {
  const auto& task = reference_task();
  const auto config = reference_config();
  const fs::path ck = scratch_dir() / "reference.jsonl";
  save_checkpoint(ck, reference_run(), config);
  const auto loaded = load_checkpoint(ck);
  const auto at1 = evaluate(loaded.state, task.dataset, task.corpus, 1, config.candidates());
  const auto at5 = evaluate(loaded.state, task.dataset, task.corpus, 5, config.candidates());
  c.note("accuracy k=1 " + fmt(at1.accuracy) + ", k=5 " + fmt(at5.accuracy));
  c.expect(at5.accuracy >= at1.accuracy - 0.02, "k=5 within 0.02 of k=1");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Check&)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "formula oracles", 1, formula_oracles},
      {2, "gradient checks", 10, gradient_checks},
      {3, "label distribution", 5, label_distribution},
      {4, "brute-force equivalence", 10, brute_force_equivalence},
      {5, "invariances and determinism", 30, invariances},
      {6, "cooperative convergence", 300, cooperative_convergence},
      {7, "top-n robustness", 60, top_n_robustness},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    check.expect(secs < cr.budget_s, "runtime over " + fmt(cr.budget_s) + " s");
    const bool ok = check.ok();
    failed += ok ? 0 : 1;
    std::printf("%s criterion %d: %s (%.2f s) %s\n", ok ? "PASS" : "FAIL", cr.id, cr.name,
                secs, check.summary().c_str());
  }
  std::error_code ec;
  fs::remove_all(scratch_dir(), ec);
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
