// SPDX-License-Identifier: Apache-2.0
// Command-line driver: gen-data, train, eval, sweep-topn.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "corag/checkpoint.hpp"
#include "corag/io.hpp"
#include "corag/synthenv.hpp"
#include "corag/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// SHA-1 over "blob <size>\0<content>", the way git names file contents.
std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx, header.data(), header.size());
  EVP_DigestUpdate(ctx, content.data(), content.size());
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

struct DataPaths {
  std::string dir;
  std::string corpus;
  std::string dataset;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--data", dir, "Directory holding corpus.jsonl and dataset.jsonl");
    cmd->add_option("--corpus", corpus, "Corpus file (overrides --data)");
    cmd->add_option("--dataset", dataset, "Dataset file (overrides --data)");
  }
  fs::path corpus_path() const {
    return corpus.empty() ? fs::path(dir) / "corpus.jsonl" : fs::path(corpus);
  }
  fs::path dataset_path() const {
    return dataset.empty() ? fs::path(dir) / "dataset.jsonl" : fs::path(dataset);
  }
  void require() const {
    if (dir.empty() && (corpus.empty() || dataset.empty())) {
      throw CLI::ValidationError("--data or both --corpus and --dataset are required");
    }
  }
};

json input_record(const fs::path& p, const std::string& bytes) {
  return {{"path", p.string()}, {"git_blob_sha1", git_blob_hash(bytes)}};
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
  corag::SynthSpec spec;
  std::string out;
};

void run_gen_data(const GenDataArgs& a) {
  const auto task = corag::generate_task(a.spec);
  fs::create_directories(a.out);
  const fs::path dir(a.out);
  corag::save_corpus(dir / "corpus.jsonl", task.corpus);
  corag::save_dataset(dir / "dataset.jsonl", task.dataset);
  corag::write_file(dir / "synth_spec.json", json(a.spec).dump(2) + "\n");
  std::cout << "wrote " << task.dataset.size() << " queries and "
            << task.corpus.size() << " documents to " << dir.string() << "\n";
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string config_file;
  DataPaths data;
  std::string out;
  std::string mode;
  std::string resume;
  json overrides = json::object();
};

template <typename T>
void add_override(CLI::App* cmd, TrainArgs& a, const std::string& key) {
  cmd->add_option_function<T>(
      "--" + key, [&a, key](const T& v) { a.overrides[key] = v; },
      "Override config key " + key);
}

corag::TrainerConfig effective_config(const TrainArgs& a) {
  json j = json::object();
  if (!a.config_file.empty()) {
    const std::string text = corag::read_file(a.config_file);
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw corag::ContractViolation(a.config_file + ": " + e.what());
    }
    if (!j.is_object()) {
      throw corag::ContractViolation(a.config_file + ": config must be a JSON object");
    }
  }
  if (const char* env = std::getenv("CORAG_SEED")) {
    try {
      j["seed"] = std::stoull(env);
    } catch (const std::exception&) {
      throw corag::ContractViolation("CORAG_SEED is not an unsigned integer");
    }
  }
  for (const auto& [k, v] : a.overrides.items()) j[k] = v;
  if (!a.mode.empty()) {
    j["training_mode"] = std::string(
        corag::to_string(corag::parse_training_mode(a.mode)));
  }
  return corag::config_from_json(j);
}

/// Keeps the header and rows up to `iteration`.
void truncate_metrics(const fs::path& csv, int iteration) {
  if (!fs::exists(csv)) return;
  std::istringstream in(corag::read_file(csv));
  std::string line, kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (header || std::stoi(line) <= iteration) kept += line + "\n";
    header = false;
  }
  corag::write_file(csv, kept);
}

void run_train(const TrainArgs& a) {
  a.data.require();
  const auto config = effective_config(a);
  const std::string corpus_bytes = corag::read_file(a.data.corpus_path());
  const std::string dataset_bytes = corag::read_file(a.data.dataset_path());
  const auto corpus = corag::load_corpus(a.data.corpus_path());
  const auto dataset = corag::load_dataset(a.data.dataset_path());

  const fs::path out(a.out);
  fs::create_directories(out);
  const fs::path csv = out / "metrics.csv";

  corag::TrainState state = corag::initial_state(config);
  if (!a.resume.empty()) {
    auto ck = corag::load_checkpoint(a.resume);
    if (ck.config_hash != corag::config_hash(config)) {
      throw corag::ContractViolation(
          "checkpoint was written under a different config (hash " +
          ck.config_hash + ", current " + corag::config_hash(config) + ")");
    }
    state = std::move(ck.state);
    truncate_metrics(csv, state.iteration);
  } else if (fs::exists(csv)) {
    fs::remove(csv);
  }

  json manifest = {
      {"command", "train"},
      {"config", corag::config_to_json(config)},
      {"config_hash", corag::config_hash(config)},
      {"inputs",
       {{"corpus", input_record(a.data.corpus_path(), corpus_bytes)},
        {"dataset", input_record(a.data.dataset_path(), dataset_bytes)}}},
      {"input_hash", git_blob_hash(corpus_bytes + dataset_bytes)},
      {"resumed_from", a.resume.empty() ? json(nullptr) : json(a.resume)},
      {"outputs",
       {{"metrics", csv.string()},
        {"checkpoints", (out / "checkpoints").string()},
        {"final_checkpoint", (out / "checkpoints" / "checkpoint-final.jsonl").string()}}}};
  if (!a.data.dir.empty() && fs::exists(fs::path(a.data.dir) / "synth_spec.json")) {
    manifest["synth_spec"] =
        json::parse(corag::read_file(fs::path(a.data.dir) / "synth_spec.json"));
  }
  corag::write_file(out / "manifest.json", manifest.dump(2) + "\n");
  corag::write_file(out / "config.json", corag::config_to_json(config).dump(2) + "\n");

  corag::TrainOptions opts;
  opts.checkpoint_dir = out / "checkpoints";
  opts.metrics_csv = csv;
  opts.on_iteration = [&](const corag::IterationMetrics& m) {
    std::cerr << corag::format_metrics_row(m) << "\n";
  };
  corag::train(state, dataset, corpus, config, opts);
  std::cout << "trained " << state.iteration << " iterations ("
            << corag::to_string(config.training_mode) << "); metrics in "
            << csv.string() << "\n";
}

// --------------------------------------------------------------- eval/sweep

struct EvalArgs {
  std::string checkpoint;
  DataPaths data;
  int k = 0;
  std::string out;
};

void run_eval(const EvalArgs& a) {
  a.data.require();
  if (!fs::exists(a.checkpoint)) {
    throw corag::IoError("checkpoint not found: " + a.checkpoint);
  }
  const auto ck = corag::load_checkpoint(a.checkpoint);
  const auto corpus = corag::load_corpus(a.data.corpus_path());
  const auto dataset = corag::load_dataset(a.data.dataset_path());
  const int k = a.k > 0 ? a.k : ck.config.k_infer;
  const auto m = corag::evaluate(ck.state, dataset, corpus, k, ck.config.candidates());
  const std::string record = corag::eval_to_json(m).dump();
  std::cout << record << "\n";
  if (!a.out.empty()) corag::write_file(a.out, record + "\n");
}

struct SweepArgs {
  std::string checkpoint;
  DataPaths data;
  std::vector<int> ks{1, 3, 5};
  std::string out;
};

void run_sweep(const SweepArgs& a) {
  a.data.require();
  if (a.ks.empty()) throw CLI::ValidationError("--ks must list at least one k");
  for (int k : a.ks) {
    if (k < 1) throw CLI::ValidationError("--ks values must be >= 1");
  }
  if (!fs::exists(a.checkpoint)) {
    throw corag::IoError("checkpoint not found: " + a.checkpoint);
  }
  const auto ck = corag::load_checkpoint(a.checkpoint);
  const auto corpus = corag::load_corpus(a.data.corpus_path());
  const auto dataset = corag::load_dataset(a.data.dataset_path());

  std::ostringstream csv;
  csv << "k,effective_k,accuracy,hit_at_k,clamped\n";
  for (int k : a.ks) {
    const auto m = corag::evaluate(ck.state, dataset, corpus, k, ck.config.candidates());
    char row[128];
    std::snprintf(row, sizeof row, "%d,%d,%.9g,%.9g,%d\n", m.k, m.effective_k,
                  m.accuracy, m.hit_at_k, m.clamped ? 1 : 0);
    csv << row;
    if (m.clamped) {
      std::cerr << "note: k=" << k << " exceeds the candidate count; clamped to "
                << m.effective_k << "\n";
    }
  }
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    corag::write_file(a.out, csv.str());
    std::cout << "wrote " << a.ks.size() << " rows to " << a.out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative reranker/generator training on synthetic retrieval tasks"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic corpus and dataset");
  gen_cmd->add_option("--queries", gen.spec.num_queries, "Number of queries");
  gen_cmd->add_option("--candidates", gen.spec.candidates_per_query, "Candidates per query");
  gen_cmd->add_option("--gold-docs", gen.spec.gold_docs_per_query, "Gold documents per query");
  gen_cmd->add_option("--distractor-overlap", gen.spec.distractor_overlap,
                      "Fraction of query tokens leaked into distractors");
  gen_cmd->add_option("--vocab", gen.spec.vocab_size, "Vocabulary size");
  gen_cmd->add_option("--doc-length", gen.spec.doc_length, "Tokens per document");
  gen_cmd->add_option("--answer-len", gen.spec.answer_ngram_len, "Answer length in tokens");
  gen_cmd->add_option("--query-length", gen.spec.query_length, "Query length in tokens");
  gen_cmd->add_option("--answer-repeats", gen.spec.answer_repeats,
                      "Answer occurrences per gold document");
  gen_cmd->add_option("--leak-repeats", gen.spec.leak_repeats,
                      "Occurrences of each leaked query token in a distractor");
  gen_cmd->add_option("--seed", gen.spec.seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Run cooperative training");
  train_cmd->add_option("--config", tr.config_file, "JSON config file");
  tr.data.add_to(train_cmd);
  train_cmd->add_option("--out", tr.out, "Run directory")->required();
  train_cmd->add_option("--mode", tr.mode, "joint | reranker-only | generator-only");
  train_cmd->add_option("--resume", tr.resume, "Checkpoint to resume from");
  for (const char* key : {"iterations", "k_train", "k_infer", "group_size",
                          "warm_start_iters", "max_ngram", "max_candidates",
                          "checkpoint_interval"}) {
    add_override<int>(train_cmd, tr, key);
  }
  for (const char* key : {"alpha", "gamma", "lr_reranker", "lr_generator", "temperature"}) {
    add_override<double>(train_cmd, tr, key);
  }
  add_override<std::uint64_t>(train_cmd, tr, "seed");
  add_override<std::string>(train_cmd, tr, "advantage_norm");
  add_override<std::string>(train_cmd, tr, "training_mode");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  ev.data.add_to(eval_cmd);
  eval_cmd->add_option("--k", ev.k, "Documents passed to the generator (default k_infer)");
  eval_cmd->add_option("--out", ev.out, "Write the JSON record here too");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep-topn", "Accuracy as a function of k");
  sweep_cmd->add_option("--checkpoint", sw.checkpoint, "Checkpoint file")->required();
  sw.data.add_to(sweep_cmd);
  sweep_cmd->add_option("--ks", sw.ks, "Comma-separated k values")->delimiter(',');
  sweep_cmd->add_option("--out", sw.out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen_cmd) run_gen_data(gen);
    if (*train_cmd) run_train(tr);
    if (*eval_cmd) run_eval(ev);
    if (*sweep_cmd) run_sweep(sw);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
