// SPDX-License-Identifier: Apache-2.0
#include "corag/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "corag/io.hpp"

namespace corag {

using nlohmann::json;

namespace {

std::vector<double> to_std(const VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

VectorXd from_std(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json next_record(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError(std::string("checkpoint truncated: missing ") + what);
  }
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("checkpoint ") + what + ": " + e.what());
  }
}

void expect_fragment(const json& j, const char* name, const char* feature_map,
                     int dim) {
  if (j.value("fragment", "") != name) {
    throw IoError(std::string("checkpoint: expected ") + name + " fragment");
  }
  if (feature_map && j.value("feature_map", "") != feature_map) {
    throw IoError(std::string("checkpoint: ") + name +
                  " feature map mismatch, expected " + feature_map);
  }
  if (dim > 0 && j.value("dim", -1) != dim) {
    throw IoError(std::string("checkpoint: ") + name + " dimension mismatch");
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const TrainState& state,
                      const TrainerConfig& config) {
  out << json{{"format", "corag-checkpoint"},
              {"version", kCheckpointVersion},
              {"iteration", state.iteration},
              {"config_hash", config_hash(config)},
              {"config", config_to_json(config)}}
             .dump()
      << '\n';
  out << json{{"fragment", "reranker"},
              {"feature_map", kRerankFeatureMap},
              {"dim", kRerankFeatureDim},
              {"theta", to_std(state.reranker.theta)}}
             .dump()
      << '\n';
  out << json{{"fragment", "generator"},
              {"feature_map", kGenFeatureMap},
              {"dim", kGenFeatureDim},
              {"phi", to_std(state.generator.phi)},
              {"tau", state.generator.tau}}
             .dump()
      << '\n';
  out << json{{"fragment", "ledger"}, {"records", state.ledger.size()}}.dump()
      << '\n';
  write_ledger(out, state.ledger);
}

Checkpoint read_checkpoint(std::istream& in) {
  Checkpoint ck;
  const json header = next_record(in, "header");
  if (header.value("format", "") != "corag-checkpoint") {
    throw IoError("not a checkpoint file");
  }
  if (header.value("version", -1) != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " +
                  header.value("version", json(-1)).dump());
  }
  try {
    ck.config = config_from_json(header.at("config"));
    ck.state.iteration = header.at("iteration").get<int>();
    ck.config_hash = header.at("config_hash").get<std::string>();

    const json rr = next_record(in, "reranker");
    expect_fragment(rr, "reranker", kRerankFeatureMap, kRerankFeatureDim);
    ck.state.reranker =
        RerankerPolicy(from_std(rr.at("theta").get<std::vector<double>>()));

    const json gen = next_record(in, "generator");
    expect_fragment(gen, "generator", kGenFeatureMap, kGenFeatureDim);
    ck.state.generator =
        GeneratorPolicy(from_std(gen.at("phi").get<std::vector<double>>()),
                        gen.at("tau").get<double>());

    const json led = next_record(in, "ledger");
    expect_fragment(led, "ledger", nullptr, 0);
    const auto records = led.at("records").get<std::size_t>();
    std::ostringstream body;
    std::string line;
    for (std::size_t i = 0; i < records; ++i) {
      if (!std::getline(in, line)) throw IoError("checkpoint ledger truncated");
      body << line << '\n';
    }
    std::istringstream ledger_in(body.str());
    ck.state.ledger = read_ledger(ledger_in);
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
  if (ck.config_hash != config_hash(ck.config)) {
    throw IoError("checkpoint: config hash does not match embedded config");
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const TrainerConfig& config) {
  std::ostringstream ss;
  write_checkpoint(ss, state, config);
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, ss.str());
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  try {
    return read_checkpoint(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace corag
