// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>

#include "corag/trainer.hpp"

namespace corag {

inline constexpr int kCheckpointVersion = 1;

/// Line-delimited JSON: a header line (version, iteration, config, config
/// hash), a reranker line, a generator line, a ledger header, then one line
/// per ledger entry.
void write_checkpoint(std::ostream& out, const TrainState& state,
                      const TrainerConfig& config);

struct Checkpoint {
  TrainState state;
  TrainerConfig config;
  std::string config_hash;
};

Checkpoint read_checkpoint(std::istream& in);

/// Writes through a temporary file and renames, so an interrupted save never
/// clobbers the previous checkpoint.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const TrainerConfig& config);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace corag
