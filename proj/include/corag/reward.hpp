// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace corag {

/// Binary task reward shared by both agents.
struct Reward {
  int value = 0;

  constexpr Reward() = default;
  explicit Reward(int v);
  friend bool operator==(Reward, Reward) = default;
};

/// 1 iff some gold answer, normalized, appears as a contiguous token run in
/// the normalized `generated` string. Multiple gold answers are disjunctive.
Reward containment_reward(const std::vector<std::string>& gold_answers,
                          std::string_view generated);

}  // namespace corag
