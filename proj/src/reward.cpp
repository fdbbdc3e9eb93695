// SPDX-License-Identifier: Apache-2.0
#include "corag/reward.hpp"

#include "corag/core.hpp"
#include "corag/text.hpp"

namespace corag {

Reward::Reward(int v) : value(v) {
  if (v != 0 && v != 1) {
    throw ContractViolation("reward must be 0 or 1, got " + std::to_string(v));
  }
}

Reward containment_reward(const std::vector<std::string>& gold_answers,
                          std::string_view generated) {
  if (gold_answers.empty()) {
    throw ContractViolation("containment_reward: empty gold answer set");
  }
  const Tokens hay = normalize_text(generated);
  for (const auto& g : gold_answers) {
    const Tokens needle = normalize_text(g);
    // A gold answer with no alphanumerics can never be matched.
    if (needle.empty()) continue;
    if (contains_subsequence(hay, needle)) return Reward(1);
  }
  return Reward(0);
}

}  // namespace corag
