// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>

#include "corag/core.hpp"

namespace corag {

/// Lowercases ASCII letters, turns every non-alphanumeric byte into a
/// separator and splits on whitespace. Idempotent.
Tokens normalize_text(std::string_view raw);

/// True iff `needle` occurs as a contiguous run inside `haystack`.
/// An empty needle is a ContractViolation.
bool contains_subsequence(std::span<const std::string> haystack,
                          std::span<const std::string> needle);

std::string join_tokens(std::span<const std::string> tokens);

}  // namespace corag
