// SPDX-License-Identifier: Apache-2.0
#include "corag/text.hpp"

#include <algorithm>
#include <cctype>

namespace corag {

Tokens normalize_text(std::string_view raw) {
  Tokens out;
  std::string cur;
  for (unsigned char c : raw) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool contains_subsequence(std::span<const std::string> haystack,
                          std::span<const std::string> needle) {
  if (needle.empty()) {
    throw ContractViolation("contains_subsequence: empty needle");
  }
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace corag
