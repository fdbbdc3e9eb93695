// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "corag/core.hpp"
#include "corag/reranker.hpp"

namespace corag {

/// Parameters of a synthetic retrieval task.
///
/// Every query gets `query_length` query tokens and a unique answer of
/// `answer_ngram_len` tokens. Gold documents hold all query tokens once and
/// the answer `answer_repeats` times. Each distractor leaks
/// round(distractor_overlap * query_length) distinct query tokens, each
/// repeated `leak_repeats` times, so raw overlap counts can favour a
/// distractor over the gold document. Answer tokens come from a reserved
/// part of the vocabulary and never appear in distractors.
struct SynthSpec {
  int num_queries = 200;
  int candidates_per_query = 10;
  int gold_docs_per_query = 1;
  double distractor_overlap = 0.4;
  int vocab_size = 500;
  int doc_length = 20;
  int answer_ngram_len = 1;
  std::uint64_t seed = 42;
  int query_length = 5;
  int answer_repeats = 3;
  int leak_repeats = 1;

  /// Throws ContractViolation naming the first bad field.
  void validate() const;
};

void to_json(nlohmann::json& j, const SynthSpec& s);
void from_json(const nlohmann::json& j, SynthSpec& s);

struct SynthTask {
  Corpus corpus;
  Dataset dataset;
};

SynthTask generate_task(const SynthSpec& spec);

/// True iff a selected document is marked gold for `q`.
bool oracle_hit_at_k(const SelectedSet& selected, const Query& q,
                     const Corpus& corpus);

}  // namespace corag
