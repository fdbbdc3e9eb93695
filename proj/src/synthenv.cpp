// SPDX-License-Identifier: Apache-2.0
#include "corag/synthenv.hpp"

#include <cmath>
#include <cstdio>

#include "corag/rng.hpp"
#include "corag/text.hpp"

namespace corag {

namespace {

std::string numbered(char prefix, int width, long n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*ld", prefix, width, n);
  return buf;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.index(i)]);
  }
}

/// `n` distinct draws from `pool`, skipping anything in `exclude`.
Tokens draw_distinct(const Tokens& pool, const std::set<std::string>& exclude,
                     std::size_t n, Rng& rng) {
  Tokens avail;
  for (const auto& t : pool) {
    if (!exclude.count(t)) avail.push_back(t);
  }
  if (avail.size() < n) {
    throw ContractViolation("vocabulary too small to draw distinct tokens");
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(avail[i], avail[i + rng.index(avail.size() - i)]);
  }
  avail.resize(n);
  return avail;
}

Tokens assemble(std::vector<Tokens> units, Rng& rng) {
  shuffle(units, rng);
  Tokens out;
  for (auto& u : units) out.insert(out.end(), u.begin(), u.end());
  return out;
}

int leaked_count(const SynthSpec& s) {
  return static_cast<int>(std::lround(s.distractor_overlap * s.query_length));
}

}  // namespace

void SynthSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ContractViolation(std::string("invalid synth spec: ") + what);
  };
  require(num_queries > 0, "num_queries must be positive");
  require(candidates_per_query > 0, "candidates_per_query must be positive");
  require(gold_docs_per_query > 0, "gold_docs_per_query must be positive");
  require(gold_docs_per_query <= candidates_per_query,
          "gold_docs_per_query exceeds candidates_per_query");
  require(distractor_overlap >= 0.0 && distractor_overlap <= 1.0,
          "distractor_overlap must lie in [0, 1]");
  require(vocab_size > 0, "vocab_size must be positive");
  require(doc_length > 0, "doc_length must be positive");
  require(answer_ngram_len > 0, "answer_ngram_len must be positive");
  require(query_length > 0, "query_length must be positive");
  require(answer_repeats > 0, "answer_repeats must be positive");
  require(leak_repeats > 0, "leak_repeats must be positive");
  require(query_length + answer_repeats * answer_ngram_len <= doc_length,
          "doc_length too short for query tokens plus answer");
  require(leaked_count(*this) * leak_repeats <= doc_length,
          "doc_length too short for leaked query tokens");

  const long reserved = static_cast<long>(num_queries) * answer_ngram_len;
  const long general = static_cast<long>(vocab_size) - reserved;
  if (general < static_cast<long>(query_length) + doc_length) {
    throw ContractViolation(
        "vocabulary too small: " + std::to_string(vocab_size) +
        " tokens cannot give " + std::to_string(num_queries) +
        " queries unique answers and still fill documents (need at least " +
        std::to_string(reserved + query_length + doc_length) + ")");
  }
}

void to_json(nlohmann::json& j, const SynthSpec& s) {
  j = {{"num_queries", s.num_queries},
       {"candidates_per_query", s.candidates_per_query},
       {"gold_docs_per_query", s.gold_docs_per_query},
       {"distractor_overlap", s.distractor_overlap},
       {"vocab_size", s.vocab_size},
       {"doc_length", s.doc_length},
       {"answer_ngram_len", s.answer_ngram_len},
       {"seed", s.seed},
       {"query_length", s.query_length},
       {"answer_repeats", s.answer_repeats},
       {"leak_repeats", s.leak_repeats}};
}

void from_json(const nlohmann::json& j, SynthSpec& s) {
  SynthSpec d;
  s.num_queries = j.value("num_queries", d.num_queries);
  s.candidates_per_query = j.value("candidates_per_query", d.candidates_per_query);
  s.gold_docs_per_query = j.value("gold_docs_per_query", d.gold_docs_per_query);
  s.distractor_overlap = j.value("distractor_overlap", d.distractor_overlap);
  s.vocab_size = j.value("vocab_size", d.vocab_size);
  s.doc_length = j.value("doc_length", d.doc_length);
  s.answer_ngram_len = j.value("answer_ngram_len", d.answer_ngram_len);
  s.seed = j.value("seed", d.seed);
  s.query_length = j.value("query_length", d.query_length);
  s.answer_repeats = j.value("answer_repeats", d.answer_repeats);
  s.leak_repeats = j.value("leak_repeats", d.leak_repeats);
}

SynthTask generate_task(const SynthSpec& spec) {
  spec.validate();
  Rng rng = Rng::derive(spec.seed, "synthenv");

  const int reserved = spec.num_queries * spec.answer_ngram_len;
  Tokens answer_pool, general_pool;
  for (int i = 0; i < spec.vocab_size; ++i) {
    (i < reserved ? answer_pool : general_pool)
        .push_back(numbered('w', 4, i));
  }
  shuffle(answer_pool, rng);

  const int leaked = leaked_count(spec);
  SynthTask task;
  long next_doc = 0;
  for (int qi = 0; qi < spec.num_queries; ++qi) {
    const std::string qid = numbered('q', 5, qi);
    Tokens answer(answer_pool.begin() + qi * spec.answer_ngram_len,
                  answer_pool.begin() + (qi + 1) * spec.answer_ngram_len);
    const Tokens query_tokens =
        draw_distinct(general_pool, {}, spec.query_length, rng);
    const std::set<std::string> query_set(query_tokens.begin(),
                                          query_tokens.end());

    std::vector<std::pair<Tokens, bool>> docs;  // (text, is_gold)
    for (int g = 0; g < spec.gold_docs_per_query; ++g) {
      std::vector<Tokens> units;
      for (int r = 0; r < spec.answer_repeats; ++r) units.push_back(answer);
      for (const auto& t : query_tokens) units.push_back({t});
      const auto fill = static_cast<std::size_t>(
          spec.doc_length - spec.query_length -
          spec.answer_repeats * spec.answer_ngram_len);
      for (auto& t : draw_distinct(general_pool, query_set, fill, rng)) {
        units.push_back({t});
      }
      docs.emplace_back(assemble(std::move(units), rng), true);
    }
    for (int k = spec.gold_docs_per_query; k < spec.candidates_per_query; ++k) {
      std::vector<Tokens> units;
      Tokens leak = query_tokens;
      shuffle(leak, rng);
      leak.resize(static_cast<std::size_t>(leaked));
      for (const auto& t : leak) {
        for (int r = 0; r < spec.leak_repeats; ++r) units.push_back({t});
      }
      const auto fill =
          static_cast<std::size_t>(spec.doc_length - leaked * spec.leak_repeats);
      for (auto& t : draw_distinct(general_pool, query_set, fill, rng)) {
        units.push_back({t});
      }
      docs.emplace_back(assemble(std::move(units), rng), false);
    }
    // Ids follow the shuffled order so the gold position is not predictable
    // from the id tie-break.
    shuffle(docs, rng);

    std::vector<std::string> candidate_ids;
    for (auto& [text, gold] : docs) {
      std::string did = numbered('d', 6, next_doc++);
      candidate_ids.push_back(did);
      std::set<std::string> gold_for;
      if (gold) gold_for.insert(qid);
      task.corpus.add(Document(did, std::move(text), std::move(gold_for)));
    }
    task.dataset.emplace_back(qid, query_tokens,
                              std::vector<std::string>{join_tokens(answer)},
                              std::move(candidate_ids));
  }
  return task;
}

bool oracle_hit_at_k(const SelectedSet& selected, const Query& q,
                     const Corpus& corpus) {
  for (const auto& d : selected.docs) {
    if (corpus.at(d.doc_id).gold_for.count(q.id)) return true;
  }
  return false;
}

}  // namespace corag
