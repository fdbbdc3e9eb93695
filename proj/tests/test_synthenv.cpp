// SPDX-License-Identifier: Apache-2.0
#include <set>

#include <gtest/gtest.h>

#include "corag/generator.hpp"
#include "corag/reward.hpp"
#include "corag/synthenv.hpp"
#include "corag/text.hpp"

namespace corag {
namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.num_queries = 30;
  s.seed = 5;
  return s;
}

bool contains_run(const Tokens& hay, const Tokens& needle) {
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), hay.begin() + i)) return true;
  }
  return false;
}

TEST(SynthEnv, DeterministicForFixedSeed) {
  const auto a = generate_task(small_spec());
  const auto b = generate_task(small_spec());
  ASSERT_EQ(a.dataset.size(), b.dataset.size());
  for (std::size_t i = 0; i < a.dataset.size(); ++i) {
    EXPECT_EQ(a.dataset[i].text, b.dataset[i].text);
    EXPECT_EQ(a.dataset[i].gold_answers, b.dataset[i].gold_answers);
    EXPECT_EQ(a.dataset[i].candidate_doc_ids, b.dataset[i].candidate_doc_ids);
    for (const auto& id : a.dataset[i].candidate_doc_ids) {
      EXPECT_EQ(a.corpus.at(id).text, b.corpus.at(id).text);
    }
  }
  auto other = small_spec();
  other.seed = 6;
  EXPECT_NE(generate_task(other).dataset[0].text, a.dataset[0].text);
}

TEST(SynthEnv, ShapeFollowsSpec) {
  auto spec = small_spec();
  spec.gold_docs_per_query = 2;
  spec.answer_ngram_len = 2;
  spec.vocab_size = 600;
  const auto task = generate_task(spec);
  ASSERT_EQ(task.dataset.size(), 30u);
  std::set<std::string> answers;
  for (const auto& q : task.dataset) {
    EXPECT_EQ(q.text.size(), 5u);
    EXPECT_EQ(q.num_candidates(), 10u);
    ASSERT_EQ(q.gold_answers.size(), 1u);
    EXPECT_EQ(normalize_text(q.gold_answers[0]).size(), 2u);
    answers.insert(q.gold_answers[0]);
    int gold = 0;
    for (const auto& id : q.candidate_doc_ids) {
      EXPECT_EQ(task.corpus.at(id).text.size(), 20u);
      gold += task.corpus.at(id).gold_for.count(q.id) ? 1 : 0;
    }
    EXPECT_EQ(gold, 2);
  }
  EXPECT_EQ(answers.size(), 30u);
}

TEST(SynthEnv, GoldDocumentsContainAnswersAndDistractorsDoNot) {
  for (const double overlap : {0.0, 0.4, 1.0}) {
    auto spec = small_spec();
    spec.distractor_overlap = overlap;
    const auto task = generate_task(spec);
    for (const auto& q : task.dataset) {
      const Tokens answer = normalize_text(q.gold_answers[0]);
      for (const auto& id : q.candidate_doc_ids) {
        const auto& doc = task.corpus.at(id);
        const bool gold = doc.gold_for.count(q.id) > 0;
        EXPECT_EQ(contains_run(doc.text, answer), gold) << q.id << " " << id;
        EXPECT_EQ(containment_reward(q.gold_answers, join_tokens(doc.text)).value,
                  gold ? 1 : 0);
      }
    }
  }
}

TEST(SynthEnv, CoverageFeatureIdentifiesGold) {
  auto spec = small_spec();
  spec.distractor_overlap = 0.0;
  const auto task = generate_task(spec);
  VectorXd theta = VectorXd::Zero(kRerankFeatureDim);
  theta[2] = 1.0;
  const RerankerPolicy oracle(theta);
  int hits = 0;
  for (const auto& q : task.dataset) {
    hits += oracle_hit_at_k(rank_and_select(oracle, q, task.corpus, 1), q, task.corpus);
  }
  EXPECT_EQ(hits, 30);
}

TEST(SynthEnv, RawOverlapFavoursDistractorsSometimes) {
  auto spec = small_spec();
  spec.leak_repeats = 3;
  const auto task = generate_task(spec);
  VectorXd theta = VectorXd::Zero(kRerankFeatureDim);
  theta[0] = 1.0;
  int hits = 0;
  for (const auto& q : task.dataset) {
    hits += oracle_hit_at_k(rank_and_select(RerankerPolicy(theta), q, task.corpus, 1), q,
                            task.corpus);
  }
  EXPECT_LT(hits, 30);
}

TEST(SynthEnv, GoldAnswerIsAnExtractiveCandidate) {
  const auto task = generate_task(small_spec());
  for (const auto& q : task.dataset) {
    SelectedSet sel;
    for (const auto& id : q.candidate_doc_ids) {
      if (task.corpus.at(id).gold_for.count(q.id)) sel.docs.push_back({id, 0.0});
    }
    bool found = false;
    for (const auto& c : build_candidates(q, sel, task.corpus)) {
      found |= c.text == q.gold_answers[0];
    }
    EXPECT_TRUE(found) << q.id;
  }
}

TEST(SynthEnv, RejectsBadSpecs) {
  auto tiny = small_spec();
  tiny.vocab_size = 40;
  try {
    generate_task(tiny);
    FAIL() << "expected a contract violation";
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("vocabulary too small"), std::string::npos);
  }
  auto none = small_spec();
  none.candidates_per_query = 0;
  EXPECT_THROW(generate_task(none), ContractViolation);
  auto overlap = small_spec();
  overlap.distractor_overlap = 1.5;
  EXPECT_THROW(generate_task(overlap), ContractViolation);
  auto gold = small_spec();
  gold.gold_docs_per_query = 11;
  EXPECT_THROW(generate_task(gold), ContractViolation);
}

TEST(SynthEnv, SpecJsonRoundTrip) {
  auto spec = small_spec();
  spec.distractor_overlap = 0.25;
  spec.leak_repeats = 2;
  const nlohmann::json j = spec;
  const auto back = j.get<SynthSpec>();
  EXPECT_EQ(nlohmann::json(back), j);
}

TEST(OracleHit, Examples) {
  Corpus corpus;
  corpus.add(Document("g", {"a"}, {"q"}));
  corpus.add(Document("x", {"b"}));
  corpus.add(Document("y", {"c"}, {"other"}));
  const Query q("q", {"z"}, {"a"}, {"g", "x", "y"});
  auto sel = [](std::initializer_list<const char*> ids) {
    SelectedSet s;
    for (auto id : ids) s.docs.push_back({id, 0.0});
    return s;
  };
  EXPECT_TRUE(oracle_hit_at_k(sel({"x", "g"}), q, corpus));
  EXPECT_FALSE(oracle_hit_at_k(sel({"x", "y"}), q, corpus));
  EXPECT_FALSE(oracle_hit_at_k(sel({}), q, corpus));
}

TEST(OracleHit, MatchesMembershipScanOnRandomSelections) {
  const auto task = generate_task(small_spec());
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto& q = task.dataset[rng.index(task.dataset.size())];
    SelectedSet s;
    bool expected = false;
    for (const auto& id : q.candidate_doc_ids) {
      if (rng.bernoulli(0.3)) {
        s.docs.push_back({id, 0.0});
        const auto& g = task.corpus.at(id).gold_for;
        expected |= std::find(g.begin(), g.end(), q.id) != g.end();
      }
    }
    EXPECT_EQ(oracle_hit_at_k(s, q, task.corpus), expected);
  }
}

}  // namespace
}  // namespace corag
