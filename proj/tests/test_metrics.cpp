#include <gtest/gtest.h>

#include "disfl/metrics.hpp"
#include "disfl/synthgen.hpp"
#include "test_support.hpp"

namespace disfl::metrics {
namespace {

TagSequence tags_of(std::initializer_list<const char*> names) {
  TagSequence out;
  for (const char* n : names) out.push_back(parse_tag(n));
  return out;
}

const TagSequence kExample2 = tags_of({"<f/>", "<f/>", "<e/>", "<e/>", "<e/>", "<rm-4/><rpEndSub/>", "<f/>"});

F1Counts counts(std::int64_t tp, std::int64_t fp, std::int64_t fn) { return {tp, fp, fn}; }

TEST(F1Test, ZeroDenominators) {
  F1Counts c;
  EXPECT_EQ(c.precision(), 0.0);
  EXPECT_EQ(c.recall(), 0.0);
  EXPECT_EQ(c.f1(), 0.0);
  EXPECT_DOUBLE_EQ(counts(1, 1, 0).f1(), 2.0 / 3.0);
}

TEST(F1Test, EditExamples) {
  std::vector<TagSequence> g{tags_of({"<f/>", "<e/>", "<f/>"})};
  EXPECT_EQ(f1_edit(g, g), counts(1, 0, 0));
  EXPECT_EQ(f1_edit(g, g).f1(), 1.0);
  std::vector<TagSequence> g2{tags_of({"<f/>", "<e/>"})}, p2{tags_of({"<e/>", "<f/>"})};
  EXPECT_EQ(f1_edit(g2, p2), counts(0, 1, 1));
  EXPECT_EQ(f1_edit(g2, p2).f1(), 0.0);
}

TEST(F1Test, RmExamples) {
  std::vector<TagSequence> g{kExample2};
  EXPECT_EQ(f1_rm(g, g), counts(1, 0, 0));
  TagSequence wrong_n = kExample2;
  wrong_n[5] = Tag::onset(3, EndMarker::EndSub);
  std::vector<TagSequence> p{wrong_n};
  EXPECT_EQ(f1_rm(g, p), counts(0, 1, 1));
  TagSequence wrong_marker = kExample2;
  wrong_marker[5] = Tag::onset(4, EndMarker::EndDel);
  std::vector<TagSequence> pm{wrong_marker};
  EXPECT_EQ(f1_rm(g, pm, RmMatch::RmOnly), counts(1, 0, 0));
  EXPECT_EQ(f1_rm(g, pm, RmMatch::Strict), counts(0, 1, 1));
}

TEST(F1Test, RpsExample) {
  std::vector<TagSequence> g{kExample2};
  F1Counts perfect = f1_rps(g, g);
  EXPECT_EQ(perfect, counts(5, 0, 0));
  EXPECT_EQ(perfect.f1(), 1.0);
  std::vector<TagSequence> fluent{TagSequence(7, Tag::fluent())};
  EXPECT_EQ(f1_rps(g, fluent), counts(0, 0, 5));
}

TEST(F1Test, RpsDropsInvalidPredictions) {
  std::vector<TagSequence> g{kExample2};
  TagSequence bad = kExample2;
  bad[1] = Tag::end_only();  // nothing open
  std::int64_t dropped = 0;
  std::vector<TagSequence> p{bad};
  EXPECT_EQ(f1_rps(g, p, &dropped), counts(5, 0, 0));
  EXPECT_EQ(dropped, 1);
}

TEST(F1Test, LengthMismatchIsAnError) {
  std::vector<TagSequence> g{kExample2}, p{TagSequence(6, Tag::fluent())};
  EXPECT_THROW(f1_edit(g, p), DataError);
  EXPECT_THROW(f1_rps(g, {}), DataError);
}

TEST(F1Test, ParseMode) {
  EXPECT_EQ(parse_rm_match("strict"), RmMatch::Strict);
  EXPECT_EQ(parse_rm_match("rm-only"), RmMatch::RmOnly);
  EXPECT_THROW(parse_rm_match("loose"), ConfigError);
}

struct RandomPairs {
  std::vector<TagSequence> gold, pred;
};

// Gold from random structure sets; predictions either an independent
// random structure set of the same length or gold with random tag noise
// (which may not resolve).
RandomPairs random_pairs(Rng& rng, std::size_t n) {
  RandomPairs out;
  while (out.gold.size() < n) {
    auto set = testing::random_structure_set(rng);
    TagSequence g = structures_to_tags(set.structures, set.length, set.edits);
    TagSequence p = g;
    if (bernoulli(rng, 0.3)) {
      for (int tries = 0; tries < 50; ++tries) {
        auto other = testing::random_structure_set(rng);
        if (other.length == set.length) {
          p = structures_to_tags(other.structures, other.length, other.edits);
          break;
        }
      }
    } else {
      for (Tag& t : p)
        if (bernoulli(rng, 0.2)) t = testing::random_tag(rng);
    }
    out.gold.push_back(std::move(g));
    out.pred.push_back(std::move(p));
  }
  return out;
}

TEST(MetricsOracleTest, RandomPairsMatchBruteForce) {
  Rng rng(77);
  auto pairs = random_pairs(rng, 1000);
  auto expect_same = [](const F1Counts& a, const testing::Counts& b) {
    EXPECT_EQ(a.tp, b.tp);
    EXPECT_EQ(a.fp, b.fp);
    EXPECT_EQ(a.fn, b.fn);
  };
  expect_same(f1_edit(pairs.gold, pairs.pred), testing::brute_edit(pairs.gold, pairs.pred));
  expect_same(f1_rm(pairs.gold, pairs.pred, RmMatch::RmOnly), testing::brute_rm(pairs.gold, pairs.pred, false));
  expect_same(f1_rm(pairs.gold, pairs.pred, RmMatch::Strict), testing::brute_rm(pairs.gold, pairs.pred, true));

  // Membership via the enumeration oracle on gold and on the lenient
  // rewrite of each prediction.
  testing::Counts rps;
  std::int64_t invalid = 0;
  for (std::size_t u = 0; u < pairs.gold.size(); ++u) {
    auto g = testing::covered(testing::brute_force_spans(pairs.gold[u]));
    auto lenient = resolve_lenient(pairs.pred[u]);
    invalid += lenient.dropped > 0;
    auto p = testing::covered(testing::brute_force_spans(lenient.tags));
    for (std::size_t i = 0; i < pairs.gold[u].size(); ++i) {
      bool gi = g.count(i) > 0, pi = p.count(i) > 0;
      rps.tp += gi && pi;
      rps.fp += !gi && pi;
      rps.fn += gi && !pi;
    }
  }
  expect_same(f1_rps(pairs.gold, pairs.pred), rps);
  EXPECT_GT(invalid, 50);
}

TEST(MetricsOracleTest, PermutationInvariance) {
  Rng rng(78);
  auto pairs = random_pairs(rng, 300);
  EvalReport base = score(pairs.gold, pairs.pred);
  std::vector<std::size_t> order(pairs.gold.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int trial = 0; trial < 5; ++trial) {
    shuffle(order, rng);
    std::vector<TagSequence> g, p;
    for (std::size_t i : order) {
      g.push_back(pairs.gold[i]);
      p.push_back(pairs.pred[i]);
    }
    EvalReport r = score(g, p);
    EXPECT_EQ(r.edit, base.edit);
    EXPECT_EQ(r.rm, base.rm);
    EXPECT_EQ(r.rps, base.rps);
    EXPECT_EQ(r.spans, base.spans);
    EXPECT_EQ(r.confusion, base.confusion);
    EXPECT_EQ(r.dropped, base.dropped);
  }
}

TEST(EvaluateTest, PerfectAndConstantPredictors) {
  synth::GeneratorConfig config;
  config.n_dialogues = 40;
  Corpus corpus = synth::generate_corpus(config);
  EvalReport perfect = evaluate(corpus, [](const Utterance& u) { return u.tags(); });
  EXPECT_EQ(perfect.edit.f1(), 1.0);
  EXPECT_EQ(perfect.rm.f1(), 1.0);
  EXPECT_EQ(perfect.rps.f1(), 1.0);
  EXPECT_EQ(perfect.spans.f1(), 1.0);
  EXPECT_EQ(perfect.accuracy(), 1.0);

  EvalReport fluent = evaluate(corpus, [](const Utterance& u) { return TagSequence(u.tokens.size(), Tag::fluent()); });
  EXPECT_EQ(fluent.edit.f1(), 0.0);
  EXPECT_EQ(fluent.rm.f1(), 0.0);
  EXPECT_EQ(fluent.rps.f1(), 0.0);
  const TagCounts tc = count_tags(corpus);
  std::int64_t total = 0;
  for (auto n : tc) total += n;
  EXPECT_DOUBLE_EQ(fluent.accuracy(), static_cast<double>(tc[0]) / static_cast<double>(total));

  Json j = perfect.to_json();
  for (const char* key : {"F_e", "F_rm", "F_rps", "accuracy", "rm_match"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_NE(perfect.table().find("F_rps"), std::string::npos);
}

TEST(EvaluateTest, UntaggedCorpusIsRejected) {
  Corpus c;
  Dialogue d;
  d.id = "x";
  Utterance u;
  u.tokens = {Token{"hi", "UH", std::nullopt}};
  d.utterances.push_back(u);
  c.dialogues.push_back(d);
  EXPECT_THROW(evaluate(c, [](const Utterance& x) { return TagSequence(x.tokens.size(), Tag::fluent()); }),
               DataError);
}

}  // namespace
}  // namespace disfl::metrics
