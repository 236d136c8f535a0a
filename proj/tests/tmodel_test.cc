// tmodel_test.cc
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "smt/tmodel.hpp"

namespace smt {
namespace {

using align::AlignmentMatrix;
using tmodel::Orientation;
using tmodel::OrientationSide;
using tmodel::PhrasePair;
using tmodel::Scheme;

AlignmentMatrix M(size_t n, size_t m, const std::vector<align::Link>& links) {
  AlignmentMatrix a(n, m);
  for (auto [i, j] : links) a.set(i, j);
  return a;
}

SentencePair P(size_t n, size_t m) {
  SentencePair p;
  for (size_t i = 0; i < n; ++i) p.source.tokens.push_back("s" + std::to_string(i));
  for (size_t j = 0; j < m; ++j) p.target.tokens.push_back("t" + std::to_string(j));
  return p;
}

std::set<oracle::Box> boxes(const std::vector<PhrasePair>& pairs) {
  std::set<oracle::Box> out;
  for (const auto& p : pairs) out.insert(p.box());
  return out;
}

PhrasePair find_box(const std::vector<PhrasePair>& pairs, oracle::Box b) {
  for (const auto& p : pairs) {
    if (p.box() == b) return p;
  }
  ADD_FAILURE() << "box not extracted";
  return {};
}

TEST(Extract, SingleLink) {
  SentencePair p;
  p.source.tokens = {"dom"};
  p.target.tokens = {"house"};
  auto pairs = tmodel::extract_phrases(p, M(1, 1, {{0, 0}}));
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].source, Tokens{"dom"});
  EXPECT_EQ(pairs[0].target, Tokens{"house"});
  EXPECT_EQ(pairs[0].links, (std::vector<align::Link>{{0, 0}}));
}

TEST(Extract, DiagonalAndCrossed) {
  auto diag = tmodel::extract_phrases(P(2, 2), M(2, 2, {{0, 0}, {1, 1}}));
  EXPECT_EQ(boxes(diag), (std::set<oracle::Box>{{0, 1, 0, 1}, {1, 2, 1, 2}, {0, 2, 0, 2}}));
  // Each crossed link is a consistent 1x1 box on its own.
  auto crossed = tmodel::extract_phrases(P(2, 2), M(2, 2, {{0, 1}, {1, 0}}));
  EXPECT_EQ(boxes(crossed), (std::set<oracle::Box>{{0, 1, 1, 2}, {1, 2, 0, 1}, {0, 2, 0, 2}}));
}

TEST(Extract, UnalignedBoundaryExtends) {
  // t1 unaligned: (s0,t0), (s0,t0 t1), plus boxes with s1.
  auto pairs = tmodel::extract_phrases(P(2, 3), M(2, 3, {{0, 0}, {1, 2}}));
  auto got = boxes(pairs);
  EXPECT_TRUE(got.count({0, 1, 0, 1}));
  EXPECT_TRUE(got.count({0, 1, 0, 2}));
  EXPECT_TRUE(got.count({1, 2, 1, 3}));
  EXPECT_TRUE(got.count({1, 2, 2, 3}));
  EXPECT_FALSE(got.count({0, 1, 1, 2}));
  EXPECT_EQ(got, oracle::consistent_boxes(2, 3, {{0, 0}, {1, 2}}, 7));
}

TEST(Extract, MatchesBruteForce) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 400; ++trial) {
    const size_t n = 1 + rng() % 6;
    const size_t m = 1 + rng() % 6;
    const size_t max_len = 1 + rng() % 7;
    auto links = oracle::random_links(&rng, n, m, 0.1 + 0.1 * (trial % 5));
    AlignmentMatrix a(n, m);
    for (auto [i, j] : links) a.set(i, j);
    auto pairs = tmodel::extract_phrases(P(n, m), a, max_len);
    ASSERT_EQ(boxes(pairs), oracle::consistent_boxes(n, m, links, max_len)) << a.to_pharaoh();
    for (const auto& p : pairs) {
      EXPECT_FALSE(p.links.empty());
      EXPECT_LE(p.source.size(), max_len);
      EXPECT_LE(p.target.size(), max_len);
      EXPECT_TRUE(tmodel::is_consistent_box(a, p.src_begin, p.src_end, p.tgt_begin, p.tgt_end));
      for (auto [i, j] : p.links) EXPECT_TRUE(a.contains(i + p.src_begin, j + p.tgt_begin));
    }
  }
}

TEST(Extract, DimensionMismatchThrows) {
  EXPECT_THROW(tmodel::extract_phrases(P(2, 2), M(3, 2, {{0, 0}})), Error);
}

align::TTable ttable(const std::vector<std::tuple<std::string, std::string, double>>& rows) {
  align::TTable t;
  for (const auto& [cond, gen, p] : rows) t.set(cond, gen, p);
  return t;
}

PhrasePair pp(Tokens s, Tokens t, std::vector<align::Link> links) {
  PhrasePair p;
  p.source = std::move(s);
  p.target = std::move(t);
  p.src_end = p.source.size();
  p.tgt_end = p.target.size();
  p.links = std::move(links);
  return p;
}

TEST(Score, RelativeFrequencies) {
  align::TTable t;
  std::vector<PhrasePair> pairs;
  for (int k = 0; k < 3; ++k) pairs.push_back(pp({"dom"}, {"house"}, {{0, 0}}));
  pairs.push_back(pp({"dom"}, {"home"}, {{0, 0}}));
  pairs.push_back(pp({"kot"}, {"cat"}, {{0, 0}}));
  auto table = tmodel::score_phrase_table(pairs, t, t);
  const auto* opts = table.lookup({"dom"});
  ASSERT_NE(opts, nullptr);
  ASSERT_EQ(opts->size(), 2u);
  for (const auto& e : *opts) {
    if (e.target == Tokens{"house"}) EXPECT_DOUBLE_EQ(e.scores.phi_ef, 0.75);
    if (e.target == Tokens{"home"}) EXPECT_DOUBLE_EQ(e.scores.phi_ef, 0.25);
    EXPECT_DOUBLE_EQ(e.scores.phi_fe, 1.0);
  }
  const auto& kot = table.lookup({"kot"})->front();
  EXPECT_DOUBLE_EQ(kot.scores.phi_fe, 1.0);
  EXPECT_DOUBLE_EQ(kot.scores.phi_ef, 1.0);
  EXPECT_EQ(table.lookup({"pies"}), nullptr);
}

TEST(Score, PhiNormalizes) {
  std::mt19937 rng(5);
  auto sv = testing::make_vocab("s", 4);
  auto tv = testing::make_vocab("t", 4);
  std::vector<PhrasePair> pairs;
  for (int k = 0; k < 300; ++k) {
    auto s = testing::random_tokens(&rng, sv, 1, 2);
    auto t = testing::random_tokens(&rng, tv, 1, 2);
    pairs.push_back(pp(s, t, {{0, 0}}));
  }
  auto table = tmodel::score_phrase_table(pairs, align::TTable{}, align::TTable{});
  std::map<std::string, double> by_src;
  std::map<std::string, double> by_tgt;
  for (const auto& [src, opts] : table.entries()) {
    for (const auto& e : opts) {
      by_src[src] += e.scores.phi_ef;
      by_tgt[text::join(e.target, " ")] += e.scores.phi_fe;
      EXPECT_GT(e.scores.phi_fe, 0.0);
      EXPECT_LE(e.scores.phi_fe, 1.0);
    }
  }
  for (const auto& [k, v] : by_src) EXPECT_NEAR(v, 1.0, 1e-9) << k;
  for (const auto& [k, v] : by_tgt) EXPECT_NEAR(v, 1.0, 1e-9) << k;
}

TEST(Score, LexicalWeights) {
  auto fwd = ttable({{"house", "dom", 0.8}, {"the", "dom", 0.1}, {align::kNullWord, "ten", 0.05}});
  auto rev = ttable({{"dom", "house", 0.7}, {"dom", "the", 0.2}});
  // 1-1 pair: t(f|e) exactly.
  auto table = tmodel::score_phrase_table({pp({"dom"}, {"house"}, {{0, 0}})}, fwd, rev);
  const auto& e = table.lookup({"dom"})->front();
  EXPECT_DOUBLE_EQ(e.scores.lex_fe, 0.8);
  EXPECT_DOUBLE_EQ(e.scores.lex_ef, 0.7);

  // "ten dom" / "the house", dom linked to both, ten unlinked.
  auto p = pp({"ten", "dom"}, {"the", "house"}, {{1, 0}, {1, 1}});
  auto t2 = tmodel::score_phrase_table({p}, fwd, rev);
  const auto& e2 = t2.lookup({"ten", "dom"})->front();
  EXPECT_DOUBLE_EQ(e2.scores.lex_fe, 0.05 * ((0.1 + 0.8) / 2));
  EXPECT_DOUBLE_EQ(e2.scores.lex_ef, 0.2 * 0.7);
}

TEST(Score, PhraseTableRoundTrip) {
  auto model = testing::make_toy_model(3, "none");
  const std::string dir = testing::scratch_dir("tmodel_pt");
  model.table.save(dir + "/pt");
  auto back = tmodel::PhraseTable::load(dir + "/pt");
  ASSERT_EQ(back.size(), model.table.size());
  EXPECT_EQ(back.max_source_len(), model.table.max_source_len());
  for (const auto& [src, opts] : model.table.entries()) {
    const auto* other = back.lookup(opts.front().source);
    ASSERT_NE(other, nullptr) << src;
    ASSERT_EQ(other->size(), opts.size());
    for (size_t k = 0; k < opts.size(); ++k) {
      EXPECT_EQ((*other)[k].target, opts[k].target);
      EXPECT_NEAR((*other)[k].scores.phi_fe, opts[k].scores.phi_fe, 1e-5 * opts[k].scores.phi_fe);
      EXPECT_NEAR((*other)[k].scores.lex_ef, opts[k].scores.lex_ef, 1e-5 * opts[k].scores.lex_ef);
    }
  }
}

TEST(Score, LoadRejectsGarbage) {
  const std::string dir = testing::scratch_dir("tmodel_bad");
  {
    std::ofstream out(dir + "/pt");
    out << "a ||| b ||| 0.5 zz\n";
  }
  EXPECT_THROW(tmodel::PhraseTable::load(dir + "/pt"), Error);
  EXPECT_THROW(tmodel::PhraseTable::load(dir + "/missing"), Error);
}

Orientation classify(const std::vector<PhrasePair>& pairs, const AlignmentMatrix& a, oracle::Box b,
                     OrientationSide side, Scheme s) {
  return tmodel::classify_orientation(find_box(pairs, b), a, side, s);
}

TEST(Orientation, Examples) {
  auto diag = M(2, 2, {{0, 0}, {1, 1}});
  auto dp = tmodel::extract_phrases(P(2, 2), diag);
  EXPECT_EQ(classify(dp, diag, {1, 2, 1, 2}, OrientationSide::kPrevious, Scheme::kMsd), Orientation::kMonotone);
  EXPECT_EQ(classify(dp, diag, {0, 1, 0, 1}, OrientationSide::kPrevious, Scheme::kMsd), Orientation::kMonotone);
  EXPECT_EQ(classify(dp, diag, {0, 1, 0, 1}, OrientationSide::kNext, Scheme::kMsd), Orientation::kMonotone);
  EXPECT_EQ(classify(dp, diag, {1, 2, 1, 2}, OrientationSide::kNext, Scheme::kMsd), Orientation::kMonotone);

  auto crossed = M(2, 2, {{0, 1}, {1, 0}});
  std::vector<PhrasePair> cp = {pp({"s1"}, {"t0"}, {{0, 0}}), pp({"s0"}, {"t1"}, {{0, 0}})};
  cp[0].src_begin = 1, cp[0].src_end = 2, cp[0].tgt_begin = 0, cp[0].tgt_end = 1;
  cp[1].src_begin = 0, cp[1].src_end = 1, cp[1].tgt_begin = 1, cp[1].tgt_end = 2;
  for (Scheme s : {Scheme::kMsd, Scheme::kHierMslr}) {
    // s1 -> t0 is followed by s0 -> t1: swap on the next side.
    EXPECT_EQ(tmodel::classify_orientation(cp[0], crossed, OrientationSide::kNext, s), Orientation::kSwap);
    EXPECT_EQ(tmodel::classify_orientation(cp[1], crossed, OrientationSide::kPrevious, s), Orientation::kSwap);
  }
  // s1 -> t0 starts the target but not the source.
  EXPECT_EQ(tmodel::classify_orientation(cp[0], crossed, OrientationSide::kPrevious, Scheme::kMsd),
            Orientation::kDiscontinuous);
}

TEST(Orientation, SentenceStartConvention) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const size_t n = 1 + rng() % 5;
    const size_t m = 1 + rng() % 5;
    auto links = oracle::random_links(&rng, n, m, 0.35);
    AlignmentMatrix a(n, m);
    for (auto [i, j] : links) a.set(i, j);
    for (const auto& p : tmodel::extract_phrases(P(n, m), a)) {
      if (p.tgt_begin != 0) continue;
      const bool at_start = p.src_begin == 0;
      for (Scheme s : {Scheme::kMsd, Scheme::kHierMslr}) {
        auto o = tmodel::classify_orientation(p, a, OrientationSide::kPrevious, s);
        EXPECT_EQ(o == Orientation::kMonotone, at_start);
      }
      if (!at_start) {
        EXPECT_EQ(tmodel::classify_orientation(p, a, OrientationSide::kPrevious, Scheme::kMsd),
                  Orientation::kDiscontinuous);
      }
    }
  }
}

// Monotone and swap under the hierarchical scheme mean a consistent block
// touches the phrase corner; checked against the brute-force box set.
TEST(Orientation, HierarchicalBlocksMatchBruteForce) {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    const size_t n = 1 + rng() % 6;
    const size_t m = 1 + rng() % 6;
    auto links = oracle::random_links(&rng, n, m, 0.3);
    AlignmentMatrix a(n, m);
    for (auto [i, j] : links) a.set(i, j);
    auto all = oracle::consistent_boxes(n, m, links, 100);
    auto has_block = [&](auto pred) {
      for (const auto& b : all) {
        if (pred(b)) return true;
      }
      return false;
    };
    for (const auto& p : tmodel::extract_phrases(P(n, m), a)) {
      const size_t i1 = p.src_begin, i2 = p.src_end, j1 = p.tgt_begin, j2 = p.tgt_end;
      bool prev_m = (i1 == 0 && j1 == 0) || has_block([&](const oracle::Box& b) { return b[1] == i1 && b[3] == j1; });
      bool prev_s = has_block([&](const oracle::Box& b) { return b[0] == i2 && b[3] == j1; });
      bool next_m = (i2 == n && j2 == m) || has_block([&](const oracle::Box& b) { return b[0] == i2 && b[2] == j2; });
      bool next_s = has_block([&](const oracle::Box& b) { return b[1] == i1 && b[2] == j2; });
      auto po = tmodel::classify_orientation(p, a, OrientationSide::kPrevious, Scheme::kHierMslr);
      auto no = tmodel::classify_orientation(p, a, OrientationSide::kNext, Scheme::kHierMslr);
      EXPECT_EQ(po == Orientation::kMonotone, prev_m) << a.to_pharaoh();
      EXPECT_EQ(po == Orientation::kSwap, !prev_m && prev_s) << a.to_pharaoh();
      EXPECT_EQ(no == Orientation::kMonotone, next_m) << a.to_pharaoh();
      EXPECT_EQ(no == Orientation::kSwap, !next_m && next_s) << a.to_pharaoh();
      EXPECT_NE(po, Orientation::kDiscontinuous);
      EXPECT_NE(no, Orientation::kDiscontinuous);
      // msd never uses the split classes.
      auto mo = tmodel::classify_orientation(p, a, OrientationSide::kPrevious, Scheme::kMsd);
      EXPECT_TRUE(mo == Orientation::kMonotone || mo == Orientation::kSwap || mo == Orientation::kDiscontinuous);
    }
  }
}

TEST(Orientation, DiscontinuousSides) {
  // s2 -> t0 is followed by the block s0 s1 -> t1 t2: a hierarchical swap
  // that msd cannot see.
  auto a = M(3, 3, {{2, 0}, {0, 1}, {1, 2}});
  auto pairs = tmodel::extract_phrases(P(3, 3), a);
  EXPECT_EQ(classify(pairs, a, {2, 3, 0, 1}, OrientationSide::kNext, Scheme::kHierMslr), Orientation::kSwap);
  EXPECT_EQ(classify(pairs, a, {2, 3, 0, 1}, OrientationSide::kNext, Scheme::kMsd), Orientation::kDiscontinuous);
  EXPECT_EQ(classify(pairs, a, {1, 2, 2, 3}, OrientationSide::kPrevious, Scheme::kHierMslr), Orientation::kMonotone);

  // No block at either corner.
  auto b = M(4, 4, {{1, 0}, {3, 1}, {0, 2}, {2, 3}});
  auto bp = tmodel::extract_phrases(P(4, 4), b);
  EXPECT_EQ(classify(bp, b, {1, 2, 0, 1}, OrientationSide::kNext, Scheme::kHierMslr),
            Orientation::kDiscontinuousRight);
  EXPECT_EQ(classify(bp, b, {3, 4, 1, 2}, OrientationSide::kPrevious, Scheme::kHierMslr),
            Orientation::kDiscontinuousLeft);
  EXPECT_EQ(classify(bp, b, {3, 4, 1, 2}, OrientationSide::kPrevious, Scheme::kMsd), Orientation::kDiscontinuous);
}

TEST(Reordering, SmoothingArithmetic) {
  ParallelCorpus c;
  for (int k = 0; k < 4; ++k) c.add({"a", "b"}, {"x", "y"});
  std::vector<AlignmentMatrix> al(4, M(2, 2, {{0, 0}, {1, 1}}));
  auto table = tmodel::train_reordering(c, al, Scheme::kMsd);
  const auto* e = table.lookup({"b"}, {"y"});
  ASSERT_NE(e, nullptr);
  const double cnt = 4;
  ASSERT_EQ(e->previous.size(), 3u);
  EXPECT_DOUBLE_EQ(e->previous[0], (cnt + 0.5) / (cnt + 1.5));
  EXPECT_DOUBLE_EQ(e->previous[1], 0.5 / (cnt + 1.5));
  EXPECT_DOUBLE_EQ(e->previous[2], 0.5 / (cnt + 1.5));
  EXPECT_DOUBLE_EQ(e->next[0], (cnt + 0.5) / (cnt + 1.5));

  auto hier = tmodel::train_reordering(c, al, Scheme::kHierMslr);
  const auto* h = hier.lookup({"a", "b"}, {"x", "y"});
  ASSERT_NE(h, nullptr);
  ASSERT_EQ(h->next.size(), 4u);
  EXPECT_DOUBLE_EQ(h->next[0], (cnt + 0.5) / (cnt + 2.0));
  EXPECT_DOUBLE_EQ(h->next[3], 0.5 / (cnt + 2.0));
}

TEST(Reordering, DistributionsPositiveAndNormalized) {
  std::mt19937 rng(9);
  auto sv = testing::make_vocab("s", 5);
  auto tv = testing::make_vocab("t", 5);
  ParallelCorpus c;
  std::vector<AlignmentMatrix> al;
  for (int k = 0; k < 60; ++k) {
    auto s = testing::random_tokens(&rng, sv, 1, 5);
    auto t = testing::random_tokens(&rng, tv, 1, 5);
    auto links = oracle::random_links(&rng, s.size(), t.size(), 0.3);
    AlignmentMatrix a(s.size(), t.size());
    for (auto [i, j] : links) a.set(i, j);
    c.add(s, t);
    al.push_back(a);
  }
  for (Scheme s : {Scheme::kMsd, Scheme::kHierMslr}) {
    auto table = tmodel::train_reordering(c, al, s);
    EXPECT_GT(table.size(), 0u);
    for (const auto& [key, e] : table.entries()) {
      for (const auto* dist : {&e.previous, &e.next}) {
        ASSERT_EQ(dist->size(), tmodel::orientation_count(s));
        double sum = 0;
        for (double p : *dist) {
          EXPECT_GT(p, 0.0);
          sum += p;
        }
        EXPECT_NEAR(sum, 1.0, 1e-9) << key;
      }
    }
  }
  EXPECT_THROW(tmodel::train_reordering(c, {}, Scheme::kMsd), Error);
}

TEST(Reordering, RoundTrip) {
  for (const char* scheme : {"msd", "hier-mslr"}) {
    auto model = testing::make_toy_model(4, scheme);
    ASSERT_TRUE(model.reordering);
    const std::string dir = testing::scratch_dir("tmodel_rt");
    model.reordering->save(dir + "/rt");
    auto back = tmodel::ReorderingTable::load(dir + "/rt");
    EXPECT_EQ(back.scheme(), model.reordering->scheme());
    ASSERT_EQ(back.size(), model.reordering->size());
    for (const auto& [key, e] : model.reordering->entries()) {
      const auto& o = back.entries().at(key);
      for (size_t k = 0; k < e.previous.size(); ++k) {
        EXPECT_NEAR(o.previous[k], e.previous[k], 1e-5 * e.previous[k]);
        EXPECT_NEAR(o.next[k], e.next[k], 1e-5 * e.next[k]);
      }
    }
  }
}

TEST(Reordering, SchemeNames) {
  EXPECT_EQ(tmodel::parse_scheme("msd"), Scheme::kMsd);
  EXPECT_EQ(tmodel::parse_scheme("hier-mslr"), Scheme::kHierMslr);
  EXPECT_THROW(tmodel::parse_scheme("lr"), Error);
  EXPECT_EQ(tmodel::orientation_index(Orientation::kDiscontinuousRight, Scheme::kHierMslr), 3u);
}

}  // namespace
}  // namespace smt
