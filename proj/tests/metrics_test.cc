// metrics_test.cc
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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "smt/metrics.hpp"

namespace smt {
namespace {

std::vector<Tokens> C(std::initializer_list<std::string> lines) {
  std::vector<Tokens> out;
  for (const auto& l : lines) out.push_back(text::split_ws(l));
  return out;
}

std::vector<Tokens> random_corpus(std::mt19937* rng, size_t n, size_t lo, size_t hi,
                                  const std::vector<std::string>& vocab) {
  std::vector<Tokens> out;
  for (size_t k = 0; k < n; ++k) out.push_back(testing::random_tokens(rng, vocab, lo, hi));
  return out;
}

// Reference with random edits applied.
std::vector<Tokens> perturb(std::mt19937* rng, const std::vector<Tokens>& refs, const std::vector<std::string>& vocab) {
  std::vector<Tokens> out;
  for (auto t : refs) {
    const int edits = static_cast<int>((*rng)() % 4);
    for (int e = 0; e < edits; ++e) {
      const int kind = static_cast<int>((*rng)() % 4);
      if (kind == 0 && !t.empty()) {
        t.erase(t.begin() + static_cast<long>((*rng)() % t.size()));
      } else if (kind == 1) {
        t.insert(t.begin() + static_cast<long>((*rng)() % (t.size() + 1)), vocab[(*rng)() % vocab.size()]);
      } else if (kind == 2 && !t.empty()) {
        t[(*rng)() % t.size()] = vocab[(*rng)() % vocab.size()];
      } else if (t.size() > 2) {
        const size_t a = (*rng)() % t.size();
        const size_t b = (*rng)() % t.size();
        std::swap(t[a], t[b]);
      }
    }
    out.push_back(t);
  }
  return out;
}

TEST(Bleu, Examples) {
  auto same = C({"the cat sat", "on the mat"});
  EXPECT_DOUBLE_EQ(metrics::bleu(same, same).score, 100.0);

  auto r = metrics::bleu(C({"the the the the"}), C({"the cat"}), 1);
  EXPECT_EQ(r.matches[0], 1u);
  EXPECT_EQ(r.totals[0], 4u);
  EXPECT_DOUBLE_EQ(r.precisions[0], 0.25);

  auto b2 = metrics::bleu(C({"the cat"}), C({"the cat sat"}), 2);
  EXPECT_NEAR(b2.score, 100.0 * std::exp(1.0 - 1.5), 1e-9);
  EXPECT_NEAR(b2.score, 60.65, 0.005);
  EXPECT_DOUBLE_EQ(b2.brevity_penalty, std::exp(-0.5));

  // No 4-gram match.
  EXPECT_EQ(metrics::bleu(C({"a b c d"}), C({"a b c e"})).score, 0.0);
  EXPECT_THROW(metrics::bleu(C({"a"}), C({"a", "b"})), Error);
}

TEST(Bleu, MatchesOracle) {
  std::mt19937 rng(31);
  const auto vocab = testing::make_vocab("w", 6);
  for (int trial = 0; trial < 200; ++trial) {
    auto refs = random_corpus(&rng, 1 + rng() % 6, 0, 8, vocab);
    auto hyps = perturb(&rng, refs, vocab);
    for (int n : {1, 2, 4}) {
      EXPECT_NEAR(metrics::bleu(hyps, refs, n).score, oracle::bleu(hyps, refs, n), 1e-9);
    }
  }
}

TEST(Bleu, SegmentOrderInvariant) {
  std::mt19937 rng(8);
  const auto vocab = testing::make_vocab("w", 5);
  auto refs = random_corpus(&rng, 12, 3, 9, vocab);
  auto hyps = perturb(&rng, refs, vocab);
  std::vector<size_t> idx(refs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<Tokens> h2, r2;
  for (size_t i : idx) {
    h2.push_back(hyps[i]);
    r2.push_back(refs[i]);
  }
  EXPECT_DOUBLE_EQ(metrics::bleu(hyps, refs).score, metrics::bleu(h2, r2).score);
  EXPECT_DOUBLE_EQ(metrics::nist(hyps, refs).score, metrics::nist(h2, r2).score);
}

TEST(Nist, Examples) {
  EXPECT_EQ(metrics::nist(C({""}), C({"a b"})).score, 0.0);
  EXPECT_EQ(metrics::nist({}, {}).score, 0.0);
  auto ab = C({"a b"});
  EXPECT_NEAR(metrics::nist(ab, ab).score, oracle::nist(ab, ab, 5), 1e-12);
  // Two unigrams of info log2(2/1) each and one bigram of info 0, over two
  // hypothesis unigrams and one bigram.
  EXPECT_NEAR(metrics::nist(ab, ab).score, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(metrics::nist(ab, ab).brevity_factor, 1.0);
  EXPECT_THROW(metrics::nist(C({"a"}), {}), Error);
}

TEST(Nist, BrevityCalibration) {
  // hyp/ref = 2/3 gives a factor of one half.
  auto r = metrics::nist(C({"a b"}), C({"a b c"}));
  EXPECT_NEAR(r.brevity_factor, 0.5, 1e-12);
}

TEST(Nist, MatchesOracle) {
  std::mt19937 rng(37);
  const auto vocab = testing::make_vocab("w", 6);
  for (int trial = 0; trial < 200; ++trial) {
    auto refs = random_corpus(&rng, 1 + rng() % 6, 0, 8, vocab);
    auto hyps = perturb(&rng, refs, vocab);
    const double got = metrics::nist(hyps, refs).score;
    EXPECT_NEAR(got, oracle::nist(hyps, refs, 5), 1e-9);
    EXPECT_GE(got, 0.0);
  }
}

TEST(Ter, Examples) {
  auto same = C({"a b c"});
  EXPECT_EQ(metrics::ter(same, same).score, 0.0);
  auto swap = metrics::ter(C({"b a"}), C({"a b"}));
  EXPECT_DOUBLE_EQ(swap.score, 50.0);
  EXPECT_EQ(swap.shifts, 1u);
  EXPECT_NEAR(metrics::ter(C({"a x c"}), C({"a b c"})).score, 100.0 / 3, 1e-9);
  EXPECT_THROW(metrics::ter(C({"a"}), C({})), Error);
}

TEST(Wer, Examples) {
  EXPECT_EQ(metrics::wer(C({"a b"}), C({"a b"})).score, 0.0);
  EXPECT_NEAR(metrics::wer(C({"a b c"}), C({"a x c"})).score, 100.0 / 3, 1e-9);
  EXPECT_DOUBLE_EQ(metrics::wer(C({""}), C({"a b"})).score, 100.0);
  // Corpus-summed, not averaged per segment.
  EXPECT_DOUBLE_EQ(metrics::wer(C({"a", "x y z w"}), C({"b", "x y z w"})).score, 20.0);
  EXPECT_THROW(metrics::wer(C({}), C({"a"})), Error);
}

TEST(Edits, LevenshteinMatchesOracle) {
  std::mt19937 rng(41);
  const auto vocab = testing::make_vocab("w", 4);
  for (int k = 0; k < 500; ++k) {
    auto a = testing::random_tokens(&rng, vocab, 0, 9);
    auto b = testing::random_tokens(&rng, vocab, 0, 9);
    EXPECT_EQ(metrics::levenshtein(a, b), oracle::edit_distance(a, b));
  }
}

TEST(Edits, TerNeverAboveWer) {
  std::mt19937 rng(43);
  const auto vocab = testing::make_vocab("w", 5);
  for (int trial = 0; trial < 100; ++trial) {
    auto refs = random_corpus(&rng, 1 + rng() % 5, 1, 12, vocab);
    auto hyps = perturb(&rng, refs, vocab);
    EXPECT_LE(metrics::ter(hyps, refs).score, metrics::wer(hyps, refs).score + 1e-12);
    EXPECT_EQ(metrics::ter(refs, refs).score, 0.0);
    EXPECT_EQ(metrics::wer(refs, refs).score, 0.0);
    EXPECT_DOUBLE_EQ(metrics::bleu(refs, refs).score, 100.0);
  }
}

// Exhaustive search over the same moves greedy may make: blocks that occur
// in the reference (the distance and length caps do not bind at 5 tokens).
TEST(Edits, GreedyShiftsMatchExhaustiveOnShortSentences) {
  std::mt19937 rng(47);
  size_t mismatches = 0;
  size_t total = 0;
  for (size_t v : {2, 3, 4}) {
    const auto vocab = testing::make_vocab("w", v);
    for (int k = 0; k < 800; ++k) {
      auto ref = testing::random_tokens(&rng, vocab, 1, 5);
      auto hyp = testing::random_tokens(&rng, vocab, 0, 5);
      const size_t greedy = metrics::ter_edits(hyp, ref);
      const size_t best = oracle::exhaustive_ter_edits(hyp, ref, true);
      ++total;
      EXPECT_GE(greedy, oracle::exhaustive_ter_edits(hyp, ref, false));
      if (greedy != best) {
        ++mismatches;
        ADD_FAILURE() << text::join(hyp) << " | " << text::join(ref) << ": greedy " << greedy << " exhaustive "
                      << best;
      }
    }
  }
  EXPECT_EQ(mismatches, 0u) << "of " << total;
}

// Moving a block absent from the reference can beat every allowed move.
TEST(Edits, UnrestrictedShiftCanDoBetter) {
  auto hyp = text::split_ws("w0 w1 w1 w2 w1");
  auto ref = text::split_ws("w2 w2 w1 w0 w0");
  EXPECT_EQ(metrics::ter_edits(hyp, ref), 4u);
  EXPECT_EQ(oracle::exhaustive_ter_edits(hyp, ref, true), 4u);
  EXPECT_EQ(oracle::exhaustive_ter_edits(hyp, ref, false), 3u);
}

TEST(Report, EvaluateAndText) {
  auto hyps = C({"the cat sat on the mat", "a dog"});
  auto refs = C({"the cat sat on the mat", "the dog"});
  auto r = metrics::evaluate(hyps, refs);
  EXPECT_DOUBLE_EQ(r.bleu.score, metrics::bleu(hyps, refs).score);
  EXPECT_DOUBLE_EQ(r.nist.score, metrics::nist(hyps, refs).score);
  EXPECT_DOUBLE_EQ(r.ter.score, metrics::ter(hyps, refs).score);
  EXPECT_DOUBLE_EQ(r.wer.score, 12.5);
  const std::string text = r.to_text();
  for (const char* key : {"BLEU\t", "NIST\t", "TER\t", "WER\t"}) EXPECT_NE(text.find(key), std::string::npos);
  EXPECT_EQ(metrics::lowercase_all(C({"The CAT"})), C({"the cat"}));
}

}  // namespace
}  // namespace smt
