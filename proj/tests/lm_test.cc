// lm_test.cc
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
#include <map>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "smt/lm.hpp"

namespace smt {
namespace {

std::vector<Sentence> S(std::initializer_list<const char*> lines) {
  std::vector<Sentence> out;
  for (const char* l : lines) out.push_back(Sentence{text::split_ws(l), {}});
  return out;
}

uint64_t count_of(const lm::NGramCounts& c, std::initializer_list<const char*> words) {
  lm::NGram g;
  for (const char* w : words) g.push_back(c.vocab.lookup(w));
  return c.count(g);
}

TEST(CountNgramsTest, HandCounts) {
  const auto c = lm::count_ngrams(S({"a a"}), 2);
  EXPECT_EQ(count_of(c, {"<s>", "a"}), 1u);
  EXPECT_EQ(count_of(c, {"a", "a"}), 1u);
  EXPECT_EQ(count_of(c, {"a", "</s>"}), 1u);
  EXPECT_EQ(c.counts[1].size(), 3u);
  EXPECT_EQ(count_of(c, {"a"}), 2u);
  EXPECT_EQ(count_of(c, {"</s>"}), 1u);
  EXPECT_EQ(c.counts[0].size(), 2u);

  const auto u = lm::count_ngrams(S({"a b", "b a"}), 1);
  EXPECT_EQ(count_of(u, {"a"}), 2u);
  EXPECT_EQ(count_of(u, {"b"}), 2u);
  EXPECT_EQ(count_of(u, {"</s>"}), 2u);

  const auto e = lm::count_ngrams({}, 3);
  for (const auto& table : e.counts) EXPECT_TRUE(table.empty());
}

TEST(CountNgramsTest, ContinuationCounts) {
  const auto c = lm::count_ngrams(S({"a b", "c b"}), 2);
  EXPECT_EQ(c.continuation_count({c.vocab.lookup("b")}), 2u);
  EXPECT_EQ(c.continuation_count({c.vocab.lookup("a")}), 1u);
}

TEST(WittenBellTest, HandFormula) {
  const auto m = lm::estimate(lm::count_ngrams(S({"a b", "a c"}), 2), lm::Smoothing::kWittenBell);
  // Unigram level: 6 tokens, 4 types, uniform over {a, b, c, </s>, UNK}.
  const double uniform = 1.0 / 5.0;
  auto floor = [&](double p) { return (1.0 - lm::kUnigramFloor) * p + lm::kUnigramFloor * uniform; };
  const double p_b = floor(1.0 / 10.0 + 4.0 / 10.0 * uniform);
  // History "a": two continuations, count 2, so lambda = 0.5.
  const double lambda = 2.0 / (2.0 + 2.0);
  const double want = (1.0 - lambda) * 1.0 / 2.0 + lambda * p_b;
  std::vector<std::string> h = {"a"};
  EXPECT_NEAR(std::exp(m.log_prob(h, "b")), want, 1e-12);
  EXPECT_NEAR(std::exp(m.log_prob({}, "b")), p_b, 1e-12);
}

TEST(KneserNeyTest, DiscountAndContinuation) {
  const auto counts = lm::count_ngrams(S({"a b", "c b", "a d", "a b"}), 2);
  const auto m = lm::estimate(counts, lm::Smoothing::kKneserNey);
  // Bigram count-of-counts: (<s>,a)=3, (a,b)=2, (b,</s>)=3, (<s>,c)=1, (c,b)=1, (a,d)=1, (d,</s>)=1.
  const double d2 = 4.0 / (4.0 + 2.0 * 1.0);
  EXPECT_NEAR(m.discounts()[1], d2, 1e-12);
  // p(b|a) = (2 - D)/3 + D * 2/3 * p_cont(b).
  // Unigram continuation counts: a:1 (<s>), b:2 (a, c), c:1, d:1, </s>:2 (b, d).
  // That level's own discount uses continuation count-of-counts n1=3, n2=2.
  const double d1 = 3.0 / (3.0 + 4.0);
  const double uniform = 1.0 / 6.0;  // a b c d </s> UNK
  const double total = 7.0, types = 5.0;
  double p_cont_b = std::max(2.0 - d1, 0.0) / total + d1 * types / total * uniform;
  p_cont_b = (1.0 - lm::kUnigramFloor) * p_cont_b + lm::kUnigramFloor * uniform;
  const double want = (2.0 - d2) / 3.0 + d2 * 2.0 / 3.0 * p_cont_b;
  std::vector<std::string> h = {"a"};
  EXPECT_NEAR(std::exp(m.log_prob(h, "b")), want, 1e-12);
}

TEST(KneserNeyTest, DegenerateCountsFallBack) {
  // Every bigram seen exactly three times: n1 = n2 = 0.
  const auto m = lm::estimate(lm::count_ngrams(S({"x", "x", "x"}), 2), lm::Smoothing::kKneserNey);
  EXPECT_TRUE(m.witten_bell_fallback()[1]);
}

TEST(NormalizationTest, EverySeenHistory) {
  std::mt19937 rng(17);
  const auto vocab = testing::make_vocab("w", 6);
  const auto corpus = testing::random_sentences(&rng, vocab, 30, 0, 6);
  std::vector<std::string> words = vocab;
  words.push_back(lm::kEos);
  for (auto s : {lm::Smoothing::kWittenBell, lm::Smoothing::kKneserNey}) {
    for (int order = 1; order <= 4; ++order) {
      const auto m = lm::estimate(lm::count_ngrams(corpus, order), s);
      for (const auto& h : m.histories()) {
        Tokens ht;
        for (auto id : h) ht.push_back(m.vocab().word(id));
        EXPECT_NEAR(oracle::distribution_mass(m, ht, words), 1.0, 1e-9) << text::join(ht);
        for (const auto& w : words) {
          const double p = std::exp(m.log_prob(ht, w));
          EXPECT_GT(p, 0.0);
          EXPECT_LE(p, 1.0);
        }
      }
    }
  }
}

TEST(ArpaTest, RoundTrip) {
  std::mt19937 rng(23);
  const auto vocab = testing::make_vocab("w", 5);
  const auto corpus = testing::random_sentences(&rng, vocab, 25, 1, 6);
  const std::string dir = testing::scratch_dir("arpa");
  for (auto s : {lm::Smoothing::kWittenBell, lm::Smoothing::kKneserNey}) {
    const auto m = lm::estimate(lm::count_ngrams(corpus, 3), s);
    lm::save_arpa(dir + "/m.arpa", m);
    const auto back = lm::load_arpa(dir + "/m.arpa");
    EXPECT_EQ(back.order(), 3);
    std::vector<std::string> words = vocab;
    words.push_back(lm::kEos);
    words.push_back("never-seen");
    for (const auto& h : m.histories()) {
      Tokens ht;
      for (auto id : h) ht.push_back(m.vocab().word(id));
      for (const auto& w : words) EXPECT_NEAR(back.log_prob(ht, w), m.log_prob(ht, w), 1e-12);
    }
  }
}

// Uniform over n words plus UNK; "</s>" is one of the n.
class UniformLM : public lm::LanguageModel {
 public:
  explicit UniformLM(size_t v) : v_(v) {}
  int order() const override { return 1; }
  double log_prob(std::span<const std::string>, const std::string&) const override {
    return -std::log(static_cast<double>(v_));
  }
  bool known(const std::string&) const override { return true; }

 private:
  size_t v_;
};

TEST(PerplexityTest, Definitions) {
  const UniformLM u(7);
  EXPECT_NEAR(lm::perplexity(u, S({"a b c", "d", "zz yy"})).perplexity, 7.0, 1e-12);

  std::mt19937 rng(29);
  const auto va = testing::make_vocab("a", 6);
  const auto vb = testing::make_vocab("b", 6);
  const auto train = testing::random_sentences(&rng, va, 40, 1, 6);
  const auto m = lm::estimate(lm::count_ngrams(train, 3), lm::Smoothing::kKneserNey);
  const auto foreign = testing::random_sentences(&rng, vb, 40, 1, 6);
  const auto st = lm::perplexity(m, train);
  EXPECT_LE(st.perplexity, lm::perplexity(m, foreign).perplexity);
  size_t foreign_words = 0;
  for (const auto& f : foreign) foreign_words += f.size();
  EXPECT_EQ(lm::perplexity(m, foreign).oov, foreign_words);

  const auto one = S({"a0 a1 a2"});
  const auto s1 = lm::perplexity(m, one);
  EXPECT_EQ(s1.tokens, 4u);
  EXPECT_NEAR(s1.perplexity, std::exp(-lm::sentence_log_prob(m, one[0]) / 4.0), 1e-12);
}

TEST(InterpolationTest, EmProperties) {
  std::mt19937 rng(31);
  const auto va = testing::make_vocab("a", 8);
  const auto vb = testing::make_vocab("b", 8);
  auto a = std::make_shared<lm::NGramLM>(
      lm::estimate(lm::count_ngrams(testing::random_sentences(&rng, va, 60, 1, 6), 2), lm::Smoothing::kWittenBell));
  auto b = std::make_shared<lm::NGramLM>(
      lm::estimate(lm::count_ngrams(testing::random_sentences(&rng, vb, 60, 1, 6), 2), lm::Smoothing::kWittenBell));
  const auto heldout = testing::random_sentences(&rng, va, 30, 1, 6);

  const auto fit = lm::fit_interpolation({a, b}, heldout);
  ASSERT_EQ(fit.weights.size(), 2u);
  EXPECT_GT(fit.weights[0], fit.weights[1]);
  EXPECT_NEAR(fit.weights[0] + fit.weights[1], 1.0, 1e-12);
  for (double w : fit.weights) EXPECT_GE(w, 0.0);
  for (size_t i = 1; i < fit.log_likelihood.size(); ++i) {
    EXPECT_GE(fit.log_likelihood[i], fit.log_likelihood[i - 1] - 1e-12);
  }
  const lm::InterpolatedLM mix({a, b}, fit.weights);
  const double pm = lm::perplexity(mix, heldout).perplexity;
  EXPECT_LE(pm, lm::perplexity(*a, heldout).perplexity + 1e-9);
  EXPECT_LE(pm, lm::perplexity(*b, heldout).perplexity + 1e-9);

  // Mixture probability is the pointwise mixture.
  std::vector<std::string> h = {"a1"};
  const double want = fit.weights[0] * std::exp(a->log_prob(h, "a2")) + fit.weights[1] * std::exp(b->log_prob(h, "a2"));
  EXPECT_NEAR(std::exp(mix.log_prob(h, "a2")), want, 1e-12);

  // Identical components.
  const auto same = lm::fit_interpolation({a, a}, heldout);
  const lm::InterpolatedLM mix2({a, a}, same.weights);
  EXPECT_NEAR(lm::perplexity(mix2, heldout).perplexity, lm::perplexity(*a, heldout).perplexity, 1e-9);
}

TEST(MixtureFileTest, SaveAndLoad) {
  const std::string dir = testing::scratch_dir("mixture");
  const auto m1 = lm::estimate(lm::count_ngrams(S({"a b", "b c"}), 2), lm::Smoothing::kKneserNey);
  const auto m2 = lm::estimate(lm::count_ngrams(S({"c c", "a"}), 2), lm::Smoothing::kWittenBell);
  lm::save_arpa(dir + "/1.arpa", m1);
  lm::save_arpa(dir + "/2.arpa", m2);
  lm::save_mixture(dir + "/mix", {dir + "/1.arpa", dir + "/2.arpa"}, {0.25, 0.75});
  const auto mix = lm::load_model(dir + "/mix");
  std::vector<std::string> h = {"a"};
  const double want = 0.25 * std::exp(m1.log_prob(h, "b")) + 0.75 * std::exp(m2.log_prob(h, "b"));
  EXPECT_NEAR(std::exp(mix->log_prob(h, "b")), want, 1e-12);
  const auto plain = lm::load_model(dir + "/1.arpa");
  EXPECT_NEAR(plain->log_prob(h, "b"), m1.log_prob(h, "b"), 1e-12);
}

}  // namespace
}  // namespace smt
