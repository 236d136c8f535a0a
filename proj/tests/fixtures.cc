// fixtures.cc
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

#include "fixtures.hpp"

#include <filesystem>
#include <set>

namespace smt::testing {

namespace fs = std::filesystem;

std::string source_dir() { return SMT_TEST_SOURCE_DIR; }
std::string binary_dir() { return SMT_TEST_BINARY_DIR; }
std::string cli_path() { return SMT_TEST_CLI; }

std::string scratch_dir(const std::string& name) {
  const fs::path p = fs::path(binary_dir()) / "scratch" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

Tokens random_tokens(std::mt19937* rng, const std::vector<std::string>& vocab, size_t min_len, size_t max_len) {
  std::uniform_int_distribution<size_t> len(min_len, max_len);
  std::uniform_int_distribution<size_t> word(0, vocab.size() - 1);
  Tokens out(len(*rng));
  for (auto& w : out) w = vocab[word(*rng)];
  return out;
}

std::vector<Sentence> random_sentences(std::mt19937* rng, const std::vector<std::string>& vocab, size_t count,
                                       size_t min_len, size_t max_len) {
  std::vector<Sentence> out;
  for (size_t i = 0; i < count; ++i) out.push_back(Sentence{random_tokens(rng, vocab, min_len, max_len), {}});
  return out;
}

std::vector<std::string> make_vocab(const std::string& prefix, size_t size) {
  std::vector<std::string> out;
  for (size_t i = 0; i < size; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

namespace {

std::vector<double> random_distribution(std::mt19937* rng, size_t k) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> d(k);
  double total = 0;
  for (auto& x : d) total += (x = u(*rng));
  for (auto& x : d) x /= total;
  return d;
}

}  // namespace

ToyModel make_toy_model(uint32_t seed, const std::string& reordering) {
  std::mt19937 rng(seed);
  ToyModel m;
  m.source_vocab = {"a", "b", "c", "d", "e", "f", "g"};
  const std::vector<std::string> target = {"u", "v", "w", "x", "y", "z"};
  std::uniform_real_distribution<double> p(0.05, 1.0);
  std::uniform_int_distribution<size_t> tw(0, target.size() - 1);
  std::uniform_int_distribution<size_t> sw(0, 5);  // never "g"
  auto entry = [&](Tokens src, size_t tlen) {
    tmodel::PhraseTableEntry e;
    e.source = std::move(src);
    for (size_t i = 0; i < tlen; ++i) e.target.push_back(target[tw(rng)]);
    e.scores.phi_fe = p(rng);
    e.scores.phi_ef = p(rng);
    e.scores.lex_fe = p(rng);
    e.scores.lex_ef = p(rng);
    return e;
  };
  std::set<std::string> seen;
  auto add = [&](tmodel::PhraseTableEntry e) {
    const std::string key = text::join(e.source) + "|" + text::join(e.target);
    if (seen.insert(key).second) m.table.add(std::move(e));
  };
  for (size_t i = 0; i < 6; ++i) {
    add(entry({m.source_vocab[i]}, 1));
    if (rng() % 2) add(entry({m.source_vocab[i]}, 1 + rng() % 2));
  }
  for (int k = 0; k < 12; ++k) add(entry({m.source_vocab[sw(rng)], m.source_vocab[sw(rng)]}, 1 + rng() % 2));
  for (int k = 0; k < 5; ++k) {
    add(entry({m.source_vocab[sw(rng)], m.source_vocab[sw(rng)], m.source_vocab[sw(rng)]}, 1 + rng() % 3));
  }

  std::vector<Sentence> lm_corpus;
  for (int k = 0; k < 40; ++k) lm_corpus.push_back(Sentence{random_tokens(&rng, target, 1, 6), {}});
  m.lm = std::make_shared<lm::NGramLM>(lm::estimate(lm::count_ngrams(lm_corpus, 3), lm::Smoothing::kKneserNey));

  if (reordering != "none") {
    const auto scheme = tmodel::parse_scheme(reordering);
    tmodel::ReorderingTable reo(scheme);
    const size_t k = tmodel::orientation_count(scheme);
    for (const auto& [key, list] : m.table.entries()) {
      for (const auto& e : list) {
        // Leave a few pairs without an entry.
        if (rng() % 7 == 0) continue;
        reo.set(e.source, e.target, tmodel::ReorderingEntry{random_distribution(&rng, k), random_distribution(&rng, k)});
      }
    }
    m.reordering = std::move(reo);
  }
  return m;
}

decoder::FeatureWeights random_weights(std::mt19937* rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  decoder::FeatureWeights w;
  for (auto& x : w.w) x = u(*rng);
  return w;
}

decoder::DecoderConfig exact_config(int distortion_limit) {
  decoder::DecoderConfig c;
  c.stack_size = 0;
  c.beam = 0;
  c.table_limit = 0;
  c.distortion_limit = distortion_limit;
  return c;
}

}  // namespace smt::testing
