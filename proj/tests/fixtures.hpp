// fixtures.hpp
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
//
// \file
// Shared test data: random corpora, a small random decoding model and
// scratch directories.

#ifndef SMT_TESTS_FIXTURES_HPP_
#define SMT_TESTS_FIXTURES_HPP_

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "smt/corpus.hpp"
#include "smt/decoder.hpp"
#include "smt/lm.hpp"
#include "smt/tmodel.hpp"

namespace smt::testing {

// Source tree and build tree roots, set by the build.
std::string source_dir();
std::string binary_dir();
std::string cli_path();

// Fresh empty directory under the build tree.
std::string scratch_dir(const std::string& name);

Tokens random_tokens(std::mt19937* rng, const std::vector<std::string>& vocab, size_t min_len, size_t max_len);
std::vector<Sentence> random_sentences(std::mt19937* rng, const std::vector<std::string>& vocab, size_t count,
                                       size_t min_len, size_t max_len);
std::vector<std::string> make_vocab(const std::string& prefix, size_t size);

// Phrase table over source words "a".."g" ("g" has no entry), a trigram
// LM over the target words and, optionally, a reordering table.
struct ToyModel {
  tmodel::PhraseTable table;
  std::shared_ptr<lm::NGramLM> lm;
  std::optional<tmodel::ReorderingTable> reordering;
  std::vector<std::string> source_vocab;

  decoder::Models models() const {
    return decoder::Models{&table, lm.get(), reordering ? &*reordering : nullptr};
  }
};

// reordering: "none", "msd" or "hier-mslr".
ToyModel make_toy_model(uint32_t seed, const std::string& reordering);

decoder::FeatureWeights random_weights(std::mt19937* rng);

// Pruning off.
decoder::DecoderConfig exact_config(int distortion_limit);

}  // namespace smt::testing

#endif  // SMT_TESTS_FIXTURES_HPP_
