// decoder.hpp
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
// Log-linear phrase-based stack decoder.
//
// Feature order (all in the log domain, score = sum of weight * value):
//   0 phi_fe          log phi(source | target)
//   1 phi_ef          log phi(target | source)
//   2 lex_fe          log lex(source | target)
//   3 lex_ef          log lex(target | source)
//   4 phrase_penalty  +1 per phrase
//   5 word_penalty    -1 per target word
//   6 distortion      -|start(next) - end(prev)| (end exclusive)
//   7 lm              natural-log LM score, "</s>" included
//   8 oov             -1 per copied unknown word
//   9..12 reo_prev_*  log p(orientation | phrase pair) w.r.t. the previous phrase
//   13..16 reo_next_* log p(orientation | phrase pair) w.r.t. the next phrase
// Reordering slots are monotone, swap, discontinuous-left and
// discontinuous-right (msd puts discontinuous in the third slot and leaves
// the fourth at zero).

#ifndef SMT_DECODER_HPP_
#define SMT_DECODER_HPP_

#include <array>
#include <string>
#include <vector>

#include "smt/lm.hpp"
#include "smt/tmodel.hpp"

namespace smt::decoder {

inline constexpr size_t kNumFeatures = 17;

enum FeatureIndex : size_t {
  kPhiFe = 0,
  kPhiEf,
  kLexFe,
  kLexEf,
  kPhrasePenalty,
  kWordPenalty,
  kDistortion,
  kLm,
  kOov,
  kReoPrev,  // 4 slots
  kReoNext = kReoPrev + 4,
};

using FeatureVector = std::array<double, kNumFeatures>;

const std::array<const char*, kNumFeatures>& feature_names();

struct FeatureWeights {
  FeatureVector w{};

  static FeatureWeights defaults();
  double dot(const FeatureVector& f) const;

  // "name value" lines; unknown names are an error, missing names keep the
  // default.
  void save(const std::string& path) const;
  static FeatureWeights load(const std::string& path);
  std::string to_string() const;
};

struct DecoderConfig {
  size_t stack_size = 100;     // histogram limit; 0 = unlimited
  double beam = 1e-4;          // relative threshold; 0 = disabled
  int distortion_limit = 6;    // < 0 = unlimited
  size_t table_limit = 20;     // options per source span; 0 = unlimited
};

struct Models {
  const tmodel::PhraseTable* table = nullptr;
  const lm::LanguageModel* lm = nullptr;
  const tmodel::ReorderingTable* reordering = nullptr;  // optional
};

struct Step {
  size_t src_begin = 0;
  size_t src_end = 0;  // exclusive
  Tokens target;
  bool oov = false;
};

struct Translation {
  Tokens target;
  double score = 0.0;
  FeatureVector features{};
  std::vector<Step> steps;  // in target order

  std::string text() const { return text::join(target, " "); }
};

class Decoder {
 public:
  Decoder(Models models, FeatureWeights weights, DecoderConfig config = {});

  Translation decode(const Tokens& source) const;
  // Up to k translations with distinct target strings, best first.
  std::vector<Translation> nbest(const Tokens& source, size_t k) const;

  // Future cost estimate of every span: result[i][j] for 0 <= i < j <= n.
  std::vector<std::vector<double>> future_cost(const Tokens& source) const;

  const FeatureWeights& weights() const { return weights_; }
  void set_weights(const FeatureWeights& w) { weights_ = w; }
  const DecoderConfig& config() const { return config_; }

 private:
  Models models_;
  FeatureWeights weights_;
  DecoderConfig config_;
};

// "idx ||| translation ||| f0 f1 ... ||| score".
std::string format_nbest(size_t index, const Translation& t);

}  // namespace smt::decoder

#endif  // SMT_DECODER_HPP_
