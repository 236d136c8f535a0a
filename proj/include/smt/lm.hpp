// lm.hpp
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
// Interpolated n-gram language models (Witten-Bell and Kneser-Ney), stored
// in back-off form so that they export to ARPA without approximation.
//
// Sentences are padded with order-1 "<s>" markers and one "</s>". "</s>" is
// predicted and counts as a token for perplexity; "<s>" never is. Unknown
// words map to "<unk>", which only gets mass from the uniform base
// distribution over the vocabulary (minus "<s>").

#ifndef SMT_LM_HPP_
#define SMT_LM_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "smt/corpus.hpp"

namespace smt::lm {

using WordId = uint32_t;
using NGram = std::vector<WordId>;

inline constexpr const char* kUnk = "<unk>";
inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr int kMaxOrder = 7;
// Mass mixed into the unigram distribution from the uniform floor.
inline constexpr double kUnigramFloor = 1e-7;

struct NGramHash {
  size_t operator()(const NGram& g) const noexcept {
    uint64_t h = 1469598103934665603ULL;
    for (WordId w : g) {
      h ^= w;
      h *= 1099511628211ULL;
    }
    return static_cast<size_t>(h ^ (h >> 29));
  }
};

template <typename V>
using NGramMap = std::unordered_map<NGram, V, NGramHash>;

class Vocabulary {
 public:
  static constexpr WordId kUnkId = 0;
  static constexpr WordId kBosId = 1;
  static constexpr WordId kEosId = 2;

  Vocabulary();

  WordId insert(const std::string& word);
  // kUnkId for unknown words.
  WordId lookup(const std::string& word) const;
  bool contains(const std::string& word) const { return ids_.contains(word); }
  const std::string& word(WordId id) const { return words_.at(id); }
  size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
};

struct NGramCounts {
  int order = 0;
  Vocabulary vocab;
  // counts[k-1]: k-grams ending at a predicted position.
  std::vector<NGramMap<uint64_t>> counts;
  // continuation[k-1]: number of distinct words seen immediately before the
  // k-gram; defined for k < order.
  std::vector<NGramMap<uint64_t>> continuation;

  uint64_t count(const NGram& g) const;
  uint64_t continuation_count(const NGram& g) const;
  // Adds another count table over the same order (vocabularies are merged).
  void merge(const NGramCounts& other);
};

NGramCounts count_ngrams(const std::vector<Sentence>& corpus, int order);

// Text dump, one "w1 w2 ...<TAB>count" per line, orders ascending.
void write_counts(std::ostream& out, const NGramCounts& counts);

enum class Smoothing { kWittenBell, kKneserNey };

const char* smoothing_name(Smoothing s);
Smoothing parse_smoothing(const std::string& name);

class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual int order() const = 0;
  // Natural-log probability of word given up to order()-1 preceding tokens
  // (oldest first; may contain "<s>"). Unknown words score as "<unk>".
  virtual double log_prob(std::span<const std::string> context, const std::string& word) const = 0;
  virtual bool known(const std::string& word) const = 0;
};

class NGramLM : public LanguageModel {
 public:
  struct Entry {
    double log10_prob = 0.0;
    double log10_backoff = 0.0;
    bool has_backoff = false;  // entry is a history of a higher order
  };

  NGramLM() = default;

  int order() const override { return order_; }
  double log_prob(std::span<const std::string> context, const std::string& word) const override;
  bool known(const std::string& word) const override;

  // log10 p(word | context) over word ids.
  double log10_prob(std::span<const WordId> context, WordId word) const;
  double prob(std::span<const WordId> context, WordId word) const;

  const Vocabulary& vocab() const { return vocab_; }
  Smoothing smoothing() const { return smoothing_; }
  // discounts()[k-1] for order k; zero for Witten-Bell orders.
  const std::vector<double>& discounts() const { return discounts_; }
  // True when Kneser-Ney estimation fell back to Witten-Bell at that order.
  const std::vector<bool>& witten_bell_fallback() const { return wb_fallback_; }

  const NGramMap<Entry>& table(int k) const { return tables_.at(k - 1); }
  // Every history with positive count at some order, including the empty one.
  std::vector<NGram> histories() const;
  // Words a distribution ranges over: vocabulary minus "<s>".
  std::vector<WordId> predictable_words() const;

  friend NGramLM estimate(const NGramCounts& counts, Smoothing smoothing);
  friend NGramLM read_arpa(std::istream& in);
  friend void write_arpa(std::ostream& out, const NGramLM& lm);

 private:
  int order_ = 0;
  Vocabulary vocab_;
  Smoothing smoothing_ = Smoothing::kKneserNey;
  std::vector<double> discounts_;
  std::vector<bool> wb_fallback_;
  std::vector<NGramMap<Entry>> tables_;
};

NGramLM estimate(const NGramCounts& counts, Smoothing smoothing);
inline NGramLM estimate_wb(const NGramCounts& counts) { return estimate(counts, Smoothing::kWittenBell); }
inline NGramLM estimate_kn(const NGramCounts& counts) { return estimate(counts, Smoothing::kKneserNey); }

// ARPA text. The header carries the smoothing metadata as '#' comment lines
// ahead of "\data\"; numbers use the shortest round-trip representation, so
// write(read(write(m))) reproduces the text byte for byte.
void write_arpa(std::ostream& out, const NGramLM& lm);
NGramLM read_arpa(std::istream& in);
void save_arpa(const std::string& path, const NGramLM& lm);
NGramLM load_arpa(const std::string& path);

// Pointwise mixture of component models.
class InterpolatedLM : public LanguageModel {
 public:
  InterpolatedLM(std::vector<std::shared_ptr<const LanguageModel>> components, std::vector<double> weights);

  int order() const override { return order_; }
  double log_prob(std::span<const std::string> context, const std::string& word) const override;
  bool known(const std::string& word) const override;

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<std::shared_ptr<const LanguageModel>>& components() const { return components_; }

 private:
  std::vector<std::shared_ptr<const LanguageModel>> components_;
  std::vector<double> weights_;
  int order_ = 0;
};

// Natural-log probability of the padded sentence, "</s>" included.
double sentence_log_prob(const LanguageModel& lm, const Sentence& sentence);

struct PerplexityStats {
  double log_prob = 0.0;  // natural log
  size_t tokens = 0;      // predicted tokens, "</s>" included
  size_t oov = 0;
  double perplexity = 0.0;
};

PerplexityStats perplexity(const LanguageModel& lm, const std::vector<Sentence>& corpus);

struct InterpolationOptions {
  double tolerance = 1e-6;  // per-token log-likelihood improvement
  int max_iterations = 10000;
};

struct InterpolationResult {
  std::vector<double> weights;
  // Per-token held-out log-likelihood before each update and after the last.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool vertex_chosen = false;  // a single component beat the EM fixed point
};

// Fits mixture weights on held-out text by expectation-maximization.
InterpolationResult fit_interpolation(const std::vector<std::shared_ptr<const LanguageModel>>& components,
                                      const std::vector<Sentence>& heldout,
                                      const InterpolationOptions& options = {});

InterpolatedLM interpolate(const std::vector<std::shared_ptr<const LanguageModel>>& components,
                           const std::vector<Sentence>& heldout,
                           const InterpolationOptions& options = {});

// "weight<TAB>arpa-path" per line.
void save_mixture(const std::string& path, const std::vector<std::string>& arpa_paths,
                  const std::vector<double>& weights);
std::shared_ptr<const LanguageModel> load_model(const std::string& path);

}  // namespace smt::lm

#endif  // SMT_LM_HPP_
