// pipeline.hpp
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
// Experiment configuration, staged train/tune/evaluate runs with a
// content-addressed stage cache, weight tuning and the cascade evaluation.
//
// Config grammar: one "section.key = value" per line; '#' starts a comment
// line; blank lines are ignored; values are taken verbatim after trimming.
// Relative paths resolve against the directory of the config file.

#ifndef SMT_PIPELINE_HPP_
#define SMT_PIPELINE_HPP_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smt/align.hpp"
#include "smt/corpus.hpp"
#include "smt/decoder.hpp"
#include "smt/lm.hpp"
#include "smt/metrics.hpp"
#include "smt/tmodel.hpp"

namespace smt::pipeline {

class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& base_dir = ".");

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback = {}) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;
  // Resolved against base_dir; empty when unset.
  std::string get_path(const std::string& key) const;

  // "key = value" lines of one section, sorted; used in cache keys.
  std::string section(const std::string& name) const;
  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& base_dir() const { return base_dir_; }

 private:
  std::map<std::string, std::string> values_;
  std::string base_dir_ = ".";
};

struct ExperimentConfig {
  std::string output_dir;
  std::string source_lang = "src";
  std::string target_lang = "tgt";

  std::string train_source, train_target;
  std::string dev_source, dev_target;
  std::string test_source, test_target;
  std::string asr_hypotheses;  // optional

  bool truecase = false;
  bool lowercase = false;
  bool compound_split = false;
  std::string transform_lexicon;  // optional
  CleanOptions clean;

  int lm_order = 5;
  lm::Smoothing smoothing = lm::Smoothing::kKneserNey;
  std::vector<std::string> lm_extra;  // additional target-language corpora

  std::string align_model = "model2";  // model1 | model2
  int align_iterations = 5;
  align::Heuristic heuristic = align::Heuristic::kGrowDiagFinalAnd;

  size_t max_phrase_len = tmodel::kDefaultMaxPhraseLen;
  std::string reordering = "msd";  // msd | hier-mslr | none

  decoder::DecoderConfig decoder;
  std::string weights_file;  // optional initial weights

  bool tune = true;
  int tune_iterations = 3;
  size_t tune_nbest = 20;

  std::vector<std::string> metrics = {"bleu", "nist", "ter", "wer"};
  bool eval_lowercase = true;
  bool cascade = true;

  // Parses and validates: unknown keys, bad values and missing input files
  // are errors.
  static ExperimentConfig from(const Config& config);
  static ExperimentConfig load(const std::string& path);

  Config raw;
};

struct StageRecord {
  std::string name;
  bool skipped = false;
  double seconds = 0.0;
  std::vector<std::string> artifacts;
};

struct ScoreLine {
  std::string metric;
  std::string condition;
  double value = 0.0;
};

struct ExperimentReport {
  std::vector<StageRecord> stages;
  std::vector<ScoreLine> scores;
  decoder::FeatureWeights weights;
  std::vector<double> tuning_history;

  // Deterministic "metric<TAB>condition<TAB>value" lines.
  std::string score_lines() const;
  std::string to_text() const;
  bool all_skipped() const;
};

using Logger = std::function<void(const std::string&)>;

ExperimentReport run_experiment(const ExperimentConfig& config, const Logger& log = {});
// Only the stages up to and including tuning.
ExperimentReport run_training(const ExperimentConfig& config, const Logger& log = {});

struct TuneOptions {
  int iterations = 3;
  size_t nbest = 20;
  double grid_min = -1.0;
  double grid_max = 1.0;
  double grid_step = 0.05;
  int max_sweeps = 5;
  bool lowercase = true;
  // Features left untouched, by index.
  std::vector<size_t> frozen;
};

struct TuneResult {
  decoder::FeatureWeights weights;
  // Dev BLEU of the best weights so far: initial, then after each outer
  // iteration.
  std::vector<double> bleu_history;
  bool degenerate = false;
};

// Coordinate ascent over a grid on accumulated n-best lists. The weights
// returned are the best by real dev decoding, so dev BLEU never drops.
TuneResult tune_weights(const decoder::Models& models, const decoder::DecoderConfig& decoder_config,
                        const std::vector<Tokens>& dev_source, const std::vector<Tokens>& dev_refs,
                        const decoder::FeatureWeights& initial, const TuneOptions& options, const Logger& log = {});

// Grid search over per-sentence candidate lists only (no decoding). Exposed
// for tests.
decoder::FeatureWeights rerank_ascent(const std::vector<std::vector<decoder::Translation>>& pool,
                                      const std::vector<Tokens>& refs, const decoder::FeatureWeights& start,
                                      const TuneOptions& options);

struct CascadeRow {
  std::string condition;  // Original | Normalized | ASR output
  double bleu = 0.0;
  bool present = true;
  std::string note;
};

struct CascadeReport {
  std::vector<CascadeRow> rows;
  std::string to_text() const;
  std::string score_lines() const;
};

// Translates the original source, its asr_normalize form and, when given, ASR
// hypotheses, scoring each against the same references.
CascadeReport cascade_eval(const decoder::Decoder& decoder, const std::vector<Sentence>& source,
                           const std::vector<Tokens>& refs, const std::optional<std::vector<Sentence>>& asr,
                           bool lowercase = true);

// Runs the cached experiment stages, then the cascade on its test set.
CascadeReport run_cascade(const ExperimentConfig& config, const std::string& asr_path, const Logger& log = {});

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::string& path);

}  // namespace smt::pipeline

#endif  // SMT_PIPELINE_HPP_
