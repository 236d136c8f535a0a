// metrics.hpp
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
// Corpus-level BLEU, NIST, TER and WER against a single reference.

#ifndef SMT_METRICS_HPP_
#define SMT_METRICS_HPP_

#include <string>
#include <vector>

#include "smt/corpus.hpp"

namespace smt::metrics {

struct BleuResult {
  double score = 0.0;               // 0..100
  std::vector<double> precisions;   // clipped, per order
  std::vector<size_t> matches;
  std::vector<size_t> totals;
  double brevity_penalty = 0.0;
  size_t hyp_len = 0;
  size_t ref_len = 0;
};

// No smoothing: a zero precision at any order gives 0.
BleuResult bleu(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, int max_n = 4);

struct NistResult {
  double score = 0.0;
  std::vector<double> per_order;  // information-weighted precision per order
  double brevity_factor = 0.0;
  size_t hyp_len = 0;
  size_t ref_len = 0;
};

inline constexpr int kNistOrder = 5;

// Information weights come from the reference corpus n-gram counts.
NistResult nist(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, int max_n = kNistOrder);

struct EditResult {
  double score = 0.0;  // percent of reference words
  size_t edits = 0;    // word edits (plus shifts for TER)
  size_t shifts = 0;
  size_t ref_len = 0;
};

size_t levenshtein(const Tokens& a, const Tokens& b);

inline constexpr size_t kMaxShiftBlock = 10;
inline constexpr long kMaxShiftDistance = 10;

// Greedy shifting: repeatedly apply the block move that lowers the word edit
// distance the most (at least by one) until none does. Blocks must equal some
// contiguous reference span. Returns edits + shifts for one segment.
size_t ter_edits(const Tokens& hyp, const Tokens& ref, size_t* shifts = nullptr);

EditResult ter(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs);
EditResult wer(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs);

struct MetricReport {
  BleuResult bleu;
  NistResult nist;
  EditResult ter;
  EditResult wer;

  // "metric<TAB>value" lines followed by details.
  std::string to_text() const;
};

MetricReport evaluate(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs);

std::vector<Tokens> lowercase_all(const std::vector<Tokens>& corpus);

}  // namespace smt::metrics

#endif  // SMT_METRICS_HPP_
