// align.hpp
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
// Lexical word alignment: IBM Model 1 and the diagonally reparameterized
// Model 2 trained by EM, Viterbi alignment, and grow-diag symmetrization.
//
// A model generates the words of one side ("generated") from the words of
// the other side ("conditioning") plus a NULL word. Trained on a corpus as
// given, the source sentence is generated from the target sentence, so the
// table holds t(source word | target word). Train on corpus.swapped() for the
// other direction.

#ifndef SMT_ALIGN_HPP_
#define SMT_ALIGN_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "smt/corpus.hpp"

namespace smt::align {

inline constexpr const char* kNullWord = "<null>";
inline constexpr size_t kNullLink = std::numeric_limits<size_t>::max();
// Score floor for NULL links so no word ever has zero likelihood.
inline constexpr double kNullFloor = 1e-12;

// t(generated | conditioning), with kNullWord as a conditioning word.
class TTable {
 public:
  using Row = std::unordered_map<std::string, double>;

  double prob(const std::string& generated, const std::string& conditioning) const;
  void set(const std::string& conditioning, const std::string& generated, double p);

  const std::unordered_map<std::string, Row>& rows() const { return rows_; }
  size_t size() const;

  // Text form: "conditioning<TAB>generated<TAB>prob", sorted.
  void save(const std::string& path) const;
  static TTable load(const std::string& path);

 private:
  std::unordered_map<std::string, Row> rows_;
};

struct Model2Params {
  TTable ttable;
  double tension = 4.0;  // lambda
  double p0 = 0.08;      // NULL probability
};

struct Model2Options {
  int iterations = 5;
  double tension = 4.0;
  double p0 = 0.08;
  // Re-fit the tension after every E-step by golden-section search on the
  // expected position log-likelihood.
  bool optimize_tension = true;
};

// Position prior: delta(i | j, m, n) for conditioning position i in 1..n
// (i == 0 is NULL, with probability p0), generated position j in 1..m.
double position_prob(size_t i, size_t j, size_t m, size_t n, double tension, double p0);

// EM from a uniform table. When log_likelihood is given it receives the
// corpus log-likelihood of the initial table and after every iteration
// (iterations + 1 values).
TTable train_model1(const ParallelCorpus& corpus, int iterations,
                    std::vector<double>* log_likelihood = nullptr);

Model2Params train_model2_diag(const ParallelCorpus& corpus, const Model2Options& options,
                               std::vector<double>* log_likelihood = nullptr);

// Expected link counts of one E-step from a uniform start, as
// (generated word, conditioning word) -> count. Exposed for tests comparing
// the two models' posteriors.
std::unordered_map<std::string, double> expected_counts_model1(const ParallelCorpus& corpus);
std::unordered_map<std::string, double> expected_counts_model2(const ParallelCorpus& corpus, double tension,
                                                               double p0);

enum class Direction {
  kForward,  // every source word links to one target word or NULL
  kReverse,  // every target word links to one source word or NULL
};

// (source position, target position), 0-based.
using Link = std::pair<size_t, size_t>;

struct DirectionalAlignment {
  Direction direction = Direction::kForward;
  size_t source_len = 0;
  size_t target_len = 0;
  // Indexed by generated position (source for kForward, target for kReverse);
  // value is the conditioning position or kNullLink.
  std::vector<size_t> links;

  std::vector<Link> points() const;
};

// Argmax link per generated word. Real positions beat NULL on ties and the
// smaller position wins among equal real candidates. For kReverse the model
// must have been trained on the swapped corpus.
DirectionalAlignment viterbi_align(const TTable& ttable, const SentencePair& pair, Direction direction);
DirectionalAlignment viterbi_align(const Model2Params& params, const SentencePair& pair, Direction direction);

class AlignmentMatrix {
 public:
  AlignmentMatrix() = default;
  AlignmentMatrix(size_t source_len, size_t target_len);

  size_t source_len() const { return source_len_; }
  size_t target_len() const { return target_len_; }
  bool contains(size_t i, size_t j) const { return bits_[i * target_len_ + j]; }
  void set(size_t i, size_t j, bool value = true);
  size_t count() const;
  // Sorted by source, then target.
  std::vector<Link> points() const;
  bool operator==(const AlignmentMatrix&) const = default;

  // Pharaoh format: "i-j" pairs separated by single spaces.
  std::string to_pharaoh() const;
  static AlignmentMatrix from_pharaoh(std::string_view line, size_t source_len, size_t target_len);

 private:
  size_t source_len_ = 0;
  size_t target_len_ = 0;
  std::vector<bool> bits_;
};

AlignmentMatrix to_matrix(const DirectionalAlignment& a);

enum class Heuristic { kIntersection, kUnion, kGrowDiag, kGrowDiagFinal, kGrowDiagFinalAnd };

Heuristic parse_heuristic(const std::string& name);
const char* heuristic_name(Heuristic h);

// Growing visits aligned points in target-major order (target position
// outer, source inner) and tries the neighbours left, right, up, down, then
// the four diagonals, until no point is added. The final step scans the
// forward links, then the reverse links, in the same order.
AlignmentMatrix symmetrize(const DirectionalAlignment& fwd, const DirectionalAlignment& rev, Heuristic heuristic);
AlignmentMatrix symmetrize(const AlignmentMatrix& fwd, const AlignmentMatrix& rev, Heuristic heuristic);

}  // namespace smt::align

#endif  // SMT_ALIGN_HPP_
