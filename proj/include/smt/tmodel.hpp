// tmodel.hpp
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
// Phrase extraction, phrase table scoring and lexicalized reordering.

#ifndef SMT_TMODEL_HPP_
#define SMT_TMODEL_HPP_

#include <array>
#include <map>
#include <string>
#include <vector>

#include "smt/align.hpp"
#include "smt/corpus.hpp"

namespace smt::tmodel {

using align::AlignmentMatrix;
using align::Link;

inline constexpr size_t kDefaultMaxPhraseLen = 7;

// Box [src_begin, src_end) x [tgt_begin, tgt_end) of a sentence pair.
struct PhrasePair {
  Tokens source;
  Tokens target;
  size_t src_begin = 0;
  size_t src_end = 0;
  size_t tgt_begin = 0;
  size_t tgt_end = 0;
  // Links inside the box, relative to its corner.
  std::vector<Link> links;

  auto box() const { return std::array<size_t, 4>{src_begin, src_end, tgt_begin, tgt_end}; }
};

// Every box with at least one link, no link crossing its border and both
// sides at most max_phrase_len long; sorted by box. Unaligned words at the
// border produce every consistent extension.
std::vector<PhrasePair> extract_phrases(const SentencePair& pair, const AlignmentMatrix& alignment,
                                        size_t max_phrase_len = kDefaultMaxPhraseLen);

// The consistency predicate itself, for a half-open box.
bool is_consistent_box(const AlignmentMatrix& alignment, size_t src_begin, size_t src_end, size_t tgt_begin,
                       size_t tgt_end);

struct PhraseScores {
  double phi_fe = 1.0;  // phi(source | target)
  double lex_fe = 1.0;  // lex(source | target)
  double phi_ef = 1.0;  // phi(target | source)
  double lex_ef = 1.0;  // lex(target | source)
  double penalty = 2.718281828459045;
};

struct PhraseTableEntry {
  Tokens source;
  Tokens target;
  PhraseScores scores;
};

class PhraseTable {
 public:
  void add(PhraseTableEntry entry);
  // Translation options of a source phrase, or nullptr.
  const std::vector<PhraseTableEntry>* lookup(const Tokens& source) const;
  size_t max_source_len() const { return max_source_len_; }
  size_t size() const;
  const std::map<std::string, std::vector<PhraseTableEntry>>& entries() const { return entries_; }

  // "src ||| tgt ||| phi(f|e) lex(f|e) phi(e|f) lex(e|f) penalty", 6
  // significant digits.
  void save(const std::string& path) const;
  static PhraseTable load(const std::string& path);
  std::string format_line(const PhraseTableEntry& e) const;

 private:
  std::map<std::string, std::vector<PhraseTableEntry>> entries_;
  size_t max_source_len_ = 0;
};

// Lexical weight of `generated` given `conditioning` under the links, which
// are (generated index, conditioning index) pairs. Unlinked generated words
// use t(word | NULL).
double lexical_weight(const Tokens& generated, const Tokens& conditioning, const std::vector<Link>& links,
                      const align::TTable& ttable);

// ttable_fwd holds t(source | target) (trained on the corpus as given),
// ttable_rev holds t(target | source). Lexical weights of a pair seen with
// several internal alignments take the maximum.
PhraseTable score_phrase_table(const std::vector<PhrasePair>& pairs, const align::TTable& ttable_fwd,
                               const align::TTable& ttable_rev);

enum class Scheme { kMsd, kHierMslr };
Scheme parse_scheme(const std::string& name);
const char* scheme_name(Scheme s);
size_t orientation_count(Scheme s);

// kDiscontinuous is the msd class; hier-mslr uses the left/right split.
enum class Orientation { kMonotone, kSwap, kDiscontinuous, kDiscontinuousLeft, kDiscontinuousRight };

// kPrevious: relative to the phrase before it in target order; kNext:
// relative to the phrase after it.
enum class OrientationSide { kPrevious, kNext };

// Slot of an orientation in a distribution of orientation_count(scheme).
size_t orientation_index(Orientation o, Scheme scheme);
const char* orientation_name(Orientation o);

// msd looks at single alignment points at the phrase corners; hier-mslr
// looks for any consistent block adjacent to the corner and splits
// discontinuous by the side the neighbouring material lies on. Virtual links
// at (-1,-1) and (n,m) anchor the sentence boundaries.
Orientation classify_orientation(const PhrasePair& occurrence, const AlignmentMatrix& alignment,
                                 OrientationSide side, Scheme scheme);

struct ReorderingEntry {
  std::vector<double> previous;
  std::vector<double> next;
};

class ReorderingTable {
 public:
  ReorderingTable() = default;
  explicit ReorderingTable(Scheme scheme) : scheme_(scheme) {}

  Scheme scheme() const { return scheme_; }
  const ReorderingEntry* lookup(const Tokens& source, const Tokens& target) const;
  void set(const Tokens& source, const Tokens& target, ReorderingEntry entry);
  size_t size() const { return entries_.size(); }
  const std::map<std::string, ReorderingEntry>& entries() const { return entries_; }

  // "src ||| tgt ||| previous... next..." with the scheme as a header comment.
  void save(const std::string& path) const;
  static ReorderingTable load(const std::string& path);

  static std::string key(const Tokens& source, const Tokens& target);

 private:
  Scheme scheme_ = Scheme::kMsd;
  std::map<std::string, ReorderingEntry> entries_;
};

inline constexpr double kReorderingSmoothing = 0.5;

ReorderingTable train_reordering(const ParallelCorpus& corpus, const std::vector<AlignmentMatrix>& alignments,
                                 Scheme scheme, size_t max_phrase_len = kDefaultMaxPhraseLen);

}  // namespace smt::tmodel

#endif  // SMT_TMODEL_HPP_
