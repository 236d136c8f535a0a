// corpus.hpp
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
// Monolingual and parallel text: loading, tokenization, cleaning, casing,
// lexicon-driven transforms and compound splitting.

#ifndef SMT_CORPUS_HPP_
#define SMT_CORPUS_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "smt/text.hpp"

namespace smt {

using Tokens = std::vector<std::string>;

struct Sentence {
  Tokens tokens;
  std::string lang;

  size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const Sentence&) const = default;
};

struct SentencePair {
  Sentence source;
  Sentence target;
};

class ParallelCorpus {
 public:
  ParallelCorpus() = default;
  ParallelCorpus(std::string source_lang, std::string target_lang);

  // Throws if either side's language disagrees with the corpus pair.
  void add(SentencePair pair);
  void add(Tokens source, Tokens target);

  const std::vector<SentencePair>& pairs() const { return pairs_; }
  size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const SentencePair& operator[](size_t i) const { return pairs_[i]; }

  const std::string& source_lang() const { return source_lang_; }
  const std::string& target_lang() const { return target_lang_; }

  // Same pairs with the two sides exchanged.
  ParallelCorpus swapped() const;

  std::vector<Sentence> source_side() const;
  std::vector<Sentence> target_side() const;

 private:
  std::string source_lang_;
  std::string target_lang_;
  std::vector<SentencePair> pairs_;
};

struct FrequencyLexicon {
  std::map<std::string, uint64_t> counts;
  uint64_t total_tokens = 0;

  uint64_t count(const std::string& word) const {
    auto it = counts.find(word);
    return it == counts.end() ? 0 : it->second;
  }
  void add(const std::string& word, uint64_t n = 1);
  void merge(const FrequencyLexicon& other);
};

struct CaseEntry {
  std::string surface;
  uint64_t count = 0;
};

// Lowercased word -> preferred surface casing.
struct CaseModel {
  std::map<std::string, CaseEntry> entries;
};

// Surface form -> replacement (stem, lemma, infinitive...). Absent keys map to
// themselves.
struct TransformLexicon {
  std::map<std::string, std::string> entries;

  const std::string& lookup(const std::string& word) const {
    auto it = entries.find(word);
    return it == entries.end() ? word : it->second;
  }
};

// Tokenizer rules:
//  * whitespace (text::is_space) separates tokens;
//  * every punctuation code point (text::is_punct) is a token of its own;
//  * runs of other characters (letters with diacritics, digits, marks) form
//    words;
//  * an apostrophe (' or U+2019) between two word characters stays inside
//    the word ("don't"), as does '.' or ',' between two ASCII digits ("3.14").
Sentence tokenize(std::string_view raw, std::string lang = {});

struct CleanOptions {
  size_t max_len = 80;
  double max_ratio = 9.0;
};

// Keeps pairs with both sides non-empty, both lengths <= max_len and
// max(len)/min(len) <= max_ratio. Order is preserved.
ParallelCorpus clean_corpus(const ParallelCorpus& corpus, const CleanOptions& options);

// Learns the most frequent casing of each word from non-initial positions;
// sentence-initial tokens only count for words never seen elsewhere. Ties go
// to the lexicographically (bytewise) smallest surface form.
CaseModel train_truecaser(const std::vector<Sentence>& corpus);

Sentence truecase(const Sentence& sentence, const CaseModel& model);
Sentence lowercase(const Sentence& sentence);

// Drops punctuation-only tokens and lowercases the rest, mimicking the word
// stream an ASR system produces.
Sentence asr_normalize(const Sentence& sentence);

FrequencyLexicon build_vocab(const std::vector<Sentence>& sentences);

struct CompoundOptions {
  size_t min_part_len = 3;  // code points
  size_t max_parts = 2;
};

// Replaces a word by its known parts when the geometric mean of the part
// frequencies strictly exceeds the word's own frequency. The best-scoring
// split wins; earlier-enumerated splits win ties (fewer parts, shorter first
// part).
Sentence split_compounds(const Sentence& sentence, const FrequencyLexicon& lexicon,
                         const CompoundOptions& options = {});
// Split of a single word; returns {word} when no split qualifies.
Tokens split_compound_word(const std::string& word, const FrequencyLexicon& lexicon,
                           const CompoundOptions& options = {});

Sentence apply_transform(const Sentence& sentence, const TransformLexicon& lexicon);

// File helpers. Every reader throws smt::Error on I/O failure.
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);
// Each line is already tokenized text (whitespace-separated tokens).
std::vector<Sentence> read_sentences(const std::string& path, const std::string& lang = {});
void write_sentences(const std::string& path, const std::vector<Sentence>& sentences);
// Two files with an equal number of lines; throws otherwise.
ParallelCorpus read_parallel(const std::string& source_path, const std::string& target_path,
                             const std::string& source_lang, const std::string& target_lang);
void write_parallel(const ParallelCorpus& corpus, const std::string& source_path,
                    const std::string& target_path);

// "key<TAB>value" files.
std::vector<std::pair<std::string, std::string>> read_tsv(const std::string& path);
TransformLexicon read_transform_lexicon(const std::string& path);
FrequencyLexicon read_frequency_lexicon(const std::string& path);
void write_frequency_lexicon(const std::string& path, const FrequencyLexicon& lexicon);
CaseModel read_case_model(const std::string& path);
void write_case_model(const std::string& path, const CaseModel& model);

}  // namespace smt

#endif  // SMT_CORPUS_HPP_
