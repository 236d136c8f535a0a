// corpus.cpp
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

#include "smt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>

namespace smt {

ParallelCorpus::ParallelCorpus(std::string source_lang, std::string target_lang)
    : source_lang_(std::move(source_lang)), target_lang_(std::move(target_lang)) {
  if (!source_lang_.empty() && source_lang_ == target_lang_) {
    throw Error("parallel corpus needs two distinct languages, got '" + source_lang_ + "' twice");
  }
}

void ParallelCorpus::add(SentencePair pair) {
  if (pair.source.lang.empty()) pair.source.lang = source_lang_;
  if (pair.target.lang.empty()) pair.target.lang = target_lang_;
  if (pair.source.lang != source_lang_ || pair.target.lang != target_lang_) {
    throw Error("sentence pair " + pair.source.lang + "-" + pair.target.lang +
                " does not belong to corpus " + source_lang_ + "-" + target_lang_);
  }
  pairs_.push_back(std::move(pair));
}

void ParallelCorpus::add(Tokens source, Tokens target) {
  add(SentencePair{Sentence{std::move(source), source_lang_},
                   Sentence{std::move(target), target_lang_}});
}

ParallelCorpus ParallelCorpus::swapped() const {
  ParallelCorpus out;
  out.source_lang_ = target_lang_;
  out.target_lang_ = source_lang_;
  out.pairs_.reserve(pairs_.size());
  for (const auto& p : pairs_) out.pairs_.push_back(SentencePair{p.target, p.source});
  return out;
}

std::vector<Sentence> ParallelCorpus::source_side() const {
  std::vector<Sentence> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.source);
  return out;
}

std::vector<Sentence> ParallelCorpus::target_side() const {
  std::vector<Sentence> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.target);
  return out;
}

void FrequencyLexicon::add(const std::string& word, uint64_t n) {
  if (n == 0) return;
  counts[word] += n;
  total_tokens += n;
}

void FrequencyLexicon::merge(const FrequencyLexicon& other) {
  for (const auto& [w, c] : other.counts) add(w, c);
}

Sentence tokenize(std::string_view raw, std::string lang) {
  Sentence out;
  out.lang = std::move(lang);
  const std::vector<char32_t> cps = text::decode_utf8(raw);
  std::vector<char32_t> word;
  auto flush = [&] {
    if (!word.empty()) {
      out.tokens.push_back(text::encode_utf8(word));
      word.clear();
    }
  };
  for (size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (text::is_space(cp)) {
      flush();
      continue;
    }
    if (text::is_punct(cp)) {
      const bool between_words = !word.empty() && i + 1 < cps.size() &&
                                 text::is_word_char(cps[i + 1]);
      const bool apostrophe = cp == U'\'' || cp == 0x2019;
      const bool separator = (cp == U'.' || cp == U',') && between_words &&
                             text::is_ascii_digit(word.back()) &&
                             text::is_ascii_digit(cps[i + 1]);
      if ((apostrophe && between_words) || separator) {
        word.push_back(cp);
        continue;
      }
      flush();
      out.tokens.push_back(text::encode_utf8({cp}));
      continue;
    }
    word.push_back(cp);
  }
  flush();
  return out;
}

ParallelCorpus clean_corpus(const ParallelCorpus& corpus, const CleanOptions& options) {
  ParallelCorpus out(corpus.source_lang(), corpus.target_lang());
  for (const auto& pair : corpus.pairs()) {
    const size_t ls = pair.source.size();
    const size_t lt = pair.target.size();
    if (ls == 0 || lt == 0) continue;
    if (ls > options.max_len || lt > options.max_len) continue;
    const double ratio = static_cast<double>(std::max(ls, lt)) / static_cast<double>(std::min(ls, lt));
    if (ratio > options.max_ratio) continue;
    out.add(pair);
  }
  return out;
}

namespace {

// Picks the most frequent surface form; ties go to the bytewise smallest.
CaseEntry best_casing(const std::map<std::string, uint64_t>& forms) {
  CaseEntry best;
  for (const auto& [surface, count] : forms) {
    if (count > best.count) best = CaseEntry{surface, count};
  }
  return best;
}

}  // namespace

CaseModel train_truecaser(const std::vector<Sentence>& corpus) {
  std::map<std::string, std::map<std::string, uint64_t>> inner;
  std::map<std::string, std::map<std::string, uint64_t>> initial;
  for (const auto& s : corpus) {
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      const std::string& tok = s.tokens[i];
      auto& table = (i == 0) ? initial : inner;
      ++table[text::to_lower(tok)][tok];
    }
  }
  CaseModel model;
  for (const auto& [key, forms] : inner) model.entries[key] = best_casing(forms);
  for (const auto& [key, forms] : initial) {
    if (!inner.contains(key)) model.entries[key] = best_casing(forms);
  }
  return model;
}

Sentence truecase(const Sentence& sentence, const CaseModel& model) {
  Sentence out{{}, sentence.lang};
  out.tokens.reserve(sentence.size());
  for (const auto& tok : sentence.tokens) {
    auto it = model.entries.find(text::to_lower(tok));
    out.tokens.push_back(it == model.entries.end() ? tok : it->second.surface);
  }
  return out;
}

Sentence lowercase(const Sentence& sentence) {
  Sentence out{{}, sentence.lang};
  out.tokens.reserve(sentence.size());
  for (const auto& tok : sentence.tokens) out.tokens.push_back(text::to_lower(tok));
  return out;
}

Sentence asr_normalize(const Sentence& sentence) {
  Sentence out{{}, sentence.lang};
  for (const auto& tok : sentence.tokens) {
    if (text::is_punct_token(tok)) continue;
    out.tokens.push_back(text::to_lower(tok));
  }
  return out;
}

FrequencyLexicon build_vocab(const std::vector<Sentence>& sentences) {
  FrequencyLexicon lex;
  for (const auto& s : sentences) {
    for (const auto& tok : s.tokens) lex.add(tok);
  }
  return lex;
}

Tokens split_compound_word(const std::string& word, const FrequencyLexicon& lexicon,
                           const CompoundOptions& options) {
  const std::vector<char32_t> cps = text::decode_utf8(word);
  const size_t n = cps.size();
  const size_t min_len = std::max<size_t>(options.min_part_len, 1);
  if (options.max_parts < 2 || n < 2 * min_len) return {word};

  const double own = static_cast<double>(lexicon.count(word));
  Tokens best;
  double best_mean = own;
  Tokens parts;
  double log_sum = 0.0;

  // Depth-first over cut points; each part must be a known word.
  std::function<void(size_t)> search = [&](size_t start) {
    for (size_t end = start + min_len; end <= n; ++end) {
      const bool last = end == n;
      if (!last && n - end < min_len) continue;
      std::string part = text::encode_utf8(std::vector<char32_t>(cps.begin() + start, cps.begin() + end));
      const uint64_t c = lexicon.count(part);
      if (c == 0) continue;
      parts.push_back(std::move(part));
      log_sum += std::log(static_cast<double>(c));
      if (last) {
        if (parts.size() >= 2) {
          const double mean = std::exp(log_sum / static_cast<double>(parts.size()));
          if (mean > best_mean) {
            best_mean = mean;
            best = parts;
          }
        }
      } else if (parts.size() < options.max_parts) {
        search(end);
      }
      log_sum -= std::log(static_cast<double>(c));
      parts.pop_back();
    }
  };
  search(0);
  if (best.empty()) return {word};
  return best;
}

Sentence split_compounds(const Sentence& sentence, const FrequencyLexicon& lexicon,
                         const CompoundOptions& options) {
  Sentence out{{}, sentence.lang};
  for (const auto& tok : sentence.tokens) {
    for (auto& part : split_compound_word(tok, lexicon, options)) out.tokens.push_back(std::move(part));
  }
  return out;
}

Sentence apply_transform(const Sentence& sentence, const TransformLexicon& lexicon) {
  Sentence out{{}, sentence.lang};
  out.tokens.reserve(sentence.size());
  for (const auto& tok : sentence.tokens) out.tokens.push_back(lexicon.lookup(tok));
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.emplace_back(text::chomp(line));
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw Error("write failed: " + path);
}

std::vector<Sentence> read_sentences(const std::string& path, const std::string& lang) {
  std::vector<Sentence> out;
  for (const auto& line : read_lines(path)) out.push_back(Sentence{text::split_ws(line), lang});
  return out;
}

void write_sentences(const std::string& path, const std::vector<Sentence>& sentences) {
  std::vector<std::string> lines;
  lines.reserve(sentences.size());
  for (const auto& s : sentences) lines.push_back(text::join(s.tokens));
  write_lines(path, lines);
}

ParallelCorpus read_parallel(const std::string& source_path, const std::string& target_path,
                             const std::string& source_lang, const std::string& target_lang) {
  auto src = read_lines(source_path);
  auto tgt = read_lines(target_path);
  if (src.size() != tgt.size()) {
    throw Error("parallel files differ in length: " + source_path + " has " +
                std::to_string(src.size()) + " lines, " + target_path + " has " +
                std::to_string(tgt.size()));
  }
  ParallelCorpus corpus(source_lang, target_lang);
  for (size_t i = 0; i < src.size(); ++i) corpus.add(text::split_ws(src[i]), text::split_ws(tgt[i]));
  return corpus;
}

void write_parallel(const ParallelCorpus& corpus, const std::string& source_path,
                    const std::string& target_path) {
  write_sentences(source_path, corpus.source_side());
  write_sentences(target_path, corpus.target_side());
}

std::vector<std::pair<std::string, std::string>> read_tsv(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(path + ":" + std::to_string(lineno) + ": expected key<TAB>value");
    }
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

TransformLexicon read_transform_lexicon(const std::string& path) {
  TransformLexicon lex;
  for (auto& [k, v] : read_tsv(path)) lex.entries[k] = v;
  return lex;
}

FrequencyLexicon read_frequency_lexicon(const std::string& path) {
  FrequencyLexicon lex;
  for (auto& [k, v] : read_tsv(path)) {
    try {
      lex.add(k, std::stoull(v));
    } catch (const std::exception&) {
      throw Error(path + ": bad count for '" + k + "'");
    }
  }
  return lex;
}

void write_frequency_lexicon(const std::string& path, const FrequencyLexicon& lexicon) {
  std::vector<std::string> lines;
  for (const auto& [w, c] : lexicon.counts) lines.push_back(w + "\t" + std::to_string(c));
  write_lines(path, lines);
}

CaseModel read_case_model(const std::string& path) {
  CaseModel model;
  for (auto& [k, v] : read_tsv(path)) {
    // value: surface<TAB>count, count optional
    const size_t tab = v.find('\t');
    CaseEntry e;
    e.surface = v.substr(0, tab);
    e.count = tab == std::string::npos ? 1 : std::stoull(v.substr(tab + 1));
    model.entries[k] = e;
  }
  return model;
}

void write_case_model(const std::string& path, const CaseModel& model) {
  std::vector<std::string> lines;
  for (const auto& [k, e] : model.entries) {
    lines.push_back(k + "\t" + e.surface + "\t" + std::to_string(e.count));
  }
  write_lines(path, lines);
}

}  // namespace smt
