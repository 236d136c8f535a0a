// tmodel.cpp
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

#include "smt/tmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace smt::tmodel {

namespace {

// Per-word extent of the links of one sentence pair.
struct Extents {
  std::vector<long> src_min, src_max;  // target range linked to each source word
  std::vector<long> tgt_min, tgt_max;  // source range linked to each target word

  explicit Extents(const AlignmentMatrix& a)
      : src_min(a.source_len(), -1), src_max(a.source_len(), -1),
        tgt_min(a.target_len(), -1), tgt_max(a.target_len(), -1) {
    for (const auto& [i, j] : a.points()) {
      const long li = static_cast<long>(i);
      const long lj = static_cast<long>(j);
      if (src_min[i] < 0 || lj < src_min[i]) src_min[i] = lj;
      src_max[i] = std::max(src_max[i], lj);
      if (tgt_min[j] < 0 || li < tgt_min[j]) tgt_min[j] = li;
      tgt_max[j] = std::max(tgt_max[j], li);
    }
  }

  bool src_aligned(long i) const { return src_min[i] >= 0; }
  bool tgt_aligned(long j) const { return tgt_min[j] >= 0; }
};

std::string join_tokens(const Tokens& t) { return text::join(t, " "); }

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t p = line.find(" ||| ", start);
    if (p == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, p - start));
    start = p + 5;
  }
}

std::vector<double> parse_numbers(const std::string& s, const std::string& where) {
  std::vector<double> out;
  for (const auto& tok : text::split_ws(s)) {
    double v = 0;
    auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc() || r.ptr != tok.data() + tok.size()) throw Error(where + ": bad number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

bool is_consistent_box(const AlignmentMatrix& a, size_t sb, size_t se, size_t tb, size_t te) {
  bool any = false;
  for (const auto& [i, j] : a.points()) {
    const bool in_src = i >= sb && i < se;
    const bool in_tgt = j >= tb && j < te;
    if (in_src != in_tgt) return false;
    any = any || in_src;
  }
  return any;
}

std::vector<PhrasePair> extract_phrases(const SentencePair& pair, const AlignmentMatrix& alignment,
                                        size_t max_phrase_len) {
  const size_t n = pair.source.tokens.size();
  const size_t m = pair.target.tokens.size();
  if (alignment.source_len() != n || alignment.target_len() != m) {
    throw Error("alignment is " + std::to_string(alignment.source_len()) + "x" +
                std::to_string(alignment.target_len()) + " but the sentence pair is " + std::to_string(n) + "x" +
                std::to_string(m));
  }
  if (max_phrase_len < 1) throw Error("max_phrase_len must be at least 1");
  const Extents ext(alignment);
  const long L = static_cast<long>(max_phrase_len);
  const long ln = static_cast<long>(n);
  const long lm = static_cast<long>(m);

  std::vector<PhrasePair> out;
  for (long sb = 0; sb < ln; ++sb) {
    long tmin = lm;
    long tmax = -1;
    for (long se = sb; se < ln && se - sb < L; ++se) {
      if (ext.src_aligned(se)) {
        tmin = std::min(tmin, ext.src_min[se]);
        tmax = std::max(tmax, ext.src_max[se]);
      }
      if (tmax < 0 || tmax - tmin + 1 > L) continue;
      bool ok = true;
      for (long j = tmin; j <= tmax && ok; ++j) {
        if (ext.tgt_aligned(j) && (ext.tgt_min[j] < sb || ext.tgt_max[j] > se)) ok = false;
      }
      if (!ok) continue;
      for (long tb = tmin; tb >= 0 && (tb == tmin || !ext.tgt_aligned(tb)); --tb) {
        for (long te = tmax; te < lm && (te == tmax || !ext.tgt_aligned(te)) && te - tb < L; ++te) {
          PhrasePair p;
          p.src_begin = sb;
          p.src_end = se + 1;
          p.tgt_begin = tb;
          p.tgt_end = te + 1;
          p.source.assign(pair.source.tokens.begin() + sb, pair.source.tokens.begin() + se + 1);
          p.target.assign(pair.target.tokens.begin() + tb, pair.target.tokens.begin() + te + 1);
          for (const auto& [i, j] : alignment.points()) {
            if (static_cast<long>(i) >= sb && static_cast<long>(i) <= se && static_cast<long>(j) >= tb &&
                static_cast<long>(j) <= te) {
              p.links.emplace_back(i - sb, j - tb);
            }
          }
          out.push_back(std::move(p));
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const PhrasePair& a, const PhrasePair& b) { return a.box() < b.box(); });
  return out;
}

// Phrase table.

void PhraseTable::add(PhraseTableEntry entry) {
  max_source_len_ = std::max(max_source_len_, entry.source.size());
  entries_[join_tokens(entry.source)].push_back(std::move(entry));
}

const std::vector<PhraseTableEntry>* PhraseTable::lookup(const Tokens& source) const {
  auto it = entries_.find(join_tokens(source));
  return it == entries_.end() ? nullptr : &it->second;
}

size_t PhraseTable::size() const {
  size_t n = 0;
  for (const auto& [k, v] : entries_) n += v.size();
  return n;
}

std::string PhraseTable::format_line(const PhraseTableEntry& e) const {
  const auto& s = e.scores;
  return join_tokens(e.source) + " ||| " + join_tokens(e.target) + " ||| " + format6(s.phi_fe) + ' ' +
         format6(s.lex_fe) + ' ' + format6(s.phi_ef) + ' ' + format6(s.lex_ef) + ' ' + format6(s.penalty);
}

void PhraseTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const auto& [k, v] : entries_) {
    for (const auto& e : v) out << format_line(e) << '\n';
  }
}

PhraseTable PhraseTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  PhraseTable table;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() < 3) throw Error(where + ": expected 'src ||| tgt ||| scores'");
    const auto v = parse_numbers(fields[2], where);
    if (v.size() != 5) throw Error(where + ": expected 5 scores");
    PhraseTableEntry e;
    e.source = text::split_ws(fields[0]);
    e.target = text::split_ws(fields[1]);
    e.scores = {v[0], v[1], v[2], v[3], v[4]};
    table.add(std::move(e));
  }
  return table;
}

double lexical_weight(const Tokens& generated, const Tokens& conditioning, const std::vector<Link>& links,
                      const align::TTable& ttable) {
  double w = 1.0;
  for (size_t g = 0; g < generated.size(); ++g) {
    double sum = 0.0;
    size_t k = 0;
    for (const auto& [a, b] : links) {
      if (a != g) continue;
      sum += ttable.prob(generated[g], conditioning[b]);
      ++k;
    }
    w *= k ? sum / static_cast<double>(k) : ttable.prob(generated[g], align::kNullWord);
  }
  return w;
}

PhraseTable score_phrase_table(const std::vector<PhrasePair>& pairs, const align::TTable& ttable_fwd,
                               const align::TTable& ttable_rev) {
  struct Acc {
    const PhrasePair* first = nullptr;
    size_t count = 0;
    double lex_fe = 0.0;
    double lex_ef = 0.0;
  };
  std::map<std::pair<std::string, std::string>, Acc> joint;
  std::map<std::string, size_t> src_count;
  std::map<std::string, size_t> tgt_count;
  for (const auto& p : pairs) {
    const std::string s = join_tokens(p.source);
    const std::string t = join_tokens(p.target);
    auto& acc = joint[{s, t}];
    if (!acc.first) acc.first = &p;
    ++acc.count;
    ++src_count[s];
    ++tgt_count[t];
    std::vector<Link> flipped;
    flipped.reserve(p.links.size());
    for (const auto& [i, j] : p.links) flipped.emplace_back(j, i);
    acc.lex_fe = std::max(acc.lex_fe, lexical_weight(p.source, p.target, p.links, ttable_fwd));
    acc.lex_ef = std::max(acc.lex_ef, lexical_weight(p.target, p.source, flipped, ttable_rev));
  }
  PhraseTable table;
  for (const auto& [key, acc] : joint) {
    PhraseTableEntry e;
    e.source = acc.first->source;
    e.target = acc.first->target;
    const double c = static_cast<double>(acc.count);
    e.scores.phi_fe = c / static_cast<double>(tgt_count[key.second]);
    e.scores.phi_ef = c / static_cast<double>(src_count[key.first]);
    e.scores.lex_fe = acc.lex_fe;
    e.scores.lex_ef = acc.lex_ef;
    table.add(std::move(e));
  }
  return table;
}

// Reordering.

Scheme parse_scheme(const std::string& name) {
  if (name == "msd" || name == "msd-bidirectional-fe") return Scheme::kMsd;
  if (name == "hier-mslr" || name == "hier-mslr-bidirectional-fe") return Scheme::kHierMslr;
  throw Error("unknown reordering scheme '" + name + "'");
}

const char* scheme_name(Scheme s) { return s == Scheme::kMsd ? "msd" : "hier-mslr"; }

size_t orientation_count(Scheme s) { return s == Scheme::kMsd ? 3 : 4; }

size_t orientation_index(Orientation o, Scheme scheme) {
  switch (o) {
    case Orientation::kMonotone: return 0;
    case Orientation::kSwap: return 1;
    case Orientation::kDiscontinuous:
      if (scheme != Scheme::kMsd) throw Error("plain discontinuous is an msd orientation");
      return 2;
    case Orientation::kDiscontinuousLeft:
    case Orientation::kDiscontinuousRight:
      if (scheme != Scheme::kHierMslr) throw Error("left/right discontinuous is a hier-mslr orientation");
      return o == Orientation::kDiscontinuousLeft ? 2 : 3;
  }
  return 0;
}

const char* orientation_name(Orientation o) {
  switch (o) {
    case Orientation::kMonotone: return "monotone";
    case Orientation::kSwap: return "swap";
    case Orientation::kDiscontinuous: return "discontinuous";
    case Orientation::kDiscontinuousLeft: return "discontinuous-left";
    case Orientation::kDiscontinuousRight: return "discontinuous-right";
  }
  return "?";
}

namespace {

// Is there a consistent block with at least one link whose corner is
// (ci, cj) and which extends from it in direction (di, dj)?
bool block_at_corner(const AlignmentMatrix& a, const Extents& ext, long ci, long cj, int di, int dj) {
  const long n = static_cast<long>(a.source_len());
  const long m = static_cast<long>(a.target_len());
  if (ci < 0 || cj < 0 || ci >= n || cj >= m) return false;
  // Grow the source side one word at a time; the target range is forced by
  // the links of the source words and must stay on the far side of cj.
  long tlo = m;
  long thi = -1;
  for (long k = ci; k >= 0 && k < n; k += di) {
    if (ext.src_aligned(k)) {
      tlo = std::min(tlo, ext.src_min[k]);
      thi = std::max(thi, ext.src_max[k]);
    }
    if (thi < 0) continue;
    // The block's target side runs from cj to the far end of the links.
    if (dj < 0 ? thi > cj : tlo < cj) return false;
    const long jb = dj < 0 ? tlo : cj;
    const long je = dj < 0 ? cj : thi;
    const long ib = std::min(ci, k);
    const long ie = std::max(ci, k);
    bool ok = true;
    for (long j = jb; j <= je && ok; ++j) {
      if (ext.tgt_aligned(j) && (ext.tgt_min[j] < ib || ext.tgt_max[j] > ie)) ok = false;
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

Orientation classify_orientation(const PhrasePair& occ, const AlignmentMatrix& a, OrientationSide side,
                                 Scheme scheme) {
  const long n = static_cast<long>(a.source_len());
  const long m = static_cast<long>(a.target_len());
  const long i1 = static_cast<long>(occ.src_begin);
  const long i2 = static_cast<long>(occ.src_end) - 1;
  const long j1 = static_cast<long>(occ.tgt_begin);
  const long j2 = static_cast<long>(occ.tgt_end) - 1;
  auto linked = [&](long i, long j) {
    if (i == -1 && j == -1) return true;
    if (i == n && j == m) return true;
    if (i < 0 || j < 0 || i >= n || j >= m) return false;
    return a.contains(i, j);
  };
  const bool prev = side == OrientationSide::kPrevious;
  if (scheme == Scheme::kMsd) {
    if (prev) {
      if (linked(i1 - 1, j1 - 1)) return Orientation::kMonotone;
      if (linked(i2 + 1, j1 - 1)) return Orientation::kSwap;
    } else {
      if (linked(i2 + 1, j2 + 1)) return Orientation::kMonotone;
      if (linked(i1 - 1, j2 + 1)) return Orientation::kSwap;
    }
    return Orientation::kDiscontinuous;
  }

  const Extents ext(a);
  if (prev) {
    if ((i1 == 0 && j1 == 0) || block_at_corner(a, ext, i1 - 1, j1 - 1, -1, -1)) return Orientation::kMonotone;
    if (block_at_corner(a, ext, i2 + 1, j1 - 1, +1, -1)) return Orientation::kSwap;
    // Side of the nearest aligned target word before the phrase.
    for (long j = j1 - 1; j >= 0; --j) {
      if (ext.tgt_aligned(j)) {
        return ext.tgt_min[j] < i1 ? Orientation::kDiscontinuousLeft : Orientation::kDiscontinuousRight;
      }
    }
    return Orientation::kDiscontinuousLeft;
  }
  if ((i2 == n - 1 && j2 == m - 1) || block_at_corner(a, ext, i2 + 1, j2 + 1, +1, +1)) {
    return Orientation::kMonotone;
  }
  if (block_at_corner(a, ext, i1 - 1, j2 + 1, -1, +1)) return Orientation::kSwap;
  for (long j = j2 + 1; j < m; ++j) {
    if (ext.tgt_aligned(j)) {
      return ext.tgt_max[j] > i2 ? Orientation::kDiscontinuousRight : Orientation::kDiscontinuousLeft;
    }
  }
  return Orientation::kDiscontinuousRight;
}

std::string ReorderingTable::key(const Tokens& source, const Tokens& target) {
  return join_tokens(source) + " ||| " + join_tokens(target);
}

const ReorderingEntry* ReorderingTable::lookup(const Tokens& source, const Tokens& target) const {
  auto it = entries_.find(key(source, target));
  return it == entries_.end() ? nullptr : &it->second;
}

void ReorderingTable::set(const Tokens& source, const Tokens& target, ReorderingEntry entry) {
  const size_t k = orientation_count(scheme_);
  if (entry.previous.size() != k || entry.next.size() != k) {
    throw Error("reordering entry needs " + std::to_string(k) + " probabilities per side");
  }
  entries_[key(source, target)] = std::move(entry);
}

void ReorderingTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# scheme " << scheme_name(scheme_) << '\n';
  for (const auto& [k, e] : entries_) {
    out << k << " |||";
    for (double p : e.previous) out << ' ' << format6(p);
    for (double p : e.next) out << ' ' << format6(p);
    out << '\n';
  }
}

ReorderingTable ReorderingTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  ReorderingTable table;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# scheme ", 0) == 0) {
      table.scheme_ = parse_scheme(line.substr(9));
      continue;
    }
    const std::string where = path + ":" + std::to_string(lineno);
    const auto fields = split_fields(line);
    if (fields.size() < 3) throw Error(where + ": expected 'src ||| tgt ||| probs'");
    const auto v = parse_numbers(fields[2], where);
    const size_t k = orientation_count(table.scheme_);
    if (v.size() != 2 * k) throw Error(where + ": expected " + std::to_string(2 * k) + " probabilities");
    ReorderingEntry e;
    e.previous.assign(v.begin(), v.begin() + k);
    e.next.assign(v.begin() + k, v.end());
    table.set(text::split_ws(fields[0]), text::split_ws(fields[1]), std::move(e));
  }
  return table;
}

ReorderingTable train_reordering(const ParallelCorpus& corpus, const std::vector<AlignmentMatrix>& alignments,
                                 Scheme scheme, size_t max_phrase_len) {
  if (alignments.size() != corpus.size()) throw Error("need one alignment per sentence pair");
  const size_t k = orientation_count(scheme);
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> counts;
  std::map<std::string, std::pair<Tokens, Tokens>> phrases;
  for (size_t s = 0; s < corpus.size(); ++s) {
    const auto& pair = corpus.pairs()[s];
    for (const auto& p : extract_phrases(pair, alignments[s], max_phrase_len)) {
      const std::string key = ReorderingTable::key(p.source, p.target);
      auto [it, fresh] = counts.try_emplace(key, std::vector<double>(k, 0.0), std::vector<double>(k, 0.0));
      if (fresh) phrases[key] = {p.source, p.target};
      it->second.first[orientation_index(
          classify_orientation(p, alignments[s], OrientationSide::kPrevious, scheme), scheme)] += 1;
      it->second.second[orientation_index(
          classify_orientation(p, alignments[s], OrientationSide::kNext, scheme), scheme)] += 1;
    }
  }
  ReorderingTable table(scheme);
  auto smooth = [&](std::vector<double> c) {
    double total = 0;
    for (double x : c) total += x;
    for (double& x : c) x = (x + kReorderingSmoothing) / (total + kReorderingSmoothing * static_cast<double>(k));
    return c;
  };
  for (auto& [key, c] : counts) {
    const auto& [src, tgt] = phrases[key];
    table.set(src, tgt, ReorderingEntry{smooth(c.first), smooth(c.second)});
  }
  return table;
}

}  // namespace smt::tmodel
