// symmetrize.cpp
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

#include <charconv>

#include "smt/align.hpp"

namespace smt::align {

AlignmentMatrix::AlignmentMatrix(size_t source_len, size_t target_len)
    : source_len_(source_len), target_len_(target_len), bits_(source_len * target_len, false) {}

void AlignmentMatrix::set(size_t i, size_t j, bool value) {
  if (i >= source_len_ || j >= target_len_) {
    throw Error("alignment point " + std::to_string(i) + "-" + std::to_string(j) + " outside " +
                std::to_string(source_len_) + "x" + std::to_string(target_len_));
  }
  bits_[i * target_len_ + j] = value;
}

size_t AlignmentMatrix::count() const {
  size_t n = 0;
  for (bool b : bits_) n += b;
  return n;
}

std::vector<Link> AlignmentMatrix::points() const {
  std::vector<Link> out;
  for (size_t i = 0; i < source_len_; ++i) {
    for (size_t j = 0; j < target_len_; ++j) {
      if (contains(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

std::string AlignmentMatrix::to_pharaoh() const {
  std::string out;
  for (const auto& [i, j] : points()) {
    if (!out.empty()) out += ' ';
    out += std::to_string(i);
    out += '-';
    out += std::to_string(j);
  }
  return out;
}

AlignmentMatrix AlignmentMatrix::from_pharaoh(std::string_view line, size_t source_len, size_t target_len) {
  AlignmentMatrix m(source_len, target_len);
  for (const auto& tok : text::split_ws(line)) {
    const size_t dash = tok.find('-');
    size_t i = 0;
    size_t j = 0;
    bool ok = dash != std::string::npos;
    if (ok) {
      auto r1 = std::from_chars(tok.data(), tok.data() + dash, i);
      auto r2 = std::from_chars(tok.data() + dash + 1, tok.data() + tok.size(), j);
      ok = r1.ec == std::errc() && r1.ptr == tok.data() + dash && r2.ec == std::errc() &&
           r2.ptr == tok.data() + tok.size();
    }
    if (!ok) throw Error("bad alignment point '" + tok + "'");
    m.set(i, j);
  }
  return m;
}

AlignmentMatrix to_matrix(const DirectionalAlignment& a) {
  AlignmentMatrix m(a.source_len, a.target_len);
  for (const auto& [i, j] : a.points()) m.set(i, j);
  return m;
}

Heuristic parse_heuristic(const std::string& name) {
  if (name == "intersection" || name == "intersect") return Heuristic::kIntersection;
  if (name == "union") return Heuristic::kUnion;
  if (name == "grow-diag" || name == "gd") return Heuristic::kGrowDiag;
  if (name == "grow-diag-final" || name == "gdf") return Heuristic::kGrowDiagFinal;
  if (name == "grow-diag-final-and" || name == "gdfa") return Heuristic::kGrowDiagFinalAnd;
  throw Error("unknown symmetrization heuristic '" + name + "'");
}

const char* heuristic_name(Heuristic h) {
  switch (h) {
    case Heuristic::kIntersection: return "intersection";
    case Heuristic::kUnion: return "union";
    case Heuristic::kGrowDiag: return "grow-diag";
    case Heuristic::kGrowDiagFinal: return "grow-diag-final";
    case Heuristic::kGrowDiagFinalAnd: return "grow-diag-final-and";
  }
  return "?";
}

namespace {

class Grower {
 public:
  Grower(const AlignmentMatrix& seed)
      : a_(seed), src_(seed.source_len(), 0), tgt_(seed.target_len(), 0) {
    for (const auto& [i, j] : seed.points()) {
      ++src_[i];
      ++tgt_[j];
    }
  }

  void add(size_t i, size_t j) {
    a_.set(i, j);
    ++src_[i];
    ++tgt_[j];
  }

  void grow_diag(const AlignmentMatrix& uni) {
    static constexpr int kNeighbours[8][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1},
                                              {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
    const auto n = static_cast<long>(a_.source_len());
    const auto m = static_cast<long>(a_.target_len());
    bool added = true;
    while (added) {
      added = false;
      for (long j = 0; j < m; ++j) {
        for (long i = 0; i < n; ++i) {
          if (!a_.contains(i, j)) continue;
          for (const auto& d : kNeighbours) {
            const long ni = i + d[0];
            const long nj = j + d[1];
            if (ni < 0 || nj < 0 || ni >= n || nj >= m) continue;
            if (a_.contains(ni, nj) || !uni.contains(ni, nj)) continue;
            if (src_[ni] == 0 || tgt_[nj] == 0) {
              add(ni, nj);
              added = true;
            }
          }
        }
      }
    }
  }

  void final_step(const AlignmentMatrix& directional, bool both_unaligned) {
    for (size_t j = 0; j < a_.target_len(); ++j) {
      for (size_t i = 0; i < a_.source_len(); ++i) {
        if (!directional.contains(i, j) || a_.contains(i, j)) continue;
        const bool ok = both_unaligned ? (src_[i] == 0 && tgt_[j] == 0) : (src_[i] == 0 || tgt_[j] == 0);
        if (ok) add(i, j);
      }
    }
  }

  const AlignmentMatrix& result() const { return a_; }

 private:
  AlignmentMatrix a_;
  std::vector<size_t> src_;
  std::vector<size_t> tgt_;
};

}  // namespace

AlignmentMatrix symmetrize(const AlignmentMatrix& fwd, const AlignmentMatrix& rev, Heuristic heuristic) {
  if (fwd.source_len() != rev.source_len() || fwd.target_len() != rev.target_len()) {
    throw Error("directional alignments cover different sentence pairs (" + std::to_string(fwd.source_len()) +
                "x" + std::to_string(fwd.target_len()) + " vs " + std::to_string(rev.source_len()) + "x" +
                std::to_string(rev.target_len()) + ")");
  }
  AlignmentMatrix inter(fwd.source_len(), fwd.target_len());
  AlignmentMatrix uni(fwd.source_len(), fwd.target_len());
  for (size_t i = 0; i < fwd.source_len(); ++i) {
    for (size_t j = 0; j < fwd.target_len(); ++j) {
      const bool a = fwd.contains(i, j);
      const bool b = rev.contains(i, j);
      if (a && b) inter.set(i, j);
      if (a || b) uni.set(i, j);
    }
  }
  if (heuristic == Heuristic::kIntersection) return inter;
  if (heuristic == Heuristic::kUnion) return uni;
  Grower g(inter);
  g.grow_diag(uni);
  if (heuristic == Heuristic::kGrowDiagFinal || heuristic == Heuristic::kGrowDiagFinalAnd) {
    const bool both = heuristic == Heuristic::kGrowDiagFinalAnd;
    g.final_step(fwd, both);
    g.final_step(rev, both);
  }
  return g.result();
}

AlignmentMatrix symmetrize(const DirectionalAlignment& fwd, const DirectionalAlignment& rev, Heuristic heuristic) {
  return symmetrize(to_matrix(fwd), to_matrix(rev), heuristic);
}

}  // namespace smt::align
