// align.cpp
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
// EM training of the lexical alignment models and Viterbi alignment.

#include "smt/align.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

namespace smt::align {

double TTable::prob(const std::string& generated, const std::string& conditioning) const {
  auto row = rows_.find(conditioning);
  if (row == rows_.end()) return 0.0;
  auto it = row->second.find(generated);
  return it == row->second.end() ? 0.0 : it->second;
}

void TTable::set(const std::string& conditioning, const std::string& generated, double p) {
  rows_[conditioning][generated] = p;
}

size_t TTable::size() const {
  size_t n = 0;
  for (const auto& [e, row] : rows_) n += row.size();
  return n;
}

void TTable::save(const std::string& path) const {
  std::vector<std::tuple<std::string, std::string, double>> rows;
  rows.reserve(size());
  for (const auto& [e, row] : rows_) {
    for (const auto& [f, p] : row) rows.emplace_back(e, f, p);
  }
  std::sort(rows.begin(), rows.end());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  char buf[64];
  for (const auto& [e, f, p] : rows) {
    auto res = std::to_chars(buf, buf + sizeof(buf), p);
    out << e << '\t' << f << '\t' << std::string_view(buf, res.ptr - buf) << '\n';
  }
}

TTable TTable::load(const std::string& path) {
  TTable t;
  size_t lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    if (line.empty()) continue;
    const size_t a = line.find('\t');
    const size_t b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) throw Error(path + ":" + std::to_string(lineno) + ": expected 3 fields");
    double p = 0.0;
    const char* first = line.data() + b + 1;
    auto res = std::from_chars(first, line.data() + line.size(), p);
    if (res.ec != std::errc()) throw Error(path + ":" + std::to_string(lineno) + ": bad probability");
    t.set(line.substr(0, a), line.substr(a + 1, b - a - 1), p);
  }
  return t;
}

double position_prob(size_t i, size_t j, size_t m, size_t n, double tension, double p0) {
  if (i == 0) return p0;
  const double jr = static_cast<double>(j) / static_cast<double>(m);
  double z = 0.0;
  for (size_t k = 1; k <= n; ++k) z += std::exp(-tension * std::abs(static_cast<double>(k) / static_cast<double>(n) - jr));
  return (1.0 - p0) * std::exp(-tension * std::abs(static_cast<double>(i) / static_cast<double>(n) - jr)) / z;
}

namespace {

// Corpus mapped to dense ids; conditioning id 0 is NULL.
struct IdCorpus {
  std::vector<std::string> gen_words;
  std::vector<std::string> cond_words{kNullWord};
  std::vector<std::vector<uint32_t>> gen;
  std::vector<std::vector<uint32_t>> cond;
};

IdCorpus map_corpus(const ParallelCorpus& corpus) {
  IdCorpus c;
  std::unordered_map<std::string, uint32_t> gen_ids;
  std::unordered_map<std::string, uint32_t> cond_ids{{kNullWord, 0}};
  auto intern = [](std::unordered_map<std::string, uint32_t>& ids, std::vector<std::string>& words,
                   const std::string& w) {
    auto [it, added] = ids.emplace(w, static_cast<uint32_t>(words.size()));
    if (added) words.push_back(w);
    return it->second;
  };
  for (const auto& p : corpus.pairs()) {
    std::vector<uint32_t> g, e;
    for (const auto& w : p.source.tokens) g.push_back(intern(gen_ids, c.gen_words, w));
    for (const auto& w : p.target.tokens) e.push_back(intern(cond_ids, c.cond_words, w));
    c.gen.push_back(std::move(g));
    c.cond.push_back(std::move(e));
  }
  return c;
}

using IdTable = std::vector<std::unordered_map<uint32_t, double>>;

IdTable uniform_table(const IdCorpus& c) {
  IdTable t(c.cond_words.size());
  const double u = 1.0 / static_cast<double>(std::max<size_t>(c.gen_words.size(), 1));
  for (size_t s = 0; s < c.gen.size(); ++s) {
    for (uint32_t f : c.gen[s]) {
      t[0][f] = u;
      for (uint32_t e : c.cond[s]) t[e][f] = u;
    }
  }
  return t;
}

void normalize_rows(IdTable* t) {
  for (auto& row : *t) {
    double z = 0.0;
    for (const auto& [f, c] : row) z += c;
    if (z <= 0.0) continue;
    for (auto& [f, c] : row) c /= z;
  }
}

TTable to_ttable(const IdCorpus& c, const IdTable& t) {
  TTable out;
  for (size_t e = 0; e < t.size(); ++e) {
    for (const auto& [f, p] : t[e]) out.set(c.cond_words[e], c.gen_words[f], p);
  }
  return out;
}

class PositionCache {
 public:
  PositionCache(double tension, double p0) : tension_(tension), p0_(p0) {}
  // weights[(j-1)*(n+1) + i] for i in 0..n
  const std::vector<double>& get(size_t m, size_t n) {
    auto key = std::make_pair(m, n);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<double> w(m * (n + 1));
    for (size_t j = 1; j <= m; ++j) {
      for (size_t i = 0; i <= n; ++i) w[(j - 1) * (n + 1) + i] = position_prob(i, j, m, n, tension_, p0_);
    }
    return cache_.emplace(key, std::move(w)).first->second;
  }

 private:
  double tension_;
  double p0_;
  std::map<std::pair<size_t, size_t>, std::vector<double>> cache_;
};

// Expected position counts per sentence shape, for tension re-estimation.
using ShapeCounts = std::map<std::pair<size_t, size_t>, std::vector<double>>;

// One E-step. Returns the corpus log-likelihood of the current table.
// With positions == nullptr every link has prior 1/(n+1).
double e_step(const IdCorpus& c, const IdTable& t, PositionCache* positions, IdTable* counts,
              ShapeCounts* shapes) {
  double ll = 0.0;
  std::vector<double> post;
  for (size_t s = 0; s < c.gen.size(); ++s) {
    const auto& f = c.gen[s];
    const auto& e = c.cond[s];
    const size_t m = f.size();
    const size_t n = e.size();
    const std::vector<double>* prior = positions ? &positions->get(m, n) : nullptr;
    std::vector<double>* shape = nullptr;
    if (shapes) {
      auto& v = (*shapes)[{m, n}];
      v.resize(m * n, 0.0);
      shape = &v;
    }
    const double uniform = 1.0 / static_cast<double>(n + 1);
    post.resize(n + 1);
    for (size_t j = 0; j < m; ++j) {
      double z = 0.0;
      for (size_t i = 0; i <= n; ++i) {
        const uint32_t ew = i == 0 ? 0 : e[i - 1];
        auto it = t[ew].find(f[j]);
        double tp = it == t[ew].end() ? 0.0 : it->second;
        if (i == 0) tp = std::max(tp, kNullFloor);
        const double pr = prior ? (*prior)[j * (n + 1) + i] : uniform;
        post[i] = pr * tp;
        z += post[i];
      }
      ll += std::log(z);
      if (!counts) continue;
      for (size_t i = 0; i <= n; ++i) {
        const double q = post[i] / z;
        const uint32_t ew = i == 0 ? 0 : e[i - 1];
        (*counts)[ew][f[j]] += q;
        if (shape && i > 0) (*shape)[j * n + (i - 1)] += q;
      }
    }
  }
  return ll;
}

// Expected complete-data log-likelihood of the position model (without the
// constant NULL terms) as a function of the tension.
double position_objective(const ShapeCounts& shapes, double tension) {
  double q = 0.0;
  for (const auto& [shape, v] : shapes) {
    const auto [m, n] = shape;
    for (size_t j = 1; j <= m; ++j) {
      const double jr = static_cast<double>(j) / static_cast<double>(m);
      double z = 0.0;
      for (size_t i = 1; i <= n; ++i) z += std::exp(-tension * std::abs(static_cast<double>(i) / static_cast<double>(n) - jr));
      const double logz = std::log(z);
      for (size_t i = 1; i <= n; ++i) {
        const double c = v[(j - 1) * n + (i - 1)];
        if (c == 0.0) continue;
        q += c * (-tension * std::abs(static_cast<double>(i) / static_cast<double>(n) - jr) - logz);
      }
    }
  }
  return q;
}

double optimize_tension(const ShapeCounts& shapes, double current) {
  // The objective is concave in the tension, so golden-section search finds
  // the maximum on the bracket.
  constexpr double kPhi = 0.6180339887498949;
  double lo = 0.0;
  double hi = 100.0;
  double a = hi - kPhi * (hi - lo);
  double b = lo + kPhi * (hi - lo);
  double fa = position_objective(shapes, a);
  double fb = position_objective(shapes, b);
  for (int it = 0; it < 80; ++it) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + kPhi * (hi - lo);
      fb = position_objective(shapes, b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - kPhi * (hi - lo);
      fa = position_objective(shapes, a);
    }
  }
  const double best = (lo + hi) / 2;
  return position_objective(shapes, best) > position_objective(shapes, current) ? best : current;
}

}  // namespace

TTable train_model1(const ParallelCorpus& corpus, int iterations, std::vector<double>* log_likelihood) {
  if (corpus.empty()) throw Error("no training data");
  if (iterations < 1) throw Error("alignment training needs at least one iteration");
  const IdCorpus c = map_corpus(corpus);
  IdTable t = uniform_table(c);
  if (log_likelihood) log_likelihood->clear();
  for (int it = 0; it < iterations; ++it) {
    IdTable counts(t.size());
    const double ll = e_step(c, t, nullptr, &counts, nullptr);
    if (log_likelihood) log_likelihood->push_back(ll);
    normalize_rows(&counts);
    t = std::move(counts);
  }
  if (log_likelihood) log_likelihood->push_back(e_step(c, t, nullptr, nullptr, nullptr));
  return to_ttable(c, t);
}

Model2Params train_model2_diag(const ParallelCorpus& corpus, const Model2Options& options,
                               std::vector<double>* log_likelihood) {
  if (corpus.empty()) throw Error("no training data");
  if (options.iterations < 1) throw Error("alignment training needs at least one iteration");
  if (options.tension < 0.0) throw Error("tension must be non-negative");
  if (options.p0 < 0.0 || options.p0 >= 1.0) throw Error("null probability must be in [0, 1)");
  const IdCorpus c = map_corpus(corpus);
  IdTable t = uniform_table(c);
  double tension = options.tension;
  if (log_likelihood) log_likelihood->clear();
  for (int it = 0; it < options.iterations; ++it) {
    PositionCache positions(tension, options.p0);
    IdTable counts(t.size());
    ShapeCounts shapes;
    const double ll = e_step(c, t, &positions, &counts, options.optimize_tension ? &shapes : nullptr);
    if (log_likelihood) log_likelihood->push_back(ll);
    normalize_rows(&counts);
    t = std::move(counts);
    if (options.optimize_tension) tension = optimize_tension(shapes, tension);
  }
  if (log_likelihood) {
    PositionCache positions(tension, options.p0);
    log_likelihood->push_back(e_step(c, t, &positions, nullptr, nullptr));
  }
  return Model2Params{to_ttable(c, t), tension, options.p0};
}

namespace {

std::unordered_map<std::string, double> flatten_counts(const IdCorpus& c, const IdTable& counts) {
  std::unordered_map<std::string, double> out;
  for (size_t e = 0; e < counts.size(); ++e) {
    for (const auto& [f, v] : counts[e]) out[c.gen_words[f] + "\t" + c.cond_words[e]] = v;
  }
  return out;
}

}  // namespace

std::unordered_map<std::string, double> expected_counts_model1(const ParallelCorpus& corpus) {
  const IdCorpus c = map_corpus(corpus);
  const IdTable t = uniform_table(c);
  IdTable counts(t.size());
  e_step(c, t, nullptr, &counts, nullptr);
  return flatten_counts(c, counts);
}

std::unordered_map<std::string, double> expected_counts_model2(const ParallelCorpus& corpus, double tension,
                                                               double p0) {
  const IdCorpus c = map_corpus(corpus);
  const IdTable t = uniform_table(c);
  PositionCache positions(tension, p0);
  IdTable counts(t.size());
  e_step(c, t, &positions, &counts, nullptr);
  return flatten_counts(c, counts);
}

std::vector<Link> DirectionalAlignment::points() const {
  std::vector<Link> out;
  for (size_t g = 0; g < links.size(); ++g) {
    if (links[g] == kNullLink) continue;
    out.push_back(direction == Direction::kForward ? Link{g, links[g]} : Link{links[g], g});
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// prior(i) for i in 0..n (0 = NULL) at generated position j (1-based).
template <typename Prior>
DirectionalAlignment viterbi(const TTable& t, const SentencePair& pair, Direction direction, Prior prior) {
  const Sentence& gen = direction == Direction::kForward ? pair.source : pair.target;
  const Sentence& cond = direction == Direction::kForward ? pair.target : pair.source;
  DirectionalAlignment a;
  a.direction = direction;
  a.source_len = pair.source.size();
  a.target_len = pair.target.size();
  a.links.assign(gen.size(), kNullLink);
  const size_t m = gen.size();
  const size_t n = cond.size();
  for (size_t j = 0; j < m; ++j) {
    const double null_score = prior(0, j + 1, m, n) * std::max(t.prob(gen.tokens[j], kNullWord), kNullFloor);
    double best = -1.0;
    size_t best_i = kNullLink;
    for (size_t i = 0; i < n; ++i) {
      const double s = prior(i + 1, j + 1, m, n) * t.prob(gen.tokens[j], cond.tokens[i]);
      if (s > best) {
        best = s;
        best_i = i;
      }
    }
    a.links[j] = (best_i != kNullLink && best >= null_score) ? best_i : kNullLink;
  }
  return a;
}

}  // namespace

DirectionalAlignment viterbi_align(const TTable& ttable, const SentencePair& pair, Direction direction) {
  return viterbi(ttable, pair, direction, [](size_t, size_t, size_t, size_t n) { return 1.0 / static_cast<double>(n + 1); });
}

DirectionalAlignment viterbi_align(const Model2Params& params, const SentencePair& pair, Direction direction) {
  return viterbi(params.ttable, pair, direction, [&](size_t i, size_t j, size_t m, size_t n) {
    return position_prob(i, j, m, n, params.tension, params.p0);
  });
}

}  // namespace smt::align
