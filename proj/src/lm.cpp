// lm.cpp
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
// Counting, estimation and querying of interpolated n-gram models.

#include "smt/lm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

namespace smt::lm {

namespace {

constexpr double kLn10 = 2.302585092994045684;

// log10 of (sum of 10^x) for two terms.
double log10_add(double a, double b) {
  if (a < b) std::swap(a, b);
  return a + std::log10(1.0 + std::pow(10.0, b - a));
}

}  // namespace

Vocabulary::Vocabulary() {
  insert(kUnk);
  insert(kBos);
  insert(kEos);
}

WordId Vocabulary::insert(const std::string& word) {
  auto [it, added] = ids_.emplace(word, static_cast<WordId>(words_.size()));
  if (added) words_.push_back(word);
  return it->second;
}

WordId Vocabulary::lookup(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnkId : it->second;
}

uint64_t NGramCounts::count(const NGram& g) const {
  if (g.empty() || g.size() > counts.size()) return 0;
  const auto& m = counts[g.size() - 1];
  auto it = m.find(g);
  return it == m.end() ? 0 : it->second;
}

uint64_t NGramCounts::continuation_count(const NGram& g) const {
  if (g.empty() || g.size() > continuation.size()) return 0;
  const auto& m = continuation[g.size() - 1];
  auto it = m.find(g);
  return it == m.end() ? 0 : it->second;
}

namespace {

void compute_continuations(NGramCounts* c) {
  c->continuation.assign(c->order > 1 ? c->order - 1 : 0, {});
  for (int k = 1; k < c->order; ++k) {
    auto& cont = c->continuation[k - 1];
    for (const auto& [g, n] : c->counts[k]) {
      if (n == 0) continue;
      ++cont[NGram(g.begin() + 1, g.end())];
    }
  }
}

}  // namespace

void NGramCounts::merge(const NGramCounts& other) {
  if (other.order != order) throw Error("cannot merge counts of different orders");
  std::vector<WordId> remap(other.vocab.size());
  for (WordId id = 0; id < other.vocab.size(); ++id) remap[id] = vocab.insert(other.vocab.word(id));
  for (int k = 0; k < order; ++k) {
    for (const auto& [g, n] : other.counts[k]) {
      NGram mapped(g.size());
      std::transform(g.begin(), g.end(), mapped.begin(), [&](WordId w) { return remap[w]; });
      counts[k][mapped] += n;
    }
  }
  compute_continuations(this);
}

NGramCounts count_ngrams(const std::vector<Sentence>& corpus, int order) {
  if (order < 1 || order > kMaxOrder) {
    throw Error("n-gram order must be in 1.." + std::to_string(kMaxOrder));
  }
  NGramCounts c;
  c.order = order;
  c.counts.assign(order, {});
  std::vector<WordId> ids;
  for (const auto& s : corpus) {
    ids.assign(order - 1, Vocabulary::kBosId);
    for (const auto& tok : s.tokens) ids.push_back(c.vocab.insert(tok));
    ids.push_back(Vocabulary::kEosId);
    for (size_t t = order - 1; t < ids.size(); ++t) {
      for (int k = 1; k <= order; ++k) {
        ++c.counts[k - 1][NGram(ids.begin() + (t + 1 - k), ids.begin() + (t + 1))];
      }
    }
  }
  compute_continuations(&c);
  return c;
}

void write_counts(std::ostream& out, const NGramCounts& counts) {
  for (int k = 1; k <= counts.order; ++k) {
    std::vector<std::pair<std::string, uint64_t>> rows;
    for (const auto& [g, n] : counts.counts[k - 1]) {
      std::string key;
      for (size_t i = 0; i < g.size(); ++i) {
        if (i) key += ' ';
        key += counts.vocab.word(g[i]);
      }
      rows.emplace_back(std::move(key), n);
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& [key, n] : rows) out << key << '\t' << n << '\n';
  }
}

const char* smoothing_name(Smoothing s) {
  return s == Smoothing::kWittenBell ? "wb" : "kn";
}

Smoothing parse_smoothing(const std::string& name) {
  if (name == "wb" || name == "witten-bell") return Smoothing::kWittenBell;
  if (name == "kn" || name == "kneser-ney") return Smoothing::kKneserNey;
  throw Error("unknown smoothing '" + name + "' (expected wb or kn)");
}

double NGramLM::log10_prob(std::span<const WordId> context, WordId word) const {
  const size_t keep = std::min<size_t>(context.size(), static_cast<size_t>(std::max(order_ - 1, 0)));
  context = context.subspan(context.size() - keep);
  if (word >= vocab_.size()) word = Vocabulary::kUnkId;
  double backoff = 0.0;
  NGram g;
  for (size_t start = 0; start <= context.size(); ++start) {
    g.assign(context.begin() + start, context.end());
    g.push_back(word);
    const auto& table = tables_[g.size() - 1];
    auto it = table.find(g);
    if (it != table.end()) return backoff + it->second.log10_prob;
    if (g.size() == 1) break;
    g.pop_back();
    const auto& lower = tables_[g.size() - 1];
    auto h = lower.find(g);
    if (h != lower.end()) backoff += h->second.log10_backoff;
  }
  // Only reachable for a word the unigram table lacks, i.e. never after
  // estimation; fall back to the unknown-word entry.
  auto it = tables_[0].find(NGram{Vocabulary::kUnkId});
  return backoff + (it == tables_[0].end() ? -99.0 : it->second.log10_prob);
}

double NGramLM::prob(std::span<const WordId> context, WordId word) const {
  return std::pow(10.0, log10_prob(context, word));
}

double NGramLM::log_prob(std::span<const std::string> context, const std::string& word) const {
  const size_t keep = std::min<size_t>(context.size(), static_cast<size_t>(std::max(order_ - 1, 0)));
  WordId ids[kMaxOrder];
  for (size_t i = 0; i < keep; ++i) ids[i] = vocab_.lookup(context[context.size() - keep + i]);
  return log10_prob(std::span<const WordId>(ids, keep), vocab_.lookup(word)) * kLn10;
}

bool NGramLM::known(const std::string& word) const { return vocab_.contains(word); }

std::vector<NGram> NGramLM::histories() const {
  std::set<NGram> seen;
  seen.insert(NGram{});
  for (int k = 2; k <= order_; ++k) {
    for (const auto& [g, e] : tables_[k - 1]) seen.insert(NGram(g.begin(), g.end() - 1));
  }
  return {seen.begin(), seen.end()};
}

std::vector<WordId> NGramLM::predictable_words() const {
  std::vector<WordId> out;
  for (WordId id = 0; id < vocab_.size(); ++id) {
    if (id != Vocabulary::kBosId) out.push_back(id);
  }
  return out;
}

NGramLM estimate(const NGramCounts& counts, Smoothing smoothing) {
  const int n = counts.order;
  if (n < 1 || n > kMaxOrder) throw Error("n-gram order must be in 1.." + std::to_string(kMaxOrder));
  NGramLM lm;
  lm.vocab_ = counts.vocab;
  lm.smoothing_ = smoothing;
  lm.discounts_.assign(n, 0.0);
  lm.wb_fallback_.assign(n, false);
  lm.tables_.assign(n, {});

  const double uniform = 1.0 / static_cast<double>(lm.vocab_.size() - 1);

  for (int k = 1; k <= n; ++k) {
    // Lower-order Kneser-Ney levels are estimated from continuation counts.
    const bool continuation = smoothing == Smoothing::kKneserNey && k < n;
    const NGramMap<uint64_t>& stats = continuation ? counts.continuation[k - 1] : counts.counts[k - 1];

    struct HistoryStats {
      double total = 0.0;
      double types = 0.0;
    };
    NGramMap<HistoryStats> by_history;
    uint64_t n1 = 0;
    uint64_t n2 = 0;
    for (const auto& [g, c] : stats) {
      if (c == 0) continue;
      auto& hs = by_history[NGram(g.begin(), g.end() - 1)];
      hs.total += static_cast<double>(c);
      hs.types += 1.0;
      if (c == 1) ++n1;
      if (c == 2) ++n2;
    }

    bool witten_bell = smoothing == Smoothing::kWittenBell;
    double discount = 0.0;
    if (!witten_bell) {
      if (n1 + 2 * n2 == 0) {
        witten_bell = true;
        lm.wb_fallback_[k - 1] = true;
      } else {
        discount = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
        lm.discounts_[k - 1] = discount;
      }
    }

    auto gamma = [&](const HistoryStats& hs) {
      return witten_bell ? hs.types / (hs.types + hs.total) : discount * hs.types / hs.total;
    };
    auto alpha = [&](double c, const HistoryStats& hs) {
      return witten_bell ? c / (hs.types + hs.total) : std::max(c - discount, 0.0) / hs.total;
    };

    // The lower model seen by this level consists of tables 1..k-1 only.
    lm.order_ = k - 1;
    NGramMap<NGramLM::Entry> level;
    if (k == 1) {
      const HistoryStats empty_stats = by_history.contains(NGram{}) ? by_history[NGram{}] : HistoryStats{};
      for (WordId w : lm.predictable_words()) {
        double p = uniform;
        if (empty_stats.total > 0) {
          auto it = stats.find(NGram{w});
          const double c = it == stats.end() ? 0.0 : static_cast<double>(it->second);
          p = alpha(c, empty_stats) + gamma(empty_stats) * uniform;
        }
        p = (1.0 - kUnigramFloor) * p + kUnigramFloor * uniform;
        level[NGram{w}].log10_prob = std::log10(p);
      }
      level[NGram{Vocabulary::kBosId}].log10_prob = -99.0;
    } else {
      for (const auto& [g, c] : stats) {
        if (c == 0) continue;
        const NGram h(g.begin(), g.end() - 1);
        const HistoryStats& hs = by_history.at(h);
        const double lower = lm.log10_prob(std::span<const WordId>(h).subspan(1), g.back());
        const double a = alpha(static_cast<double>(c), hs);
        const double lg = std::log10(gamma(hs)) + lower;
        level[g].log10_prob = a > 0 ? log10_add(std::log10(a), lg) : lg;
      }
      // Back-off weights live on the history entries one order down.
      auto& lower_table = lm.tables_[k - 2];
      for (const auto& [h, hs] : by_history) {
        auto it = lower_table.find(h);
        if (it == lower_table.end()) {
          // Only all-"<s>" histories are missing; they are never predicted.
          it = lower_table.emplace(h, NGramLM::Entry{-99.0, 0.0, false}).first;
        }
        it->second.log10_backoff = std::log10(gamma(hs));
        it->second.has_backoff = true;
      }
    }
    lm.tables_[k - 1] = std::move(level);
  }
  lm.order_ = n;
  return lm;
}

InterpolatedLM::InterpolatedLM(std::vector<std::shared_ptr<const LanguageModel>> components,
                               std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty() || components_.size() != weights_.size()) {
    throw Error("interpolation needs one weight per component");
  }
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw Error("interpolation weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error("interpolation weights must sum to 1");
  for (double& w : weights_) w /= sum;
  for (const auto& c : components_) order_ = std::max(order_, c->order());
}

double InterpolatedLM::log_prob(std::span<const std::string> context, const std::string& word) const {
  double best = -INFINITY;
  std::vector<double> terms;
  terms.reserve(components_.size());
  for (size_t i = 0; i < components_.size(); ++i) {
    if (weights_[i] == 0.0) continue;
    const auto& c = *components_[i];
    const size_t keep = std::min<size_t>(context.size(), static_cast<size_t>(std::max(c.order() - 1, 0)));
    const double t = std::log(weights_[i]) + c.log_prob(context.subspan(context.size() - keep), word);
    terms.push_back(t);
    best = std::max(best, t);
  }
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - best);
  return best + std::log(sum);
}

bool InterpolatedLM::known(const std::string& word) const {
  for (const auto& c : components_) {
    if (c->known(word)) return true;
  }
  return false;
}

double sentence_log_prob(const LanguageModel& lm, const Sentence& sentence) {
  std::vector<std::string> padded(std::max(lm.order() - 1, 0), kBos);
  const size_t ctx = padded.size();
  double total = 0.0;
  for (size_t i = 0; i <= sentence.size(); ++i) {
    const std::string& w = i < sentence.size() ? sentence.tokens[i] : std::string(kEos);
    total += lm.log_prob(std::span<const std::string>(padded).subspan(padded.size() - ctx), w);
    padded.push_back(w);
  }
  return total;
}

PerplexityStats perplexity(const LanguageModel& lm, const std::vector<Sentence>& corpus) {
  PerplexityStats st;
  for (const auto& s : corpus) {
    st.log_prob += sentence_log_prob(lm, s);
    st.tokens += s.size() + 1;
    for (const auto& t : s.tokens) {
      if (!lm.known(t)) ++st.oov;
    }
  }
  st.perplexity = st.tokens ? std::exp(-st.log_prob / static_cast<double>(st.tokens)) : 1.0;
  return st;
}

namespace {

// Per-token component probabilities on held-out text.
std::vector<std::vector<double>> token_probabilities(
    const std::vector<std::shared_ptr<const LanguageModel>>& components,
    const std::vector<Sentence>& heldout) {
  int order = 1;
  for (const auto& c : components) order = std::max(order, c->order());
  std::vector<std::vector<double>> probs;
  for (const auto& s : heldout) {
    std::vector<std::string> padded(order - 1, kBos);
    for (size_t i = 0; i <= s.size(); ++i) {
      const std::string w = i < s.size() ? s.tokens[i] : std::string(kEos);
      std::vector<double> row;
      row.reserve(components.size());
      for (const auto& c : components) {
        const size_t keep = static_cast<size_t>(std::max(c->order() - 1, 0));
        std::span<const std::string> ctx(padded);
        row.push_back(std::exp(c->log_prob(ctx.subspan(ctx.size() - keep), w)));
      }
      probs.push_back(std::move(row));
      padded.push_back(w);
    }
  }
  return probs;
}

double mean_log_likelihood(const std::vector<std::vector<double>>& probs, const std::vector<double>& weights) {
  double ll = 0.0;
  for (const auto& row : probs) {
    double p = 0.0;
    for (size_t i = 0; i < row.size(); ++i) p += weights[i] * row[i];
    ll += std::log(p);
  }
  return ll / static_cast<double>(probs.size());
}

}  // namespace

InterpolationResult fit_interpolation(const std::vector<std::shared_ptr<const LanguageModel>>& components,
                                      const std::vector<Sentence>& heldout,
                                      const InterpolationOptions& options) {
  if (components.size() < 2) throw Error("interpolation needs at least two components");
  if (heldout.empty()) throw Error("interpolation needs held-out text");
  const auto probs = token_probabilities(components, heldout);
  const size_t m = components.size();

  InterpolationResult r;
  r.weights.assign(m, 1.0 / static_cast<double>(m));
  double ll = mean_log_likelihood(probs, r.weights);
  r.log_likelihood.push_back(ll);

  std::vector<double> next(m);
  while (r.iterations < options.max_iterations) {
    std::fill(next.begin(), next.end(), 0.0);
    for (const auto& row : probs) {
      double mix = 0.0;
      for (size_t i = 0; i < m; ++i) mix += r.weights[i] * row[i];
      for (size_t i = 0; i < m; ++i) next[i] += r.weights[i] * row[i] / mix;
    }
    const double total = std::accumulate(next.begin(), next.end(), 0.0);
    for (double& w : next) w /= total;
    const double next_ll = mean_log_likelihood(probs, next);
    ++r.iterations;
    r.weights = next;
    r.log_likelihood.push_back(next_ll);
    const double gain = next_ll - ll;
    ll = next_ll;
    if (gain < options.tolerance) break;
  }

  // EM approaches a boundary optimum only asymptotically; take the best single
  // component when it is strictly better than where EM stopped.
  for (size_t i = 0; i < m; ++i) {
    std::vector<double> vertex(m, 0.0);
    vertex[i] = 1.0;
    const double v = mean_log_likelihood(probs, vertex);
    if (v > ll) {
      ll = v;
      r.weights = vertex;
      r.vertex_chosen = true;
    }
  }
  return r;
}

InterpolatedLM interpolate(const std::vector<std::shared_ptr<const LanguageModel>>& components,
                           const std::vector<Sentence>& heldout, const InterpolationOptions& options) {
  InterpolationResult r = fit_interpolation(components, heldout, options);
  return InterpolatedLM(components, r.weights);
}

}  // namespace smt::lm
