// decoder.cpp
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

#include "smt/decoder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <unordered_map>

namespace smt::decoder {

const std::array<const char*, kNumFeatures>& feature_names() {
  static const std::array<const char*, kNumFeatures> names = {
      "phi_fe",      "phi_ef",      "lex_fe",       "lex_ef",       "phrase_penalty", "word_penalty",
      "distortion",  "lm",          "oov",          "reo_prev_m",   "reo_prev_s",     "reo_prev_dl",
      "reo_prev_dr", "reo_next_m",  "reo_next_s",   "reo_next_dl",  "reo_next_dr"};
  return names;
}

FeatureWeights FeatureWeights::defaults() {
  FeatureWeights f;
  f.w = {0.2, 0.2, 0.2, 0.2, 0.2, -0.5, 0.3, 0.5, 1.0, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3};
  return f;
}

double FeatureWeights::dot(const FeatureVector& f) const {
  double s = 0.0;
  for (size_t i = 0; i < kNumFeatures; ++i) s += w[i] * f[i];
  return s;
}

namespace {

std::string format_weight(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string FeatureWeights::to_string() const {
  std::string out;
  for (size_t i = 0; i < kNumFeatures; ++i) {
    out += feature_names()[i];
    out += ' ';
    out += format_weight(w[i]);
    out += '\n';
  }
  return out;
}

void FeatureWeights::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_string();
}

FeatureWeights FeatureWeights::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  FeatureWeights f = defaults();
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = text::split_ws(line);
    if (fields.empty() || fields[0][0] == '#') continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() != 2) throw Error(where + ": expected 'name value'");
    const auto& names = feature_names();
    auto it = std::find_if(names.begin(), names.end(), [&](const char* n) { return fields[0] == n; });
    if (it == names.end()) throw Error(where + ": unknown feature '" + fields[0] + "'");
    double v = 0;
    auto r = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), v);
    if (r.ec != std::errc() || r.ptr != fields[1].data() + fields[1].size() || !std::isfinite(v)) {
      throw Error(where + ": bad weight '" + fields[1] + "'");
    }
    f.w[it - names.begin()] = v;
  }
  return f;
}

namespace {

constexpr double kMinProb = 1e-30;

double safe_log(double p) { return std::log(std::max(p, kMinProb)); }

struct Option {
  size_t begin = 0;
  size_t end = 0;
  Tokens target;
  FeatureVector features{};  // context-free part
  double score = 0.0;        // weighted context-free part
  double lm_estimate = 0.0;  // LM score of the target without context
  const tmodel::ReorderingEntry* reo = nullptr;
  bool oov = false;
};

struct Hyp;

struct Arc {
  const Hyp* pred = nullptr;
  const Option* option = nullptr;
  FeatureVector delta{};
  double delta_score = 0.0;
};

struct Hyp {
  std::vector<bool> coverage;
  size_t covered = 0;
  long last_start = -1;
  long last_end = 0;  // exclusive
  const Option* last_option = nullptr;
  std::vector<std::string> context;
  double score = 0.0;
  double future = 0.0;
  std::vector<Arc> arcs;  // arcs[0] is the best way in; the rest recombined
};

// Reordering slot of the transition prev -> cur, seen from cur
// (previous side) or from prev (next side).
size_t orientation_slot(long prev_start, long prev_end, long cur_start, long cur_end, tmodel::Scheme scheme,
                        bool previous_side) {
  if (cur_start == prev_end) return 0;
  if (cur_end == prev_start) return 1;
  if (scheme == tmodel::Scheme::kMsd) return 2;
  const bool cur_right_of_prev = prev_start < cur_start;
  if (previous_side) return cur_right_of_prev ? 2 : 3;
  return cur_right_of_prev ? 3 : 2;
}

class Search {
 public:
  Search(const Models& models, const FeatureWeights& weights, const DecoderConfig& config, const Tokens& source)
      : models_(models), weights_(weights), config_(config), source_(source), n_(source.size()) {
    if (!models_.table || !models_.lm) throw Error("decoder needs a phrase table and a language model");
    build_options();
    build_future_cost();
  }

  const std::vector<std::vector<double>>& future_cost() const { return fc_; }

  // Runs the search; returns the node holding all complete derivations, or
  // nullptr when every path dead-ends.
  const Hyp* run() {
    stacks_.assign(n_ + 1, {});
    index_.assign(n_ + 1, {});
    Hyp& root = arena_.emplace_back();
    root.coverage.assign(n_, false);
    const int order = models_.lm->order();
    root.context.assign(order > 1 ? order - 1 : 0, lm::kBos);
    root.future = fc_[0][n_];
    stacks_[0].push_back(&root);
    for (size_t k = 0; k < n_; ++k) {
      prune(k);
      for (const Hyp* h : stacks_[k]) expand(*h);
    }
    return stacks_[n_].empty() ? nullptr : stacks_[n_].front();
  }

 private:
  void build_options() {
    options_.assign(n_, {});
    const size_t max_len = std::max<size_t>(1, models_.table->max_source_len());
    const auto* reo = models_.reordering;
    for (size_t b = 0; b < n_; ++b) {
      for (size_t e = b + 1; e <= n_ && e - b <= max_len; ++e) {
        Tokens src(source_.begin() + b, source_.begin() + e);
        const auto* entries = models_.table->lookup(src);
        if (!entries) continue;
        std::vector<Option> span;
        for (const auto& entry : *entries) {
          Option o;
          o.begin = b;
          o.end = e;
          o.target = entry.target;
          o.features[kPhiFe] = safe_log(entry.scores.phi_fe);
          o.features[kPhiEf] = safe_log(entry.scores.phi_ef);
          o.features[kLexFe] = safe_log(entry.scores.lex_fe);
          o.features[kLexEf] = safe_log(entry.scores.lex_ef);
          o.features[kPhrasePenalty] = 1.0;
          o.features[kWordPenalty] = -static_cast<double>(entry.target.size());
          if (reo) o.reo = reo->lookup(src, entry.target);
          finish_option(&o);
          span.push_back(std::move(o));
        }
        if (config_.table_limit && span.size() > config_.table_limit) {
          std::stable_sort(span.begin(), span.end(), [&](const Option& x, const Option& y) {
            return estimate(x) > estimate(y);
          });
          span.resize(config_.table_limit);
        }
        for (auto& o : span) options_[b].push_back(std::move(o));
      }
      const bool has_single = std::any_of(options_[b].begin(), options_[b].end(),
                                          [&](const Option& o) { return o.end == b + 1; });
      if (!has_single) {
        Option o;
        o.begin = b;
        o.end = b + 1;
        o.target = {source_[b]};
        o.oov = true;
        o.features[kPhrasePenalty] = 1.0;
        o.features[kWordPenalty] = -1.0;
        o.features[kOov] = -1.0;
        finish_option(&o);
        options_[b].push_back(std::move(o));
      }
    }
  }

  void finish_option(Option* o) const {
    o->score = weights_.dot(o->features);
    std::vector<std::string> ctx;
    const size_t keep = models_.lm->order() > 1 ? models_.lm->order() - 1 : 0;
    for (const auto& w : o->target) {
      o->lm_estimate += models_.lm->log_prob(ctx, w);
      ctx.push_back(w);
      if (ctx.size() > keep) ctx.erase(ctx.begin());
    }
  }

  double estimate(const Option& o) const { return o.score + weights_.w[kLm] * o.lm_estimate; }

  void build_future_cost() {
    const double kNone = -std::numeric_limits<double>::infinity();
    fc_.assign(n_ + 1, std::vector<double>(n_ + 1, kNone));
    for (size_t b = 0; b < n_; ++b) {
      for (const auto& o : options_[b]) fc_[b][o.end] = std::max(fc_[b][o.end], estimate(o));
    }
    for (size_t len = 2; len <= n_; ++len) {
      for (size_t b = 0; b + len <= n_; ++b) {
        const size_t e = b + len;
        for (size_t m = b + 1; m < e; ++m) fc_[b][e] = std::max(fc_[b][e], fc_[b][m] + fc_[m][e]);
      }
    }
    for (size_t i = 0; i <= n_; ++i) fc_[i][i] = 0.0;
  }

  double future_of(const std::vector<bool>& cov) const {
    double f = 0.0;
    size_t i = 0;
    while (i < n_) {
      if (cov[i]) {
        ++i;
        continue;
      }
      size_t j = i;
      while (j < n_ && !cov[j]) ++j;
      f += fc_[i][j];
      i = j;
    }
    return f;
  }

  std::string key_of(const Hyp& h) const {
    if (h.covered == n_) return "#";
    std::string key;
    key.reserve(n_ + 32);
    for (bool b : h.coverage) key += b ? '1' : '0';
    key += '|';
    for (const auto& w : h.context) {
      key += w;
      key += ' ';
    }
    key += '|';
    key += std::to_string(h.last_end);
    if (models_.reordering) {
      key += '|';
      key += std::to_string(h.last_start);
      key += '|';
      key += std::to_string(reinterpret_cast<uintptr_t>(h.last_option ? h.last_option->reo : nullptr));
    }
    return key;
  }

  void prune(size_t k) {
    auto& stack = stacks_[k];
    if (stack.size() <= 1) return;
    std::vector<std::pair<double, size_t>> order;
    order.reserve(stack.size());
    for (size_t i = 0; i < stack.size(); ++i) order.emplace_back(stack[i]->score + stack[i]->future, i);
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    size_t keep = order.size();
    if (config_.stack_size) keep = std::min(keep, config_.stack_size);
    if (config_.beam > 0) {
      const double threshold = order.front().first + std::log(config_.beam);
      size_t within = 0;
      while (within < keep && order[within].first >= threshold) ++within;
      keep = within;
    }
    std::vector<Hyp*> kept;
    kept.reserve(keep);
    for (size_t i = 0; i < keep; ++i) kept.push_back(stack[order[i].second]);
    stack = std::move(kept);
  }

  void expand(const Hyp& h) {
    const double kInf = std::numeric_limits<double>::infinity();
    for (size_t b = 0; b < n_; ++b) {
      if (h.coverage[b]) continue;
      const long dist = std::labs(static_cast<long>(b) - h.last_end);
      if (config_.distortion_limit >= 0 && dist > config_.distortion_limit) continue;
      for (const auto& o : options_[b]) {
        bool free = true;
        for (size_t i = o.begin; i < o.end && free; ++i) free = !h.coverage[i];
        if (!free) continue;
        Hyp next;
        next.coverage = h.coverage;
        for (size_t i = o.begin; i < o.end; ++i) next.coverage[i] = true;
        next.covered = h.covered + (o.end - o.begin);
        next.last_start = static_cast<long>(o.begin);
        next.last_end = static_cast<long>(o.end);
        next.last_option = &o;
        Arc arc;
        arc.pred = &h;
        arc.option = &o;
        arc.delta = o.features;
        arc.delta[kDistortion] = -static_cast<double>(dist);
        next.context = h.context;
        const size_t keep = next.context.size();
        for (const auto& w : o.target) {
          arc.delta[kLm] += models_.lm->log_prob(next.context, w);
          if (keep) {
            next.context.erase(next.context.begin());
            next.context.push_back(w);
          }
        }
        const auto* reo = models_.reordering;
        if (reo) {
          const auto scheme = reo->scheme();
          if (o.reo) {
            const size_t s = orientation_slot(h.last_start, h.last_end, next.last_start, next.last_end, scheme, true);
            arc.delta[kReoPrev + s] += safe_log(o.reo->previous[s]);
          }
          if (h.last_option && h.last_option->reo) {
            const size_t s =
                orientation_slot(h.last_start, h.last_end, next.last_start, next.last_end, scheme, false);
            arc.delta[kReoNext + s] += safe_log(h.last_option->reo->next[s]);
          }
        }
        if (next.covered == n_) {
          arc.delta[kLm] += models_.lm->log_prob(next.context, lm::kEos);
          if (reo && o.reo) {
            const long end = static_cast<long>(n_);
            const size_t s = orientation_slot(next.last_start, next.last_end, end, end + 1, reo->scheme(), false);
            arc.delta[kReoNext + s] += safe_log(o.reo->next[s]);
          }
          next.context.clear();
        }
        arc.delta_score = weights_.dot(arc.delta);
        next.score = h.score + arc.delta_score;
        next.future = next.covered == n_ ? 0.0 : future_of(next.coverage);
        if (next.future == -kInf) continue;
        next.arcs.push_back(arc);
        insert(std::move(next));
      }
    }
  }

  void insert(Hyp&& next) {
    const size_t k = next.covered;
    std::string key = key_of(next);
    auto it = index_[k].find(key);
    if (it == index_[k].end()) {
      Hyp& stored = arena_.emplace_back(std::move(next));
      index_[k].emplace(std::move(key), stacks_[k].size());
      stacks_[k].push_back(&stored);
      return;
    }
    Hyp* existing = stacks_[k][it->second];
    if (next.score > existing->score) {
      // The newcomer takes over the slot; the old best becomes an alternative.
      for (auto& a : existing->arcs) next.arcs.push_back(a);
      Hyp& stored = arena_.emplace_back(std::move(next));
      stacks_[k][it->second] = &stored;
    } else {
      existing->arcs.push_back(next.arcs.front());
    }
  }

  const Models& models_;
  const FeatureWeights& weights_;
  const DecoderConfig& config_;
  const Tokens& source_;
  const size_t n_;
  std::vector<std::vector<Option>> options_;
  std::vector<std::vector<double>> fc_;
  std::deque<Hyp> arena_;
  std::vector<std::vector<Hyp*>> stacks_;
  std::vector<std::unordered_map<std::string, size_t>> index_;
};

// k-best derivations over the recombination graph.
class KBest {
 public:
  explicit KBest(size_t k) : k_(k) {}

  struct Deriv {
    double score;
    const Arc* arc;
    size_t pred_rank;
  };

  const std::vector<Deriv>& of(const Hyp* h) {
    auto it = memo_.find(h);
    if (it != memo_.end()) return it->second;
    std::vector<Deriv> cands;
    if (h->arcs.empty()) {
      cands.push_back({0.0, nullptr, 0});
    } else {
      for (const auto& arc : h->arcs) {
        const auto& preds = of(arc.pred);
        for (size_t r = 0; r < preds.size(); ++r) cands.push_back({preds[r].score + arc.delta_score, &arc, r});
      }
      std::stable_sort(cands.begin(), cands.end(), [](const Deriv& a, const Deriv& b) { return a.score > b.score; });
      if (cands.size() > k_) cands.resize(k_);
    }
    return memo_.emplace(h, std::move(cands)).first->second;
  }

  Translation build(const Hyp* h, size_t rank) {
    Translation t;
    std::vector<const Arc*> path;
    while (!h->arcs.empty()) {
      const Deriv& d = of(h)[rank];
      path.push_back(d.arc);
      h = d.arc->pred;
      rank = d.pred_rank;
    }
    std::reverse(path.begin(), path.end());
    for (const Arc* a : path) {
      for (size_t i = 0; i < kNumFeatures; ++i) t.features[i] += a->delta[i];
      t.score += a->delta_score;
      t.target.insert(t.target.end(), a->option->target.begin(), a->option->target.end());
      t.steps.push_back({a->option->begin, a->option->end, a->option->target, a->option->oov});
    }
    return t;
  }

 private:
  size_t k_;
  std::unordered_map<const Hyp*, std::vector<Deriv>> memo_;
};

}  // namespace

Decoder::Decoder(Models models, FeatureWeights weights, DecoderConfig config)
    : models_(models), weights_(weights), config_(config) {
  if (!models_.table || !models_.lm) throw Error("decoder needs a phrase table and a language model");
  for (double w : weights_.w) {
    if (!std::isfinite(w)) throw Error("feature weights must be finite");
  }
}

std::vector<std::vector<double>> Decoder::future_cost(const Tokens& source) const {
  Search s(models_, weights_, config_, source);
  return s.future_cost();
}

std::vector<Translation> Decoder::nbest(const Tokens& source, size_t k) const {
  if (k == 0) throw Error("n-best size must be at least 1");
  if (source.empty()) return {Translation{}};
  DecoderConfig config = config_;
  std::unique_ptr<Search> search = std::make_unique<Search>(models_, weights_, config, source);
  const Hyp* final = search->run();
  if (!final) {
    // Every reordering path dead-ended under pruning; monotone always
    // completes.
    config.distortion_limit = 0;
    search = std::make_unique<Search>(models_, weights_, config, source);
    final = search->run();
    if (!final) throw Error("no complete translation found");
  }
  for (size_t budget = k;; budget *= 4) {
    KBest kb(budget);
    const auto& derivs = kb.of(final);
    std::vector<Translation> out;
    std::set<Tokens> seen;
    for (size_t r = 0; r < derivs.size() && out.size() < k; ++r) {
      Translation t = kb.build(final, r);
      if (seen.insert(t.target).second) out.push_back(std::move(t));
    }
    if (out.size() >= k || derivs.size() < budget || budget >= 64 * k) return out;
  }
}

Translation Decoder::decode(const Tokens& source) const { return nbest(source, 1).front(); }

std::string format_nbest(size_t index, const Translation& t) {
  std::string out = std::to_string(index) + " ||| " + t.text() + " |||";
  for (double f : t.features) {
    out += ' ';
    out += format6(f);
  }
  out += " ||| ";
  out += format6(t.score);
  return out;
}

}  // namespace smt::decoder
