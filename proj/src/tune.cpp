// tune.cpp
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
// N-best coordinate ascent.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "smt/pipeline.hpp"

namespace smt::pipeline {

namespace {

constexpr int kBleuOrder = 4;

// Sufficient statistics of one candidate against its reference.
struct Stats {
  std::array<size_t, kBleuOrder> matches{};
  std::array<size_t, kBleuOrder> totals{};
  size_t hyp_len = 0;
  size_t ref_len = 0;

  void add(const Stats& o) {
    for (int n = 0; n < kBleuOrder; ++n) {
      matches[n] += o.matches[n];
      totals[n] += o.totals[n];
    }
    hyp_len += o.hyp_len;
    ref_len += o.ref_len;
  }
};

Stats sentence_stats(const Tokens& hyp, const Tokens& ref) {
  // metrics::bleu on a single segment gives the same counts.
  const auto r = metrics::bleu({hyp}, {ref}, kBleuOrder);
  Stats s;
  for (int n = 0; n < kBleuOrder; ++n) {
    s.matches[n] = r.matches[n];
    s.totals[n] = r.totals[n];
  }
  s.hyp_len = r.hyp_len;
  s.ref_len = r.ref_len;
  return s;
}

// Same formula as metrics::bleu, from summed statistics.
double bleu_of(const Stats& s) {
  double log_sum = 0.0;
  int used = 0;
  for (int n = 0; n < kBleuOrder; ++n) {
    if (s.totals[n] == 0) continue;
    if (s.matches[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(s.matches[n]) / static_cast<double>(s.totals[n]));
    ++used;
  }
  if (s.hyp_len == 0 || used == 0) return 0.0;
  const double bp =
      std::exp(std::min(0.0, 1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len)));
  return 100.0 * bp * std::exp(log_sum / used);
}

Tokens maybe_lower(const Tokens& t, bool lower) {
  if (!lower) return t;
  Tokens out = t;
  for (auto& w : out) w = text::to_lower(w);
  return out;
}

struct Candidate {
  decoder::FeatureVector features;
  Stats stats;
};

std::vector<double> grid(const TuneOptions& o) {
  std::vector<double> g;
  const int steps = static_cast<int>(std::llround((o.grid_max - o.grid_min) / o.grid_step));
  for (int i = 0; i <= steps; ++i) g.push_back(o.grid_min + o.grid_step * i);
  return g;
}

// Corpus BLEU of each sentence's top candidate under w. Ties go to the
// earlier candidate.
double rerank_bleu(const std::vector<std::vector<Candidate>>& pool, const decoder::FeatureWeights& w) {
  Stats total;
  for (const auto& cands : pool) {
    if (cands.empty()) continue;
    size_t best = 0;
    double best_score = w.dot(cands[0].features);
    for (size_t i = 1; i < cands.size(); ++i) {
      const double s = w.dot(cands[i].features);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    total.add(cands[best].stats);
  }
  return bleu_of(total);
}

decoder::FeatureWeights ascend(const std::vector<std::vector<Candidate>>& pool, const decoder::FeatureWeights& start,
                               const TuneOptions& options) {
  decoder::FeatureWeights w = start;
  double current = rerank_bleu(pool, w);
  const std::set<size_t> frozen(options.frozen.begin(), options.frozen.end());
  const auto values = grid(options);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    bool changed = false;
    for (size_t f = 0; f < decoder::kNumFeatures; ++f) {
      if (frozen.count(f)) continue;
      const double keep = w.w[f];
      double best_value = keep;
      double best = current;
      for (double v : values) {
        w.w[f] = v;
        const double b = rerank_bleu(pool, w);
        // Strict improvement only, so the current value wins ties.
        if (b > best + 1e-12) {
          best = b;
          best_value = v;
        }
      }
      w.w[f] = best_value;
      if (best_value != keep) {
        changed = true;
        current = best;
      }
    }
    if (!changed) break;
  }
  return w;
}

double decode_bleu(const decoder::Decoder& dec, const std::vector<Tokens>& src, const std::vector<Tokens>& refs,
                   bool lower) {
  std::vector<Tokens> hyps;
  std::vector<Tokens> r;
  for (size_t i = 0; i < src.size(); ++i) {
    hyps.push_back(maybe_lower(dec.decode(src[i]).target, lower));
    r.push_back(maybe_lower(refs[i], lower));
  }
  return metrics::bleu(hyps, r).score;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

decoder::FeatureWeights rerank_ascent(const std::vector<std::vector<decoder::Translation>>& pool,
                                      const std::vector<Tokens>& refs, const decoder::FeatureWeights& start,
                                      const TuneOptions& options) {
  if (pool.size() != refs.size()) throw Error("need one candidate list per reference");
  std::vector<std::vector<Candidate>> cands(pool.size());
  for (size_t s = 0; s < pool.size(); ++s) {
    const Tokens ref = maybe_lower(refs[s], options.lowercase);
    for (const auto& t : pool[s]) cands[s].push_back({t.features, sentence_stats(maybe_lower(t.target, options.lowercase), ref)});
  }
  return ascend(cands, start, options);
}

TuneResult tune_weights(const decoder::Models& models, const decoder::DecoderConfig& decoder_config,
                        const std::vector<Tokens>& dev_source, const std::vector<Tokens>& dev_refs,
                        const decoder::FeatureWeights& initial, const TuneOptions& options, const Logger& log) {
  if (dev_source.size() != dev_refs.size()) throw Error("dev source and references differ in length");
  if (dev_source.empty()) throw Error("empty dev set");
  TuneResult result;
  result.weights = initial;
  decoder::Decoder dec(models, initial, decoder_config);
  double best_bleu = decode_bleu(dec, dev_source, dev_refs, options.lowercase);
  result.bleu_history.push_back(best_bleu);
  if (log) log("  tune: initial dev BLEU " + fmt2(best_bleu));

  std::vector<std::vector<Candidate>> pool(dev_source.size());
  std::vector<std::set<Tokens>> seen(dev_source.size());
  decoder::FeatureWeights w = initial;
  for (int it = 1; it <= options.iterations; ++it) {
    dec.set_weights(w);
    size_t added = 0;
    bool any_output = false;
    for (size_t s = 0; s < dev_source.size(); ++s) {
      const Tokens ref = maybe_lower(dev_refs[s], options.lowercase);
      for (auto& t : dec.nbest(dev_source[s], options.nbest)) {
        if (!t.target.empty()) any_output = true;
        if (!seen[s].insert(t.target).second) continue;
        pool[s].push_back({t.features, sentence_stats(maybe_lower(t.target, options.lowercase), ref)});
        ++added;
      }
    }
    if (!any_output) {
      if (log) log("  tune: warning: dev translations are all empty, keeping the initial weights");
      result.degenerate = true;
      result.weights = initial;
      return result;
    }
    const decoder::FeatureWeights next = ascend(pool, w, options);
    dec.set_weights(next);
    const double b = decode_bleu(dec, dev_source, dev_refs, options.lowercase);
    if (b > best_bleu) {
      best_bleu = b;
      result.weights = next;
    }
    result.bleu_history.push_back(best_bleu);
    if (log) {
      log("  tune: iteration " + std::to_string(it) + ": " + std::to_string(added) + " new candidates, dev BLEU " +
          fmt2(b) + " (best " + fmt2(best_bleu) + ")");
    }
    if (next.w == w.w && added == 0) break;
    w = next;
  }
  return result;
}

}  // namespace smt::pipeline
