// metrics.cpp
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

#include "smt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace smt::metrics {

namespace {

using NGramCount = std::map<Tokens, size_t>;

NGramCount ngrams(const Tokens& s, size_t n) {
  NGramCount out;
  for (size_t i = 0; i + n <= s.size(); ++i) ++out[Tokens(s.begin() + i, s.begin() + i + n)];
  return out;
}

void check_sizes(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs) {
  if (hyps.size() != refs.size()) {
    throw Error("hypothesis corpus has " + std::to_string(hyps.size()) + " segments, reference has " +
                std::to_string(refs.size()));
  }
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

}  // namespace

BleuResult bleu(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, int max_n) {
  check_sizes(hyps, refs);
  if (max_n < 1) throw Error("BLEU order must be at least 1");
  BleuResult r;
  r.matches.assign(max_n, 0);
  r.totals.assign(max_n, 0);
  for (size_t s = 0; s < hyps.size(); ++s) {
    r.hyp_len += hyps[s].size();
    r.ref_len += refs[s].size();
    for (int n = 1; n <= max_n; ++n) {
      const auto h = ngrams(hyps[s], n);
      const auto g = ngrams(refs[s], n);
      for (const auto& [k, c] : h) {
        auto it = g.find(k);
        if (it != g.end()) r.matches[n - 1] += std::min(c, it->second);
        r.totals[n - 1] += c;
      }
    }
  }
  r.precisions.assign(max_n, 0.0);
  // Orders with no hypothesis n-grams at all (every segment shorter than n)
  // drop out of the geometric mean instead of zeroing it.
  double log_sum = 0.0;
  int used = 0;
  for (int n = 0; n < max_n; ++n) {
    if (r.totals[n] == 0) continue;
    if (r.matches[n] == 0) return r;
    r.precisions[n] = static_cast<double>(r.matches[n]) / static_cast<double>(r.totals[n]);
    log_sum += std::log(r.precisions[n]);
    ++used;
  }
  if (r.hyp_len == 0 || used == 0) return r;
  const double ratio = static_cast<double>(r.ref_len) / static_cast<double>(r.hyp_len);
  r.brevity_penalty = std::exp(std::min(0.0, 1.0 - ratio));
  r.score = 100.0 * r.brevity_penalty * std::exp(log_sum / used);
  return r;
}

NistResult nist(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, int max_n) {
  check_sizes(hyps, refs);
  if (max_n < 1) throw Error("NIST order must be at least 1");
  NistResult r;
  r.per_order.assign(max_n, 0.0);
  // Reference statistics for the information weights.
  std::vector<NGramCount> ref_counts(max_n + 1);
  size_t total_words = 0;
  for (const auto& ref : refs) {
    total_words += ref.size();
    for (int n = 1; n <= max_n; ++n) {
      for (const auto& [k, c] : ngrams(ref, n)) ref_counts[n][k] += c;
    }
  }
  auto info = [&](const Tokens& g) {
    const size_t n = g.size();
    const double num = n == 1 ? static_cast<double>(total_words)
                              : static_cast<double>(ref_counts[n - 1].at(Tokens(g.begin(), g.end() - 1)));
    return std::log2(num / static_cast<double>(ref_counts[n].at(g)));
  };
  std::vector<double> info_sum(max_n, 0.0);
  std::vector<size_t> totals(max_n, 0);
  for (size_t s = 0; s < hyps.size(); ++s) {
    r.hyp_len += hyps[s].size();
    r.ref_len += refs[s].size();
    for (int n = 1; n <= max_n; ++n) {
      const auto h = ngrams(hyps[s], n);
      const auto g = ngrams(refs[s], n);
      for (const auto& [k, c] : h) {
        totals[n - 1] += c;
        auto it = g.find(k);
        if (it != g.end()) info_sum[n - 1] += static_cast<double>(std::min(c, it->second)) * info(k);
      }
    }
  }
  if (r.hyp_len == 0 || r.ref_len == 0) return r;
  double sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    if (totals[n]) r.per_order[n] = info_sum[n] / static_cast<double>(totals[n]);
    sum += r.per_order[n];
  }
  const double beta = std::log(0.5) / std::pow(std::log(1.5), 2);
  const double ratio = std::min(1.0, static_cast<double>(r.hyp_len) / static_cast<double>(r.ref_len));
  r.brevity_factor = std::exp(beta * std::pow(std::log(ratio), 2));
  r.score = sum * r.brevity_factor;
  return r;
}

size_t levenshtein(const Tokens& a, const Tokens& b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

namespace {

bool occurs_in(const Tokens& ref, Tokens::const_iterator begin, Tokens::const_iterator end) {
  return std::search(ref.begin(), ref.end(), begin, end) != ref.end();
}

// Moves hyp[i, i+len) so that it starts at position dest of the result.
Tokens shifted(const Tokens& hyp, size_t i, size_t len, size_t dest) {
  Tokens rest;
  rest.reserve(hyp.size());
  rest.insert(rest.end(), hyp.begin(), hyp.begin() + i);
  rest.insert(rest.end(), hyp.begin() + i + len, hyp.end());
  Tokens out(rest.begin(), rest.begin() + dest);
  out.insert(out.end(), hyp.begin() + i, hyp.begin() + i + len);
  out.insert(out.end(), rest.begin() + dest, rest.end());
  return out;
}

}  // namespace

size_t ter_edits(const Tokens& hyp, const Tokens& ref, size_t* shifts) {
  Tokens cur = hyp;
  size_t dist = levenshtein(cur, ref);
  size_t n_shifts = 0;
  while (dist > 0) {
    size_t best = dist;
    Tokens best_seq;
    for (size_t i = 0; i < cur.size(); ++i) {
      for (size_t len = 1; len <= kMaxShiftBlock && i + len <= cur.size(); ++len) {
        if (!occurs_in(ref, cur.begin() + i, cur.begin() + i + len)) break;
        const size_t rest = cur.size() - len;
        for (size_t dest = 0; dest <= rest; ++dest) {
          if (dest == i) continue;
          if (std::labs(static_cast<long>(dest) - static_cast<long>(i)) > kMaxShiftDistance) continue;
          Tokens cand = shifted(cur, i, len, dest);
          const size_t d = levenshtein(cand, ref);
          if (d < best) {
            best = d;
            best_seq = std::move(cand);
          }
        }
      }
    }
    if (best >= dist) break;
    cur = std::move(best_seq);
    dist = best;
    ++n_shifts;
  }
  if (shifts) *shifts = n_shifts;
  return dist + n_shifts;
}

EditResult ter(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs) {
  check_sizes(hyps, refs);
  EditResult r;
  for (size_t s = 0; s < hyps.size(); ++s) {
    size_t sh = 0;
    r.edits += ter_edits(hyps[s], refs[s], &sh);
    r.shifts += sh;
    r.ref_len += refs[s].size();
  }
  r.score = 100.0 * static_cast<double>(r.edits) / static_cast<double>(std::max<size_t>(1, r.ref_len));
  return r;
}

EditResult wer(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs) {
  check_sizes(hyps, refs);
  EditResult r;
  for (size_t s = 0; s < hyps.size(); ++s) {
    r.edits += levenshtein(hyps[s], refs[s]);
    r.ref_len += refs[s].size();
  }
  r.score = 100.0 * static_cast<double>(r.edits) / static_cast<double>(std::max<size_t>(1, r.ref_len));
  return r;
}

MetricReport evaluate(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs) {
  MetricReport rep;
  rep.bleu = bleu(hyps, refs);
  rep.nist = nist(hyps, refs);
  rep.ter = ter(hyps, refs);
  rep.wer = wer(hyps, refs);
  return rep;
}

std::string MetricReport::to_text() const {
  std::string out;
  out += "BLEU\t" + fmt("%.2f", bleu.score) + "\n";
  out += "NIST\t" + fmt("%.4f", nist.score) + "\n";
  out += "TER\t" + fmt("%.2f", ter.score) + "\n";
  out += "WER\t" + fmt("%.2f", wer.score) + "\n";
  out += "# bleu precisions";
  for (double p : bleu.precisions) out += ' ' + fmt("%.4f", p);
  out += " bp " + fmt("%.4f", bleu.brevity_penalty) + " hyp_len " + std::to_string(bleu.hyp_len) + " ref_len " +
         std::to_string(bleu.ref_len) + "\n";
  out += "# nist per-order";
  for (double p : nist.per_order) out += ' ' + fmt("%.4f", p);
  out += " bp " + fmt("%.4f", nist.brevity_factor) + "\n";
  out += "# ter edits " + std::to_string(ter.edits) + " shifts " + std::to_string(ter.shifts) + " ref_len " +
         std::to_string(ter.ref_len) + "\n";
  out += "# wer edits " + std::to_string(wer.edits) + " ref_len " + std::to_string(wer.ref_len) + "\n";
  return out;
}

std::vector<Tokens> lowercase_all(const std::vector<Tokens>& corpus) {
  std::vector<Tokens> out = corpus;
  for (auto& s : out) {
    for (auto& w : s) w = text::to_lower(w);
  }
  return out;
}

}  // namespace smt::metrics
