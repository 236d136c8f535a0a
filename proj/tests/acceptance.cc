// acceptance.cc
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
// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails. A single criterion can be selected by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "smt/align.hpp"
#include "smt/corpus.hpp"
#include "smt/decoder.hpp"
#include "smt/lm.hpp"
#include "smt/metrics.hpp"
#include "smt/pipeline.hpp"
#include "smt/service.hpp"
#include "smt/tmodel.hpp"

namespace {

using namespace smt;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// 1
Outcome metric_identities() {
  const auto t0 = Clock::now();
  std::mt19937 rng(101);
  const auto vocab = testing::make_vocab("w", 12);
  std::uniform_int_distribution<int> size(1, 12);
  for (int c = 0; c < 100; ++c) {
    const int k = size(rng);
    std::vector<Tokens> h, r;
    for (int i = 0; i < k; ++i) {
      h.push_back(testing::random_tokens(&rng, vocab, 1, 15));
      r.push_back(testing::random_tokens(&rng, vocab, 1, 15));
    }
    if (metrics::bleu(h, h).score != 100.0) return {false, "bleu(h,h) != 100 on corpus " + std::to_string(c)};
    if (metrics::ter(h, h).score != 0.0) return {false, "ter(h,h) != 0 on corpus " + std::to_string(c)};
    if (metrics::wer(h, h).score != 0.0) return {false, "wer(h,h) != 0 on corpus " + std::to_string(c)};
    const double ter = metrics::ter(h, r).score;
    const double wer = metrics::wer(h, r).score;
    if (ter > wer) return {false, "ter > wer on corpus " + std::to_string(c)};
  }
  const double s = seconds_since(t0);
  return {s < 10.0, "100 corpora, " + fmt("%.2fs", s)};
}

// 2
Outcome bleu_hand_case() {
  const auto b = metrics::bleu({{"the", "cat"}}, {{"the", "cat", "sat"}}, 2);
  const double expected = 100.0 * std::exp(1.0 - 3.0 / 2.0);
  const bool ok = std::fabs(b.score - 60.65) <= 0.01 && std::fabs(oracle::bleu({{"the", "cat"}}, {{"the", "cat", "sat"}}, 2) - expected) < 1e-9;
  return {ok, "BLEU = " + fmt("%.4f", b.score)};
}

// 3
Outcome lm_normalization() {
  const auto t0 = Clock::now();
  std::mt19937 rng(303);
  const auto vocab = testing::make_vocab("v", 9);
  const auto corpus = testing::random_sentences(&rng, vocab, 50, 1, 7);
  std::vector<std::string> words = vocab;
  words.push_back(lm::kEos);
  size_t checked = 0;
  double worst = 0;
  for (auto smoothing : {lm::Smoothing::kWittenBell, lm::Smoothing::kKneserNey}) {
    for (int order = 1; order <= 3; ++order) {
      const auto model = lm::estimate(lm::count_ngrams(corpus, order), smoothing);
      // Histories seen in the padded training text, every length < order.
      std::set<Tokens> histories;
      for (const auto& s : corpus) {
        Tokens padded(order - 1, lm::kBos);
        padded.insert(padded.end(), s.tokens.begin(), s.tokens.end());
        padded.push_back(lm::kEos);
        for (size_t i = order - 1; i < padded.size(); ++i) {
          for (int len = 0; len < order; ++len) histories.insert(Tokens(padded.begin() + (i - len), padded.begin() + i));
        }
      }
      for (const auto& h : histories) {
        const double mass = oracle::distribution_mass(model, h, words);
        worst = std::max(worst, std::fabs(mass - 1.0));
        ++checked;
      }
    }
  }
  const double s = seconds_since(t0);
  return {worst <= 1e-9 && s < 5.0,
          std::to_string(checked) + " histories, max |sum-1| = " + fmt("%.2e", worst) + ", " + fmt("%.2fs", s)};
}

// 4
Outcome lm_interpolation() {
  std::mt19937 rng(404);
  const auto va = testing::make_vocab("a", 10);
  const auto vb = testing::make_vocab("b", 10);
  std::vector<std::string> vab = va;
  vab.insert(vab.end(), vb.begin(), vb.begin() + 5);
  const auto train_a = testing::random_sentences(&rng, va, 80, 2, 8);
  const auto train_b = testing::random_sentences(&rng, vab, 80, 2, 8);
  auto a = std::make_shared<lm::NGramLM>(lm::estimate(lm::count_ngrams(train_a, 3), lm::Smoothing::kKneserNey));
  auto b = std::make_shared<lm::NGramLM>(lm::estimate(lm::count_ngrams(train_b, 3), lm::Smoothing::kWittenBell));
  std::vector<std::shared_ptr<const lm::LanguageModel>> comps = {a, b};
  // Held-out sets: mixed domains, mostly A, mostly B.
  std::vector<std::vector<Sentence>> heldouts;
  for (double share : {0.5, 0.9, 0.1}) {
    std::vector<Sentence> h;
    std::bernoulli_distribution pick_a(share);
    for (int i = 0; i < 60; ++i) {
      h.push_back(Sentence{testing::random_tokens(&rng, pick_a(rng) ? va : vab, 2, 8), {}});
    }
    heldouts.push_back(std::move(h));
  }
  std::string detail;
  bool ok = true;
  for (const auto& h : heldouts) {
    const auto fit = lm::fit_interpolation(comps, h);
    const lm::InterpolatedLM mix(comps, fit.weights);
    const double pm = lm::perplexity(mix, h).perplexity;
    const double pa = lm::perplexity(*a, h).perplexity;
    const double pb = lm::perplexity(*b, h).perplexity;
    if (pm > std::min(pa, pb) + 1e-9) ok = false;
    detail += fmt("mix %.4f", pm) + fmt(" vs min %.4f; ", std::min(pa, pb));
  }
  return {ok, detail};
}

// 5
Outcome alignment_em() {
  ParallelCorpus corpus;
  corpus.add({"das", "haus"}, {"the", "house"});
  corpus.add({"das", "buch"}, {"the", "book"});
  corpus.add({"ein", "buch"}, {"a", "book"});
  std::vector<double> ll;
  const auto t = align::train_model1(corpus, 10, &ll);
  const double p = t.prob("das", "the");
  const auto ref = oracle::model1_em({{{"das", "haus"}, {"the", "house"}},
                                      {{"das", "buch"}, {"the", "book"}},
                                      {{"ein", "buch"}, {"a", "book"}}},
                                     10);
  const double q = ref.at("the").at("das");
  bool monotone = true;
  for (size_t i = 1; i < ll.size(); ++i) monotone = monotone && ll[i] >= ll[i - 1];
  return {p > 0.9 && monotone && std::fabs(p - q) < 1e-9,
          "t(das|the) = " + fmt("%.6f", p) + " (independent EM " + fmt("%.6f", q) + "), log-likelihood " +
              (monotone ? "non-decreasing" : "DECREASED")};
}

// 6
Outcome symmetrization_lattice() {
  const auto t0 = Clock::now();
  using align::Heuristic;
  auto subset = [](const align::AlignmentMatrix& a, const align::AlignmentMatrix& b) {
    for (const auto& [i, j] : a.points()) {
      if (!b.contains(i, j)) return false;
    }
    return true;
  };
  size_t cases = 0;
  for (size_t n = 1; n <= 3; ++n) {
    for (size_t m = 1; m <= 3; ++m) {
      size_t fwd_count = 1, rev_count = 1;
      for (size_t i = 0; i < n; ++i) fwd_count *= m + 1;
      for (size_t j = 0; j < m; ++j) rev_count *= n + 1;
      for (size_t fc = 0; fc < fwd_count; ++fc) {
        align::DirectionalAlignment fwd{align::Direction::kForward, n, m, std::vector<size_t>(n)};
        size_t x = fc;
        for (size_t i = 0; i < n; ++i, x /= m + 1) fwd.links[i] = x % (m + 1) == m ? align::kNullLink : x % (m + 1);
        for (size_t rc = 0; rc < rev_count; ++rc) {
          align::DirectionalAlignment rev{align::Direction::kReverse, n, m, std::vector<size_t>(m)};
          size_t y = rc;
          for (size_t j = 0; j < m; ++j, y /= n + 1) rev.links[j] = y % (n + 1) == n ? align::kNullLink : y % (n + 1);
          const auto inter = align::symmetrize(fwd, rev, Heuristic::kIntersection);
          const auto gd = align::symmetrize(fwd, rev, Heuristic::kGrowDiag);
          const auto gdfa = align::symmetrize(fwd, rev, Heuristic::kGrowDiagFinalAnd);
          const auto gdf = align::symmetrize(fwd, rev, Heuristic::kGrowDiagFinal);
          const auto uni = align::symmetrize(fwd, rev, Heuristic::kUnion);
          // Set operations checked directly.
          const auto f = align::to_matrix(fwd);
          const auto r = align::to_matrix(rev);
          for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < m; ++j) {
              if (inter.contains(i, j) != (f.contains(i, j) && r.contains(i, j)) ||
                  uni.contains(i, j) != (f.contains(i, j) || r.contains(i, j))) {
                return {false, "intersection/union wrong at " + std::to_string(n) + "x" + std::to_string(m)};
              }
            }
          }
          if (!subset(inter, gd) || !subset(gd, gdfa) || !subset(gdfa, gdf) || !subset(gdf, uni) ||
              !subset(gd, gdf)) {
            return {false, "chain broken: fwd " + f.to_pharaoh() + " rev " + r.to_pharaoh()};
          }
          ++cases;
        }
      }
    }
  }
  const double s = seconds_since(t0);
  return {s < 30.0, std::to_string(cases) + " directional pairs, " + fmt("%.2fs", s)};
}

// 7
Outcome phrase_extraction() {
  std::mt19937 rng(707);
  std::uniform_int_distribution<size_t> dim(1, 6);
  std::uniform_real_distribution<double> density(0.1, 0.6);
  for (int c = 0; c < 500; ++c) {
    const size_t n = dim(rng), m = dim(rng);
    const auto links = oracle::random_links(&rng, n, m, density(rng));
    align::AlignmentMatrix a(n, m);
    for (const auto& [i, j] : links) a.set(i, j);
    SentencePair pair{Sentence{testing::make_vocab("s", n), {}}, Sentence{testing::make_vocab("t", m), {}}};
    std::set<oracle::Box> got;
    for (const auto& p : tmodel::extract_phrases(pair, a, 6)) got.insert(p.box());
    if (got != oracle::consistent_boxes(n, m, links, 6)) return {false, "mismatch on alignment " + a.to_pharaoh()};
  }
  return {true, "500 random alignments up to 6x6"};
}

// 8
Outcome decoder_optimality() {
  const auto t0 = Clock::now();
  std::mt19937 rng(808);
  const char* schemes[] = {"none", "msd", "hier-mslr"};
  double worst = 0;
  size_t derivations = 0;
  for (int s = 0; s < 50; ++s) {
    const auto model = testing::make_toy_model(1000 + s, schemes[s % 3]);
    const auto weights = s < 5 ? decoder::FeatureWeights::defaults() : testing::random_weights(&rng);
    const decoder::Decoder dec(model.models(), weights, testing::exact_config(2));
    const Tokens src = testing::random_tokens(&rng, model.source_vocab, 1, 6);
    const auto got = dec.decode(src);
    const auto want = oracle::exhaustive_decode(src, model.table, *model.lm,
                                                model.reordering ? &*model.reordering : nullptr, weights, 2);
    derivations += want.derivations;
    worst = std::max(worst, std::fabs(got.score - want.score));
    if (std::fabs(got.score - want.score) > 1e-9) {
      return {false, "sentence '" + text::join(src) + "' (" + schemes[s % 3] + "): decoder " + fmt("%.12f", got.score) +
                         " vs exhaustive " + fmt("%.12f", want.score)};
    }
  }
  const double sec = seconds_since(t0);
  return {sec < 60.0, "50 sentences, " + std::to_string(derivations) + " derivations enumerated, max diff " +
                          fmt("%.1e", worst) + ", " + fmt("%.2fs", sec)};
}

pipeline::ExperimentConfig toy_config(const std::string& out) {
  auto cfg = pipeline::ExperimentConfig::load(testing::source_dir() + "/data/toy/experiment.ini");
  cfg.output_dir = out;
  return cfg;
}

// 9
Outcome cascade() {
  const auto cfg = toy_config(testing::scratch_dir("acceptance-cascade"));
  const auto rep = pipeline::run_cascade(cfg, "");
  if (rep.rows.size() != 3) return {false, std::to_string(rep.rows.size()) + " rows"};
  const char* names[] = {"Original", "Normalized", "ASR output"};
  for (size_t i = 0; i < 3; ++i) {
    if (rep.rows[i].condition != names[i] || !rep.rows[i].present) return {false, "row " + std::to_string(i) + " wrong"};
  }
  const bool ok = rep.rows[0].bleu >= rep.rows[1].bleu;
  return {ok, "Original " + fmt("%.2f", rep.rows[0].bleu) + ", Normalized " + fmt("%.2f", rep.rows[1].bleu) +
                  ", ASR output " + fmt("%.2f", rep.rows[2].bleu)};
}

// 10
Outcome tuning() {
  pipeline::ExperimentReport runs[2];
  for (int i = 0; i < 2; ++i) {
    runs[i] = pipeline::run_training(toy_config(testing::scratch_dir("acceptance-tune-" + std::to_string(i))));
  }
  const auto& h = runs[0].tuning_history;
  if (h.empty()) return {false, "no tuning history"};
  bool ascent = h.back() >= h.front();
  for (size_t i = 1; i < h.size(); ++i) ascent = ascent && h[i] >= h[i - 1];
  const bool same = runs[0].weights.w == runs[1].weights.w && runs[0].tuning_history == runs[1].tuning_history;
  return {ascent && same, "dev BLEU " + fmt("%.2f", h.front()) + " -> " + fmt("%.2f", h.back()) +
                              (same ? ", identical across runs" : ", runs DIFFER")};
}

// 11
Outcome routing() {
  using namespace service;
  ServiceConfig cfg;
  Registry two;
  two.register_engine({"pl-en", "pl", "en", EngineKind::kStub, "prefix:en", "ok"}, make_stub("prefix:en"));
  two.register_engine({"en-de", "en", "de", EngineKind::kStub, "upper", "ok"}, make_stub("upper"));
  const auto r = translate(two, {"q1", "pl", "de", "text", "dom"}, cfg);
  const auto want = oracle::shortest_route(two.list(), "pl", "de", cfg.max_hops);
  bool ok = r.status == "ok" && r.route.size() == 2 && want == std::vector<std::string>{"pl-en", "en-de"};
  if (ok) {
    ok = r.route[0].engine == "pl-en" && r.route[1].engine == "en-de" && r.route[0].input == "dom" &&
         r.route[1].input == r.route[0].output && r.translation == r.route[1].output && !r.route[0].output.empty();
  }
  Registry one;
  one.register_engine({"pl-en", "pl", "en", EngineKind::kStub, "identity", "ok"}, make_stub("identity"));
  const auto r2 = translate(one, {"q2", "pl", "de", "text", "dom"}, cfg);
  ok = ok && r2.status == "no_route" && oracle::shortest_route(one.list(), "pl", "de", cfg.max_hops).empty();
  return {ok, "pl->de via " + (r.route.size() == 2 ? r.route[0].engine + "," + r.route[1].engine : std::string("?")) +
                  " -> '" + r.translation + "'; single engine: " + r2.status};
}

// 12
Outcome end_to_end() {
  const std::string out = testing::scratch_dir("acceptance-e2e");
  const std::string cmd = testing::cli_path() + " exp run " + testing::source_dir() + "/data/toy/experiment.ini --output " +
                          out + " -q > " + out + "/stdout";
  const auto t0 = Clock::now();
  if (std::system((cmd + "1.txt").c_str()) != 0) return {false, "first run failed"};
  const double first = seconds_since(t0);
  if (std::system((cmd + "2.txt").c_str()) != 0) return {false, "second run failed"};
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string run1 = slurp(out + "/stdout1.txt");
  const std::string run2 = slurp(out + "/stdout2.txt");
  const std::string report = slurp(out + "/report.tsv");
  bool metrics_ok = true;
  for (const char* m : {"BLEU\ttest\t", "NIST\ttest\t", "TER\ttest\t", "WER\ttest\t"}) {
    metrics_ok = metrics_ok && run1.find(m) != std::string::npos && report.find(m) != std::string::npos;
  }
  size_t ran = 0, skipped = 0;
  for (size_t p = 0; (p = run1.find("  ran  ", p)) != std::string::npos; ++p) ++ran;
  for (size_t p = 0; (p = run2.find("  skipped  ", p)) != std::string::npos; ++p) ++skipped;
  const bool none_ran = run2.find("  ran  ") == std::string::npos;
  const bool ok = metrics_ok && ran == 9 && skipped == 9 && none_ran && first < 120.0;
  return {ok, std::to_string(ran) + " stages ran in " + fmt("%.2fs", first) + ", re-run skipped " +
                  std::to_string(skipped) + (metrics_ok ? ", four metrics reported" : ", metrics MISSING")};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"metric identities", metric_identities},
      {"BLEU hand case", bleu_hand_case},
      {"LM normalization", lm_normalization},
      {"LM interpolation", lm_interpolation},
      {"alignment EM", alignment_em},
      {"symmetrization lattice", symmetrization_lattice},
      {"phrase extraction", phrase_extraction},
      {"decoder optimality", decoder_optimality},
      {"cascade", cascade},
      {"tuning", tuning},
      {"routing", routing},
      {"end-to-end", end_to_end},
  };
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (size_t i = 0; i < all.size(); ++i) {
    if (only && static_cast<int>(i + 1) != only) continue;
    Outcome o;
    try {
      o = all[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2zu %-24s %s  %s\n", i + 1, all[i].name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
