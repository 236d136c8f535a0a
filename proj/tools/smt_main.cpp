// smt_main.cpp
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
// Command-line front end.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "CLI11.hpp"
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

std::vector<std::string> input_lines(const std::string& path) {
  if (!path.empty() && path != "-") return read_lines(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(std::cin, line)) out.push_back(std::string(text::chomp(line)));
  return out;
}

void output_lines(const std::string& path, const std::vector<std::string>& lines) {
  if (!path.empty() && path != "-") {
    write_lines(path, lines);
    return;
  }
  for (const auto& l : lines) std::cout << l << '\n';
}

std::vector<Sentence> input_sentences(const std::string& path) {
  std::vector<Sentence> out;
  for (const auto& l : input_lines(path)) out.push_back(Sentence{text::split_ws(l), {}});
  return out;
}

void output_sentences(const std::string& path, const std::vector<Sentence>& s) {
  std::vector<std::string> lines;
  lines.reserve(s.size());
  for (const auto& x : s) lines.push_back(text::join(x.tokens, " "));
  output_lines(path, lines);
}

// Adds -i/-o to a line-filter subcommand.
struct Io {
  std::string in;
  std::string out;
  void add(CLI::App* app) {
    app->add_option("-i,--input", in, "input file (default stdin)");
    app->add_option("-o,--output", out, "output file (default stdout)");
  }
};

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<align::AlignmentMatrix> load_alignments(const std::string& path, const ParallelCorpus& corpus) {
  const auto lines = read_lines(path);
  if (lines.size() != corpus.size()) throw Error(path + ": expected one alignment per sentence pair");
  std::vector<align::AlignmentMatrix> out;
  for (size_t i = 0; i < lines.size(); ++i) {
    out.push_back(align::AlignmentMatrix::from_pharaoh(lines[i], corpus[i].source.size(), corpus[i].target.size()));
  }
  return out;
}

std::vector<Tokens> token_lines(const std::string& path) {
  std::vector<Tokens> out;
  for (const auto& l : read_lines(path)) out.push_back(text::split_ws(l));
  return out;
}

std::function<void(const std::string&)> stderr_logger() {
  return [](const std::string& m) { std::cerr << m << '\n'; };
}

struct DecoderOpts {
  std::string table, lm, reordering, weights;
  decoder::DecoderConfig config;
  void add(CLI::App* app) {
    app->add_option("--table", table, "phrase table")->required();
    app->add_option("--lm", lm, "ARPA model or mixture file")->required();
    app->add_option("--reordering", reordering, "reordering table");
    app->add_option("--weights", weights, "feature weights");
    app->add_option("--stack-size", config.stack_size, "histogram limit, 0 = unlimited");
    app->add_option("--beam", config.beam, "relative beam threshold, 0 = off");
    app->add_option("--distortion-limit", config.distortion_limit, "negative = unlimited");
    app->add_option("--table-limit", config.table_limit, "options per span, 0 = unlimited");
  }
};

// Owns loaded models for a decoder.
struct LoadedDecoder {
  tmodel::PhraseTable table;
  std::shared_ptr<const lm::LanguageModel> lm;
  tmodel::ReorderingTable reo;
  std::unique_ptr<decoder::Decoder> dec;

  explicit LoadedDecoder(const DecoderOpts& o) {
    table = tmodel::PhraseTable::load(o.table);
    lm = lm::load_model(o.lm);
    const bool has_reo = !o.reordering.empty();
    if (has_reo) reo = tmodel::ReorderingTable::load(o.reordering);
    const auto w = o.weights.empty() ? decoder::FeatureWeights::defaults() : decoder::FeatureWeights::load(o.weights);
    dec = std::make_unique<decoder::Decoder>(decoder::Models{&table, lm.get(), has_reo ? &reo : nullptr}, w, o.config);
  }
};

service::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::vector<std::string> split_colon(const std::string& s, size_t min_parts) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ':')) parts.push_back(cur);
  if (parts.size() < min_parts) throw Error("expected " + std::to_string(min_parts) + " ':'-separated fields in '" + s + "'");
  return parts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phrase-based statistical machine translation toolkit"};
  app.require_subcommand(1);

  // corpus
  Io tok_io;
  std::string tok_lang;
  auto* tok = app.add_subcommand("tokenize", "split raw text into tokens");
  tok_io.add(tok);
  tok->add_option("--lang", tok_lang, "language tag");
  tok->callback([&] {
    std::vector<Sentence> out;
    for (const auto& l : input_lines(tok_io.in)) out.push_back(tokenize(l, tok_lang));
    output_sentences(tok_io.out, out);
  });

  std::string cl_src, cl_tgt, cl_out_src, cl_out_tgt;
  CleanOptions cl_opt;
  auto* clean = app.add_subcommand("clean", "drop empty, long and badly proportioned pairs");
  clean->add_option("--src", cl_src)->required();
  clean->add_option("--tgt", cl_tgt)->required();
  clean->add_option("--out-src", cl_out_src)->required();
  clean->add_option("--out-tgt", cl_out_tgt)->required();
  clean->add_option("--max-len", cl_opt.max_len);
  clean->add_option("--max-ratio", cl_opt.max_ratio);
  clean->callback([&] {
    const auto corpus = read_parallel(cl_src, cl_tgt, "src", "tgt");
    const auto kept = clean_corpus(corpus, cl_opt);
    write_parallel(kept, cl_out_src, cl_out_tgt);
    std::cerr << "kept " << kept.size() << " of " << corpus.size() << " pairs\n";
  });

  Io tct_io;
  auto* tct = app.add_subcommand("truecase-train", "learn a truecasing model from tokenized text");
  tct_io.add(tct);
  tct->callback([&] {
    if (tct_io.out.empty()) throw Error("truecase-train needs -o");
    write_case_model(tct_io.out, train_truecaser(input_sentences(tct_io.in)));
  });

  Io tc_io;
  std::string tc_model;
  auto* tc = app.add_subcommand("truecase", "apply a truecasing model");
  tc_io.add(tc);
  tc->add_option("--model", tc_model)->required();
  tc->callback([&] {
    const auto model = read_case_model(tc_model);
    std::vector<Sentence> out;
    for (const auto& s : input_sentences(tc_io.in)) out.push_back(truecase(s, model));
    output_sentences(tc_io.out, out);
  });

  Io lc_io;
  auto* lc = app.add_subcommand("lowercase", "lowercase tokenized text");
  lc_io.add(lc);
  lc->callback([&] {
    std::vector<Sentence> out;
    for (const auto& s : input_sentences(lc_io.in)) out.push_back(lowercase(s));
    output_sentences(lc_io.out, out);
  });

  Io nm_io;
  auto* nm = app.add_subcommand("normalize", "drop punctuation and lowercase (ASR-style text)");
  nm_io.add(nm);
  nm->callback([&] {
    std::vector<Sentence> out;
    for (const auto& s : input_sentences(nm_io.in)) out.push_back(asr_normalize(s));
    output_sentences(nm_io.out, out);
  });

  Io vc_io;
  auto* vc = app.add_subcommand("vocab", "word frequency lexicon");
  vc_io.add(vc);
  vc->callback([&] {
    const auto lex = build_vocab(input_sentences(vc_io.in));
    if (!vc_io.out.empty() && vc_io.out != "-") {
      write_frequency_lexicon(vc_io.out, lex);
      return;
    }
    for (const auto& [w, c] : lex.counts) std::cout << w << '\t' << c << '\n';
  });

  Io sc_io;
  std::string sc_lex;
  CompoundOptions sc_opt;
  auto* sc = app.add_subcommand("split-compounds", "split words into frequent known parts");
  sc_io.add(sc);
  sc->add_option("--lexicon", sc_lex, "frequency lexicon")->required();
  sc->add_option("--min-part-len", sc_opt.min_part_len);
  sc->add_option("--max-parts", sc_opt.max_parts);
  sc->callback([&] {
    const auto lex = read_frequency_lexicon(sc_lex);
    std::vector<Sentence> out;
    for (const auto& s : input_sentences(sc_io.in)) out.push_back(split_compounds(s, lex, sc_opt));
    output_sentences(sc_io.out, out);
  });

  Io tr_io;
  std::string tr_lex;
  auto* tr = app.add_subcommand("transform", "replace words through a key/value lexicon");
  tr_io.add(tr);
  tr->add_option("--lexicon", tr_lex)->required();
  tr->callback([&] {
    const auto lex = read_transform_lexicon(tr_lex);
    std::vector<Sentence> out;
    for (const auto& s : input_sentences(tr_io.in)) out.push_back(apply_transform(s, lex));
    output_sentences(tr_io.out, out);
  });

  // lm
  auto* lmc = app.add_subcommand("lm", "n-gram language models");
  lmc->require_subcommand(1);
  Io lmcount_io;
  int lm_order = 5;
  std::string lm_smoothing = "kneser-ney";
  auto* lm_count = lmc->add_subcommand("count", "n-gram counts");
  lmcount_io.add(lm_count);
  lm_count->add_option("--order", lm_order);
  lm_count->callback([&] {
    const auto counts = lm::count_ngrams(input_sentences(lmcount_io.in), lm_order);
    if (!lmcount_io.out.empty() && lmcount_io.out != "-") {
      std::ofstream out(lmcount_io.out);
      lm::write_counts(out, counts);
    } else {
      lm::write_counts(std::cout, counts);
    }
  });
  Io lmtrain_io;
  auto* lm_train = lmc->add_subcommand("train", "estimate an ARPA model");
  lmtrain_io.add(lm_train);
  lm_train->add_option("--order", lm_order);
  lm_train->add_option("--smoothing", lm_smoothing, "witten-bell or kneser-ney");
  lm_train->callback([&] {
    const auto model = lm::estimate(lm::count_ngrams(input_sentences(lmtrain_io.in), lm_order),
                                    lm::parse_smoothing(lm_smoothing));
    if (!lmtrain_io.out.empty() && lmtrain_io.out != "-") {
      lm::save_arpa(lmtrain_io.out, model);
    } else {
      lm::write_arpa(std::cout, model);
    }
  });
  std::string ppl_model, ppl_in;
  auto* lm_ppl = lmc->add_subcommand("perplexity", "perplexity of tokenized text");
  lm_ppl->add_option("--model", ppl_model)->required();
  lm_ppl->add_option("-i,--input", ppl_in);
  lm_ppl->callback([&] {
    const auto model = lm::load_model(ppl_model);
    const auto st = lm::perplexity(*model, input_sentences(ppl_in));
    std::cout << "perplexity\t" << format_double(st.perplexity) << "\nlog_prob\t" << format_double(st.log_prob)
              << "\ntokens\t" << st.tokens << "\noov\t" << st.oov << '\n';
  });
  std::vector<std::string> mix_models;
  std::string mix_heldout, mix_out;
  auto* lm_mix = lmc->add_subcommand("interpolate", "fit mixture weights on held-out text");
  lm_mix->add_option("--models", mix_models, "ARPA files")->required()->delimiter(',');
  lm_mix->add_option("--heldout", mix_heldout)->required();
  lm_mix->add_option("-o,--output", mix_out, "mixture file")->required();
  lm_mix->callback([&] {
    std::vector<std::shared_ptr<const lm::LanguageModel>> comps;
    for (const auto& p : mix_models) comps.push_back(std::make_shared<lm::NGramLM>(lm::load_arpa(p)));
    const auto fit = lm::fit_interpolation(comps, read_sentences(mix_heldout));
    lm::save_mixture(mix_out, mix_models, fit.weights);
    for (size_t i = 0; i < fit.weights.size(); ++i) std::cout << mix_models[i] << '\t' << format_double(fit.weights[i]) << '\n';
  });

  // align
  auto* al = app.add_subcommand("align", "word alignment");
  al->require_subcommand(1);
  std::string al_src, al_tgt, al_prefix, al_model = "model2";
  int al_iter = 5;
  auto* al_train = al->add_subcommand("train", "EM training in both directions");
  al_train->add_option("--src", al_src)->required();
  al_train->add_option("--tgt", al_tgt)->required();
  al_train->add_option("--model", al_model, "model1 or model2");
  al_train->add_option("--iterations", al_iter);
  al_train->add_option("--out-prefix", al_prefix)->required();
  al_train->callback([&] {
    const auto corpus = read_parallel(al_src, al_tgt, "src", "tgt");
    for (int dir = 0; dir < 2; ++dir) {
      const auto c = dir == 0 ? corpus : corpus.swapped();
      const std::string tag = dir == 0 ? "fwd" : "rev";
      std::vector<double> ll;
      if (al_model == "model1") {
        align::train_model1(c, al_iter, &ll).save(al_prefix + "." + tag + ".ttable");
      } else if (al_model == "model2") {
        align::Model2Options opt;
        opt.iterations = al_iter;
        const auto p = align::train_model2_diag(c, opt, &ll);
        p.ttable.save(al_prefix + "." + tag + ".ttable");
        std::ofstream(al_prefix + "." + tag + ".params") << "tension\t" << p.tension << "\np0\t" << p.p0 << '\n';
      } else {
        throw Error("unknown alignment model " + al_model);
      }
      std::cerr << tag << " log-likelihood:";
      for (double x : ll) std::cerr << ' ' << format_double(x);
      std::cerr << '\n';
    }
  });
  std::string vt_ttable, vt_dir = "fwd", vt_out;
  double vt_tension = -1, vt_p0 = 0.08;
  auto* al_vit = al->add_subcommand("viterbi", "best directional alignment per pair");
  al_vit->add_option("--src", al_src)->required();
  al_vit->add_option("--tgt", al_tgt)->required();
  al_vit->add_option("--ttable", vt_ttable)->required();
  al_vit->add_option("--direction", vt_dir, "fwd or rev");
  al_vit->add_option("--tension", vt_tension, "diagonal prior tension (omit for model 1)");
  al_vit->add_option("--p0", vt_p0);
  al_vit->add_option("-o,--output", vt_out);
  al_vit->callback([&] {
    const auto corpus = read_parallel(al_src, al_tgt, "src", "tgt");
    const auto dir = vt_dir == "rev" ? align::Direction::kReverse : align::Direction::kForward;
    align::Model2Params params;
    params.ttable = align::TTable::load(vt_ttable);
    params.tension = vt_tension;
    params.p0 = vt_p0;
    std::vector<std::string> lines;
    for (const auto& p : corpus.pairs()) {
      const auto a = vt_tension < 0 ? align::viterbi_align(params.ttable, p, dir) : align::viterbi_align(params, p, dir);
      lines.push_back(align::to_matrix(a).to_pharaoh());
    }
    output_lines(vt_out, lines);
  });
  std::string sy_fwd, sy_rev, sy_heur = "grow-diag-final-and", sy_out;
  auto* al_sym = al->add_subcommand("symmetrize", "merge directional alignments");
  al_sym->add_option("--src", al_src)->required();
  al_sym->add_option("--tgt", al_tgt)->required();
  al_sym->add_option("--fwd", sy_fwd)->required();
  al_sym->add_option("--rev", sy_rev)->required();
  al_sym->add_option("--heuristic", sy_heur);
  al_sym->add_option("-o,--output", sy_out);
  al_sym->callback([&] {
    const auto corpus = read_parallel(al_src, al_tgt, "src", "tgt");
    const auto h = align::parse_heuristic(sy_heur);
    const auto f = load_alignments(sy_fwd, corpus);
    const auto r = load_alignments(sy_rev, corpus);
    std::vector<std::string> lines;
    for (size_t i = 0; i < corpus.size(); ++i) lines.push_back(align::symmetrize(f[i], r[i], h).to_pharaoh());
    output_lines(sy_out, lines);
  });

  // tmodel
  auto* tm = app.add_subcommand("tmodel", "phrase and reordering tables");
  tm->require_subcommand(1);
  std::string tm_src, tm_tgt, tm_align, tm_out, tm_extract, tm_tf, tm_tr, tm_scheme = "msd";
  size_t tm_len = tmodel::kDefaultMaxPhraseLen;
  auto* tm_ex = tm->add_subcommand("extract", "consistent phrase pairs: 'src ||| tgt ||| links'");
  tm_ex->add_option("--src", tm_src)->required();
  tm_ex->add_option("--tgt", tm_tgt)->required();
  tm_ex->add_option("--alignment", tm_align)->required();
  tm_ex->add_option("--max-phrase-len", tm_len);
  tm_ex->add_option("-o,--output", tm_out);
  tm_ex->callback([&] {
    const auto corpus = read_parallel(tm_src, tm_tgt, "src", "tgt");
    const auto al = load_alignments(tm_align, corpus);
    std::vector<std::string> lines;
    for (size_t i = 0; i < corpus.size(); ++i) {
      for (const auto& p : tmodel::extract_phrases(corpus[i], al[i], tm_len)) {
        std::string links;
        for (const auto& [a, b] : p.links) links += (links.empty() ? "" : " ") + std::to_string(a) + "-" + std::to_string(b);
        lines.push_back(text::join(p.source) + " ||| " + text::join(p.target) + " ||| " + links);
      }
    }
    output_lines(tm_out, lines);
  });
  auto* tm_sc = tm->add_subcommand("score", "phrase table from extracted pairs");
  tm_sc->add_option("--extract", tm_extract)->required();
  tm_sc->add_option("--ttable-fwd", tm_tf, "t(source|target)")->required();
  tm_sc->add_option("--ttable-rev", tm_tr, "t(target|source)")->required();
  tm_sc->add_option("-o,--output", tm_out)->required();
  tm_sc->callback([&] {
    std::vector<tmodel::PhrasePair> pairs;
    for (const auto& line : read_lines(tm_extract)) {
      const size_t a = line.find(" ||| ");
      const size_t b = line.find(" ||| ", a + 5);
      if (a == std::string::npos || b == std::string::npos) throw Error("bad extract line: " + line);
      tmodel::PhrasePair p;
      p.source = text::split_ws(line.substr(0, a));
      p.target = text::split_ws(line.substr(a + 5, b - a - 5));
      const auto links = align::AlignmentMatrix::from_pharaoh(line.substr(b + 5), p.source.size(), p.target.size());
      p.links = links.points();
      pairs.push_back(std::move(p));
    }
    tmodel::score_phrase_table(pairs, align::TTable::load(tm_tf), align::TTable::load(tm_tr)).save(tm_out);
  });
  auto* tm_re = tm->add_subcommand("reorder", "lexicalized reordering table");
  tm_re->add_option("--src", tm_src)->required();
  tm_re->add_option("--tgt", tm_tgt)->required();
  tm_re->add_option("--alignment", tm_align)->required();
  tm_re->add_option("--scheme", tm_scheme, "msd or hier-mslr");
  tm_re->add_option("--max-phrase-len", tm_len);
  tm_re->add_option("-o,--output", tm_out)->required();
  tm_re->callback([&] {
    const auto corpus = read_parallel(tm_src, tm_tgt, "src", "tgt");
    tmodel::train_reordering(corpus, load_alignments(tm_align, corpus), tmodel::parse_scheme(tm_scheme), tm_len)
        .save(tm_out);
  });

  // decode
  DecoderOpts dopts;
  Io dec_io;
  size_t nbest = 0;
  auto* dec = app.add_subcommand("decode", "translate tokenized sentences, one per line");
  dopts.add(dec);
  dec_io.add(dec);
  dec->add_option("--nbest", nbest, "write K-best lists instead of translations");
  dec->callback([&] {
    LoadedDecoder ld(dopts);
    std::vector<std::string> lines;
    size_t idx = 0;
    for (const auto& s : input_sentences(dec_io.in)) {
      if (nbest == 0) {
        lines.push_back(ld.dec->decode(s.tokens).text());
      } else {
        for (const auto& t : ld.dec->nbest(s.tokens, nbest)) lines.push_back(decoder::format_nbest(idx, t));
      }
      ++idx;
    }
    output_lines(dec_io.out, lines);
  });

  // eval
  std::string ev_metric = "bleu", ev_hyp, ev_ref;
  bool ev_report = false, ev_lower = false;
  int ev_order = 4;
  auto* ev = app.add_subcommand("eval", "score hypotheses against references");
  ev->add_option("--metric", ev_metric, "bleu, nist, ter or wer");
  ev->add_flag("--report", ev_report, "all metrics as one report");
  ev->add_flag("--lowercase", ev_lower, "lowercase both sides first");
  ev->add_option("--bleu-order", ev_order);
  ev->add_option("hyp", ev_hyp)->required();
  ev->add_option("ref", ev_ref)->required();
  ev->callback([&] {
    auto h = token_lines(ev_hyp);
    auto r = token_lines(ev_ref);
    if (ev_lower) {
      h = metrics::lowercase_all(h);
      r = metrics::lowercase_all(r);
    }
    if (ev_report) {
      std::cout << metrics::evaluate(h, r).to_text();
      return;
    }
    char buf[128];
    if (ev_metric == "bleu") {
      const auto b = metrics::bleu(h, r, ev_order);
      std::snprintf(buf, sizeof(buf), "BLEU = %.2f", b.score);
      std::cout << buf << "\n# precisions";
      for (double p : b.precisions) std::cout << ' ' << format_double(p);
      std::cout << " bp " << format_double(b.brevity_penalty) << " hyp_len " << b.hyp_len << " ref_len " << b.ref_len
                << '\n';
    } else if (ev_metric == "nist") {
      const auto n = metrics::nist(h, r);
      std::snprintf(buf, sizeof(buf), "NIST = %.4f", n.score);
      std::cout << buf << "\n# per-order";
      for (double p : n.per_order) std::cout << ' ' << format_double(p);
      std::cout << " bp " << format_double(n.brevity_factor) << '\n';
    } else if (ev_metric == "ter" || ev_metric == "wer") {
      const auto e = ev_metric == "ter" ? metrics::ter(h, r) : metrics::wer(h, r);
      std::snprintf(buf, sizeof(buf), "%s = %.2f", ev_metric == "ter" ? "TER" : "WER", e.score);
      std::cout << buf << "\n# edits " << e.edits << " shifts " << e.shifts << " ref_len " << e.ref_len << '\n';
    } else {
      throw Error("unknown metric " + ev_metric);
    }
  });

  // exp
  auto* ex = app.add_subcommand("exp", "experiments");
  ex->require_subcommand(1);
  std::string ex_config, ex_output, ex_asr;
  bool ex_quiet = false;
  auto load_exp = [&] {
    auto raw = pipeline::Config::load(ex_config);
    auto cfg = pipeline::ExperimentConfig::from(raw);
    if (!ex_output.empty()) cfg.output_dir = ex_output;
    return cfg;
  };
  auto exp_logger = [&]() -> pipeline::Logger {
    if (ex_quiet) return {};
    return stderr_logger();
  };
  auto* ex_run = ex->add_subcommand("run", "train, tune, decode and evaluate");
  ex_run->add_option("config", ex_config)->required();
  ex_run->add_option("--output", ex_output, "override general.output_dir");
  ex_run->add_flag("-q,--quiet", ex_quiet);
  ex_run->callback([&] {
    const auto report = pipeline::run_experiment(load_exp(), exp_logger());
    std::cout << report.to_text();
  });
  auto* ex_tune = ex->add_subcommand("tune", "run the stages up to tuning and print the weights");
  ex_tune->add_option("config", ex_config)->required();
  ex_tune->add_option("--output", ex_output);
  ex_tune->add_flag("-q,--quiet", ex_quiet);
  ex_tune->callback([&] {
    const auto report = pipeline::run_training(load_exp(), exp_logger());
    std::cout << report.to_text();
  });
  auto* ex_cas = ex->add_subcommand("cascade", "original vs normalized vs ASR input");
  ex_cas->add_option("config", ex_config)->required();
  ex_cas->add_option("--output", ex_output);
  ex_cas->add_option("--asr", ex_asr, "ASR hypotheses of the test source");
  ex_cas->add_flag("-q,--quiet", ex_quiet);
  ex_cas->callback([&] {
    const auto rep = pipeline::run_cascade(load_exp(), ex_asr, exp_logger());
    std::cout << rep.to_text() << rep.score_lines();
  });

  // serve
  std::string sv_config;
  std::vector<std::string> sv_stubs, sv_remotes, sv_decoders;
  service::ServiceConfig sv_cli;
  std::string sv_host;
  int sv_port = -1, sv_timeout = -1, sv_hops = -1;
  auto* sv = app.add_subcommand("serve", "run the translation relay");
  sv->add_option("--config", sv_config, "service config file");
  sv->add_option("--host", sv_host);
  sv->add_option("--port", sv_port);
  sv->add_option("--timeout-ms", sv_timeout);
  sv->add_option("--max-hops", sv_hops);
  sv->add_option("--stub", sv_stubs, "id:src:tgt:behaviour");
  sv->add_option("--remote", sv_remotes, "id:src:tgt:host:port");
  sv->add_option("--decoder", sv_decoders, "id:src:tgt:experiment-output-dir");
  sv->callback([&] {
    service::ServiceConfig cfg;
    if (!sv_config.empty()) cfg = service::ServiceConfig::from_file(sv_config, cfg);
    cfg = service::ServiceConfig::from_env(cfg);
    if (!sv_host.empty()) cfg.host = sv_host;
    if (sv_port >= 0) cfg.port = sv_port;
    if (sv_timeout > 0) cfg.timeout_ms = sv_timeout;
    if (sv_hops > 0) cfg.max_hops = sv_hops;
    service::Registry registry;
    for (const auto& s : sv_stubs) {
      const auto p = split_colon(s, 4);
      std::string behaviour = p[3];
      for (size_t i = 4; i < p.size(); ++i) behaviour += ":" + p[i];
      registry.register_engine({p[0], p[1], p[2], service::EngineKind::kStub, behaviour, "ok"},
                               service::make_stub(behaviour));
    }
    for (const auto& s : sv_remotes) {
      const auto p = split_colon(s, 5);
      const std::string addr = p[3] + ":" + p[4];
      registry.register_engine({p[0], p[1], p[2], service::EngineKind::kRemote, addr, "ok"},
                               service::make_remote(addr, p[1], p[2], cfg.timeout_ms));
    }
    std::vector<std::shared_ptr<LoadedDecoder>> decoders;
    for (const auto& s : sv_decoders) {
      const auto p = split_colon(s, 4);
      const std::string dir = p[3];
      DecoderOpts o;
      o.table = dir + "/05-phrases/phrase-table";
      o.lm = dir + "/02-lm/lm.model";
      if (std::ifstream(dir + "/06-reordering/reordering-table")) o.reordering = dir + "/06-reordering/reordering-table";
      if (std::ifstream(dir + "/07-tune/weights")) o.weights = dir + "/07-tune/weights";
      auto ld = std::make_shared<LoadedDecoder>(o);
      decoders.push_back(ld);
      auto mu = std::make_shared<std::mutex>();
      auto engine = std::make_shared<service::FunctionEngine>([ld, mu](const std::string& text) {
        std::lock_guard lock(*mu);
        std::string out;
        std::istringstream in(text);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
          if (!first) out += '\n';
          first = false;
          out += ld->dec->decode(tokenize(line).tokens).text();
        }
        return out;
      });
      registry.register_engine({p[0], p[1], p[2], service::EngineKind::kDecoder, dir, "ok"}, engine);
    }
    service::Server server(registry, cfg);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "relay listening on " << cfg.host << ":" << cfg.port << " with " << registry.size() << " engines\n";
    server.run_blocking();
    g_server = nullptr;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
