// pipeline.cpp
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

#include "smt/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace smt::pipeline {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCacheVersion = "smt-stage-cache 1";

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void log_line(const Logger& log, const std::string& msg) {
  if (log) log(msg);
}

// Runs a stage unless its key file matches the digest of its inputs and
// settings and all outputs exist.
class Stages {
 public:
  Stages(fs::path root, const Logger& log, ExperimentReport* report)
      : root_(std::move(root)), log_(log), report_(report) {}

  fs::path dir(const std::string& name) const { return root_ / name; }

  std::string key_of(const std::string& name, const std::string& settings,
                     const std::vector<std::string>& inputs) const {
    std::string material = std::string(kCacheVersion) + "\n" + name + "\n" + settings;
    for (const auto& in : inputs) material += "\ninput " + sha256_file(in);
    return sha256_hex(material);
  }

  void run(const std::string& name, const std::string& settings, const std::vector<std::string>& inputs,
           const std::vector<std::string>& outputs, const std::function<void(const fs::path&)>& body) {
    const fs::path d = dir(name);
    const auto t0 = std::chrono::steady_clock::now();
    StageRecord rec;
    rec.name = name;
    for (const auto& o : outputs) rec.artifacts.push_back((d / o).string());
    std::string key;
    try {
      key = key_of(name, settings, inputs);
      bool fresh = fs::exists(d / ".key");
      if (fresh) {
        std::ifstream in(d / ".key");
        std::string stored;
        std::getline(in, stored);
        fresh = stored == key;
      }
      for (const auto& o : outputs) fresh = fresh && fs::exists(d / o);
      if (fresh) {
        rec.skipped = true;
        log_line(log_, "stage " + name + ": up to date, skipped");
      } else {
        log_line(log_, "stage " + name + ": running");
        fs::create_directories(d);
        fs::remove(d / ".key");
        body(d);
        for (const auto& o : outputs) {
          if (!fs::exists(d / o)) throw Error("did not produce " + o);
        }
        std::ofstream out(d / ".key");
        out << key << '\n';
      }
    } catch (const std::exception& e) {
      throw Error("stage " + name + " failed: " + e.what());
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report_->stages.push_back(rec);
  }

 private:
  fs::path root_;
  const Logger& log_;
  ExperimentReport* report_;
};

struct SidePrep {
  bool truecase = false;
  bool lowercase = false;
  CaseModel case_model;
  const TransformLexicon* transform = nullptr;
  const FrequencyLexicon* compounds = nullptr;

  Sentence apply(Sentence s) const {
    if (transform) s = apply_transform(s, *transform);
    if (compounds) s = split_compounds(s, *compounds);
    if (truecase) s = truecase_sentence(s);
    if (lowercase) s = smt::lowercase(s);
    return s;
  }

  Sentence truecase_sentence(const Sentence& s) const { return smt::truecase(s, case_model); }
};

std::vector<Sentence> tokenize_file(const std::string& path, const std::string& lang) {
  std::vector<Sentence> out;
  for (const auto& line : read_lines(path)) out.push_back(tokenize(line, lang));
  return out;
}

std::vector<Tokens> tokens_of(const std::vector<Sentence>& s) {
  std::vector<Tokens> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(x.tokens);
  return out;
}

std::vector<Sentence> prep_all(const std::vector<Sentence>& in, const SidePrep& prep) {
  std::vector<Sentence> out;
  out.reserve(in.size());
  for (const auto& s : in) out.push_back(prep.apply(s));
  return out;
}

void write_alignments(const std::string& path, const std::vector<align::AlignmentMatrix>& a) {
  std::vector<std::string> lines;
  lines.reserve(a.size());
  for (const auto& m : a) lines.push_back(m.to_pharaoh());
  write_lines(path, lines);
}

std::vector<align::AlignmentMatrix> read_alignments(const std::string& path, const ParallelCorpus& corpus) {
  const auto lines = read_lines(path);
  if (lines.size() != corpus.size()) throw Error(path + ": expected one alignment per sentence pair");
  std::vector<align::AlignmentMatrix> out;
  out.reserve(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    out.push_back(align::AlignmentMatrix::from_pharaoh(lines[i], corpus[i].source.size(), corpus[i].target.size()));
  }
  return out;
}

struct Trained {
  fs::path prep_dir;
  std::string lm_path;
  std::string table_path;
  std::string reordering_path;  // empty when disabled
  std::string weights_path;
};

// The training and tuning stages shared by run and cascade.
Trained train_stages(const ExperimentConfig& cfg, Stages& stages, const Logger& log, ExperimentReport* report) {
  const Config& raw = cfg.raw;
  Trained t;
  const std::string& sl = cfg.source_lang;
  const std::string& tl = cfg.target_lang;

  // 1. Preprocessing.
  std::vector<std::string> inputs = {cfg.train_source, cfg.train_target, cfg.dev_source,
                                     cfg.dev_target,   cfg.test_source,  cfg.test_target};
  if (!cfg.asr_hypotheses.empty()) inputs.push_back(cfg.asr_hypotheses);
  if (!cfg.transform_lexicon.empty()) inputs.push_back(cfg.transform_lexicon);
  std::vector<std::string> outputs = {"train.src", "train.tgt", "dev.src", "dev.tgt", "test.src", "test.tgt"};
  if (!cfg.asr_hypotheses.empty()) outputs.push_back("test.asr");
  const std::string prep_settings =
      raw.section("preprocess") + "langs " + sl + " " + tl + "\nasr " + (cfg.asr_hypotheses.empty() ? "0" : "1");
  stages.run("01-preprocess", prep_settings, inputs, outputs, [&](const fs::path& d) {
    auto raw_src = tokenize_file(cfg.train_source, sl);
    auto raw_tgt = tokenize_file(cfg.train_target, tl);
    if (raw_src.size() != raw_tgt.size()) throw Error("training sides have different line counts");
    TransformLexicon transform;
    if (!cfg.transform_lexicon.empty()) transform = read_transform_lexicon(cfg.transform_lexicon);
    SidePrep src_prep;
    SidePrep tgt_prep;
    src_prep.lowercase = tgt_prep.lowercase = cfg.lowercase;
    if (!cfg.transform_lexicon.empty()) src_prep.transform = &transform;
    FrequencyLexicon src_vocab;
    if (cfg.compound_split) {
      std::vector<Sentence> transformed = raw_src;
      if (src_prep.transform) transformed = prep_all(raw_src, SidePrep{false, false, {}, &transform, nullptr});
      src_vocab = build_vocab(transformed);
      src_prep.compounds = &src_vocab;
    }
    if (cfg.truecase) {
      src_prep.truecase = tgt_prep.truecase = true;
      src_prep.case_model = train_truecaser(raw_src);
      tgt_prep.case_model = train_truecaser(raw_tgt);
      write_case_model((d / "truecase.src").string(), src_prep.case_model);
      write_case_model((d / "truecase.tgt").string(), tgt_prep.case_model);
    }
    ParallelCorpus train(sl, tl);
    for (size_t i = 0; i < raw_src.size(); ++i) {
      train.add(src_prep.apply(raw_src[i]).tokens, tgt_prep.apply(raw_tgt[i]).tokens);
    }
    const ParallelCorpus cleaned = clean_corpus(train, cfg.clean);
    log_line(log, "  training pairs: " + std::to_string(train.size()) + " read, " + std::to_string(cleaned.size()) +
                      " kept");
    if (cleaned.empty()) throw Error("no training pairs left after cleaning");
    write_parallel(cleaned, (d / "train.src").string(), (d / "train.tgt").string());
    auto dev_src = prep_all(tokenize_file(cfg.dev_source, sl), src_prep);
    auto dev_tgt = prep_all(tokenize_file(cfg.dev_target, tl), tgt_prep);
    auto test_src = prep_all(tokenize_file(cfg.test_source, sl), src_prep);
    auto test_tgt = prep_all(tokenize_file(cfg.test_target, tl), tgt_prep);
    if (dev_src.size() != dev_tgt.size()) throw Error("dev sides have different line counts");
    if (test_src.size() != test_tgt.size()) throw Error("test sides have different line counts");
    write_sentences((d / "dev.src").string(), dev_src);
    write_sentences((d / "dev.tgt").string(), dev_tgt);
    write_sentences((d / "test.src").string(), test_src);
    write_sentences((d / "test.tgt").string(), test_tgt);
    if (!cfg.asr_hypotheses.empty()) {
      auto asr = prep_all(tokenize_file(cfg.asr_hypotheses, sl), src_prep);
      if (asr.size() != test_src.size()) throw Error("ASR hypotheses and test source differ in length");
      write_sentences((d / "test.asr").string(), asr);
    }
  });
  t.prep_dir = stages.dir("01-preprocess");
  const std::string train_src = (t.prep_dir / "train.src").string();
  const std::string train_tgt = (t.prep_dir / "train.tgt").string();
  const std::string dev_src = (t.prep_dir / "dev.src").string();
  const std::string dev_tgt = (t.prep_dir / "dev.tgt").string();

  // 2. Language model.
  std::vector<std::string> lm_inputs = {train_tgt};
  for (const auto& p : cfg.lm_extra) lm_inputs.push_back(p);
  if (!cfg.lm_extra.empty()) lm_inputs.push_back(dev_tgt);
  stages.run("02-lm", raw.section("lm") + "lowercase " + (cfg.lowercase ? "1" : "0"), lm_inputs, {"lm.model"},
             [&](const fs::path& d) {
               auto build = [&](const std::vector<Sentence>& text, const std::string& name) {
                 const auto model = lm::estimate(lm::count_ngrams(text, cfg.lm_order), cfg.smoothing);
                 lm::save_arpa((d / name).string(), model);
                 return std::make_shared<lm::NGramLM>(model);
               };
               const auto main_text = read_sentences(train_tgt, tl);
               if (cfg.lm_extra.empty()) {
                 build(main_text, "lm.model");
                 return;
               }
               std::vector<std::shared_ptr<const lm::LanguageModel>> comps;
               std::vector<std::string> names;
               comps.push_back(build(main_text, "component0.arpa"));
               names.push_back("component0.arpa");
               SidePrep tgt_prep;
               tgt_prep.lowercase = cfg.lowercase;
               for (size_t i = 0; i < cfg.lm_extra.size(); ++i) {
                 const std::string name = "component" + std::to_string(i + 1) + ".arpa";
                 comps.push_back(build(prep_all(tokenize_file(cfg.lm_extra[i], tl), tgt_prep), name));
                 names.push_back(name);
               }
               const auto fit = lm::fit_interpolation(comps, read_sentences(dev_tgt, tl));
               lm::save_mixture((d / "lm.model").string(), names, fit.weights);
             });
  t.lm_path = (stages.dir("02-lm") / "lm.model").string();

  // 3. Directional word alignment.
  stages.run("03-align", raw.section("align"), {train_src, train_tgt},
             {"ttable.fwd", "ttable.rev", "aligned.fwd", "aligned.rev"}, [&](const fs::path& d) {
               const auto corpus = read_parallel(train_src, train_tgt, sl, tl);
               const auto swapped = corpus.swapped();
               std::vector<align::AlignmentMatrix> fwd, rev;
               if (cfg.align_model == "model1") {
                 const auto tf = align::train_model1(corpus, cfg.align_iterations);
                 const auto tr = align::train_model1(swapped, cfg.align_iterations);
                 tf.save((d / "ttable.fwd").string());
                 tr.save((d / "ttable.rev").string());
                 for (const auto& p : corpus.pairs()) {
                   fwd.push_back(align::to_matrix(align::viterbi_align(tf, p, align::Direction::kForward)));
                   rev.push_back(align::to_matrix(align::viterbi_align(tr, p, align::Direction::kReverse)));
                 }
               } else {
                 align::Model2Options opt;
                 opt.iterations = cfg.align_iterations;
                 const auto pf = align::train_model2_diag(corpus, opt);
                 const auto pr = align::train_model2_diag(swapped, opt);
                 pf.ttable.save((d / "ttable.fwd").string());
                 pr.ttable.save((d / "ttable.rev").string());
                 log_line(log, "  tension fwd " + fmt("%.3f", pf.tension) + " rev " + fmt("%.3f", pr.tension));
                 for (const auto& p : corpus.pairs()) {
                   fwd.push_back(align::to_matrix(align::viterbi_align(pf, p, align::Direction::kForward)));
                   rev.push_back(align::to_matrix(align::viterbi_align(pr, p, align::Direction::kReverse)));
                 }
               }
               write_alignments((d / "aligned.fwd").string(), fwd);
               write_alignments((d / "aligned.rev").string(), rev);
             });
  const fs::path align_dir = stages.dir("03-align");

  // 4. Symmetrization.
  stages.run("04-symmetrize", "heuristic " + std::string(align::heuristic_name(cfg.heuristic)),
             {train_src, train_tgt, (align_dir / "aligned.fwd").string(), (align_dir / "aligned.rev").string()},
             {"aligned.sym"}, [&](const fs::path& d) {
               const auto corpus = read_parallel(train_src, train_tgt, sl, tl);
               const auto fwd = read_alignments((align_dir / "aligned.fwd").string(), corpus);
               const auto rev = read_alignments((align_dir / "aligned.rev").string(), corpus);
               std::vector<align::AlignmentMatrix> sym;
               for (size_t i = 0; i < corpus.size(); ++i) sym.push_back(align::symmetrize(fwd[i], rev[i], cfg.heuristic));
               write_alignments((d / "aligned.sym").string(), sym);
             });
  const std::string sym_path = (stages.dir("04-symmetrize") / "aligned.sym").string();

  // 5. Phrase extraction and scoring.
  stages.run("05-phrases", raw.section("tmodel"),
             {train_src, train_tgt, sym_path, (align_dir / "ttable.fwd").string(), (align_dir / "ttable.rev").string()},
             {"phrase-table"}, [&](const fs::path& d) {
               const auto corpus = read_parallel(train_src, train_tgt, sl, tl);
               const auto sym = read_alignments(sym_path, corpus);
               std::vector<tmodel::PhrasePair> all;
               for (size_t i = 0; i < corpus.size(); ++i) {
                 auto p = tmodel::extract_phrases(corpus[i], sym[i], cfg.max_phrase_len);
                 all.insert(all.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
               }
               const auto tf = align::TTable::load((align_dir / "ttable.fwd").string());
               const auto tr = align::TTable::load((align_dir / "ttable.rev").string());
               const auto table = tmodel::score_phrase_table(all, tf, tr);
               log_line(log, "  phrase pairs: " + std::to_string(table.size()));
               table.save((d / "phrase-table").string());
             });
  t.table_path = (stages.dir("05-phrases") / "phrase-table").string();

  // 6. Lexicalized reordering.
  if (cfg.reordering != "none") {
    stages.run("06-reordering", raw.section("reordering") + raw.section("tmodel"), {train_src, train_tgt, sym_path},
               {"reordering-table"}, [&](const fs::path& d) {
                 const auto corpus = read_parallel(train_src, train_tgt, sl, tl);
                 const auto sym = read_alignments(sym_path, corpus);
                 const auto table =
                     tmodel::train_reordering(corpus, sym, tmodel::parse_scheme(cfg.reordering), cfg.max_phrase_len);
                 table.save((d / "reordering-table").string());
               });
    t.reordering_path = (stages.dir("06-reordering") / "reordering-table").string();
  }

  // 7. Tuning.
  std::vector<std::string> tune_inputs = {dev_src, dev_tgt, t.lm_path, t.table_path};
  if (!t.reordering_path.empty()) tune_inputs.push_back(t.reordering_path);
  if (!cfg.weights_file.empty()) tune_inputs.push_back(cfg.weights_file);
  const std::string tune_settings = raw.section("tune") + raw.section("decoder") + "eval-lowercase " +
                                    (cfg.eval_lowercase ? "1" : "0");
  stages.run("07-tune", tune_settings, tune_inputs, {"weights", "history"}, [&](const fs::path& d) {
    const auto initial =
        cfg.weights_file.empty() ? decoder::FeatureWeights::defaults() : decoder::FeatureWeights::load(cfg.weights_file);
    std::vector<std::string> history;
    if (!cfg.tune) {
      initial.save((d / "weights").string());
      write_lines((d / "history").string(), history);
      return;
    }
    const auto table = tmodel::PhraseTable::load(t.table_path);
    const auto model = lm::load_model(t.lm_path);
    tmodel::ReorderingTable reo;
    if (!t.reordering_path.empty()) reo = tmodel::ReorderingTable::load(t.reordering_path);
    decoder::Models models{&table, model.get(), t.reordering_path.empty() ? nullptr : &reo};
    TuneOptions opt;
    opt.iterations = cfg.tune_iterations;
    opt.nbest = cfg.tune_nbest;
    opt.lowercase = cfg.eval_lowercase;
    const auto result = tune_weights(models, cfg.decoder, tokens_of(read_sentences(dev_src, sl)),
                                     tokens_of(read_sentences(dev_tgt, tl)), initial, opt, log);
    for (double b : result.bleu_history) {
      char buf[64];
      auto r = std::to_chars(buf, buf + sizeof(buf), b);
      history.emplace_back(buf, r.ptr);
    }
    result.weights.save((d / "weights").string());
    write_lines((d / "history").string(), history);
  });
  t.weights_path = (stages.dir("07-tune") / "weights").string();
  report->weights = decoder::FeatureWeights::load(t.weights_path);
  for (const auto& l : read_lines((stages.dir("07-tune") / "history").string())) {
    report->tuning_history.push_back(std::stod(l));
  }
  return t;
}

struct LoadedModels {
  tmodel::PhraseTable table;
  std::shared_ptr<const lm::LanguageModel> lm;
  tmodel::ReorderingTable reordering;
  bool has_reordering = false;

  explicit LoadedModels(const Trained& t)
      : table(tmodel::PhraseTable::load(t.table_path)), lm(lm::load_model(t.lm_path)) {
    if (!t.reordering_path.empty()) {
      reordering = tmodel::ReorderingTable::load(t.reordering_path);
      has_reordering = true;
    }
  }

  decoder::Models models() const { return {&table, lm.get(), has_reordering ? &reordering : nullptr}; }
};

std::vector<Sentence> translate_all(const decoder::Decoder& dec, const std::vector<Sentence>& src) {
  std::vector<Sentence> out;
  out.reserve(src.size());
  for (const auto& s : src) out.push_back(Sentence{dec.decode(s.tokens).target, {}});
  return out;
}

double corpus_bleu(const std::vector<Sentence>& hyps, const std::vector<Tokens>& refs, bool lowercase) {
  auto h = tokens_of(hyps);
  if (lowercase) return metrics::bleu(metrics::lowercase_all(h), metrics::lowercase_all(refs)).score;
  return metrics::bleu(h, refs).score;
}

}  // namespace

std::string ExperimentReport::score_lines() const {
  std::string out;
  for (const auto& s : scores) out += s.metric + "\t" + s.condition + "\t" + fmt("%.4f", s.value) + "\n";
  return out;
}

std::string ExperimentReport::to_text() const {
  std::string out = "stages:\n";
  for (const auto& s : stages) {
    out += "  " + s.name + (s.skipped ? "  skipped" : "  ran") + "  " + fmt("%.2fs", s.seconds) + "\n";
  }
  if (!tuning_history.empty()) {
    out += "dev BLEU during tuning:";
    for (double b : tuning_history) out += " " + fmt("%.2f", b);
    out += "\n";
  }
  out += "weights:\n";
  std::istringstream w(weights.to_string());
  std::string line;
  while (std::getline(w, line)) out += "  " + line + "\n";
  out += "scores:\n" + score_lines();
  return out;
}

bool ExperimentReport::all_skipped() const {
  for (const auto& s : stages) {
    if (!s.skipped) return false;
  }
  return !stages.empty();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const Logger& log) {
  ExperimentReport report;
  fs::create_directories(cfg.output_dir);
  Stages stages(cfg.output_dir, log, &report);
  const Trained t = train_stages(cfg, stages, log, &report);
  const std::string test_src = (t.prep_dir / "test.src").string();
  const std::string test_tgt = (t.prep_dir / "test.tgt").string();

  std::vector<std::string> dec_inputs = {test_src, t.lm_path, t.table_path, t.weights_path};
  if (!t.reordering_path.empty()) dec_inputs.push_back(t.reordering_path);
  stages.run("08-decode", cfg.raw.section("decoder"), dec_inputs, {"test.hyp"}, [&](const fs::path& d) {
    const LoadedModels m(t);
    const decoder::Decoder dec(m.models(), decoder::FeatureWeights::load(t.weights_path), cfg.decoder);
    write_sentences((d / "test.hyp").string(), translate_all(dec, read_sentences(test_src, cfg.source_lang)));
  });
  const std::string hyp_path = (stages.dir("08-decode") / "test.hyp").string();

  // The cascade decodes two or three versions of the test source.
  std::vector<std::string> eval_inputs = {hyp_path, test_tgt};
  if (cfg.cascade) {
    eval_inputs.insert(eval_inputs.end(), dec_inputs.begin(), dec_inputs.end());
    if (fs::exists(t.prep_dir / "test.asr")) eval_inputs.push_back((t.prep_dir / "test.asr").string());
  }
  const std::string eval_settings =
      cfg.raw.section("evaluate") + cfg.raw.section("decoder") + "cascade " + (cfg.cascade ? "1" : "0");
  stages.run("09-evaluate", eval_settings, eval_inputs, {"scores.tsv"}, [&](const fs::path& d) {
    auto hyps = tokens_of(read_sentences(hyp_path));
    auto refs = tokens_of(read_sentences(test_tgt));
    if (cfg.eval_lowercase) {
      hyps = metrics::lowercase_all(hyps);
      refs = metrics::lowercase_all(refs);
    }
    std::vector<std::string> lines;
    for (const auto& m : cfg.metrics) {
      double v = 0;
      if (m == "bleu") v = metrics::bleu(hyps, refs).score;
      if (m == "nist") v = metrics::nist(hyps, refs).score;
      if (m == "ter") v = metrics::ter(hyps, refs).score;
      if (m == "wer") v = metrics::wer(hyps, refs).score;
      std::string name = text::to_lower(m);
      for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      lines.push_back(name + "\ttest\t" + fmt("%.4f", v));
    }
    if (cfg.cascade) {
      const LoadedModels lm(t);
      const decoder::Decoder dec(lm.models(), decoder::FeatureWeights::load(t.weights_path), cfg.decoder);
      std::optional<std::vector<Sentence>> asr;
      if (fs::exists(t.prep_dir / "test.asr")) asr = read_sentences((t.prep_dir / "test.asr").string());
      const auto cascade = cascade_eval(dec, read_sentences(test_src), tokens_of(read_sentences(test_tgt)), asr,
                                        cfg.eval_lowercase);
      std::istringstream in(cascade.score_lines());
      std::string l;
      while (std::getline(in, l)) lines.push_back(l);
    }
    write_lines((d / "scores.tsv").string(), lines);
  });
  for (const auto& line : read_lines((stages.dir("09-evaluate") / "scores.tsv").string())) {
    const auto a = line.find('\t');
    const auto b = line.find('\t', a + 1);
    if (a == std::string::npos || b == std::string::npos) continue;
    report.scores.push_back({line.substr(0, a), line.substr(a + 1, b - a - 1), std::stod(line.substr(b + 1))});
  }
  std::ofstream(fs::path(cfg.output_dir) / "report.tsv") << report.score_lines();
  {
    std::ofstream timing(fs::path(cfg.output_dir) / "timings.txt");
    for (const auto& s : report.stages) timing << s.name << '\t' << (s.skipped ? "skipped" : "ran") << '\t'
                                               << fmt("%.3f", s.seconds) << '\n';
  }
  return report;
}

ExperimentReport run_training(const ExperimentConfig& cfg, const Logger& log) {
  ExperimentReport report;
  fs::create_directories(cfg.output_dir);
  Stages stages(cfg.output_dir, log, &report);
  train_stages(cfg, stages, log, &report);
  return report;
}

CascadeReport cascade_eval(const decoder::Decoder& decoder, const std::vector<Sentence>& source,
                           const std::vector<Tokens>& refs, const std::optional<std::vector<Sentence>>& asr,
                           bool lowercase) {
  if (source.size() != refs.size()) throw Error("cascade test source and references differ in length");
  CascadeReport rep;
  rep.rows.push_back({"Original", corpus_bleu(translate_all(decoder, source), refs, lowercase), true, {}});
  std::vector<Sentence> normalized;
  normalized.reserve(source.size());
  for (const auto& s : source) normalized.push_back(asr_normalize(s));
  rep.rows.push_back({"Normalized", corpus_bleu(translate_all(decoder, normalized), refs, lowercase), true, {}});
  if (asr) {
    if (asr->size() != refs.size()) throw Error("ASR hypotheses and references differ in length");
    rep.rows.push_back({"ASR output", corpus_bleu(translate_all(decoder, *asr), refs, lowercase), true, {}});
  } else {
    rep.rows.push_back({"ASR output", 0.0, false, "no ASR hypotheses supplied"});
  }
  return rep;
}

std::string CascadeReport::to_text() const {
  std::string out = "Condition\tBLEU\n";
  for (const auto& r : rows) out += r.condition + "\t" + (r.present ? fmt("%.2f", r.bleu) : "n/a (" + r.note + ")") + "\n";
  return out;
}

std::string CascadeReport::score_lines() const {
  std::string out;
  for (const auto& r : rows) {
    if (r.present) out += "BLEU\t" + r.condition + "\t" + fmt("%.4f", r.bleu) + "\n";
  }
  return out;
}

CascadeReport run_cascade(const ExperimentConfig& cfg, const std::string& asr_path, const Logger& log) {
  ExperimentReport report;
  fs::create_directories(cfg.output_dir);
  Stages stages(cfg.output_dir, log, &report);
  const Trained t = train_stages(cfg, stages, log, &report);
  const LoadedModels m(t);
  const decoder::Decoder dec(m.models(), decoder::FeatureWeights::load(t.weights_path), cfg.decoder);
  std::optional<std::vector<Sentence>> asr;
  const std::string prepared_asr = (t.prep_dir / "test.asr").string();
  if (!asr_path.empty()) {
    if (!fs::exists(asr_path)) {
      log_line(log, "ASR file " + asr_path + " not found; condition omitted");
    } else {
      SidePrep prep;
      prep.lowercase = cfg.lowercase;
      asr = prep_all(tokenize_file(asr_path, cfg.source_lang), prep);
    }
  } else if (fs::exists(prepared_asr)) {
    asr = read_sentences(prepared_asr);
  }
  return cascade_eval(dec, read_sentences((t.prep_dir / "test.src").string()),
                      tokens_of(read_sentences((t.prep_dir / "test.tgt").string())), asr, cfg.eval_lowercase);
}

}  // namespace smt::pipeline
