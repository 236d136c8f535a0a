// config.cpp
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

#include <openssl/evp.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "smt/pipeline.hpp"

namespace smt::pipeline {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "general.output_dir",       "general.source_lang",     "general.target_lang",
      "corpus.train_source",      "corpus.train_target",     "corpus.dev_source",
      "corpus.dev_target",        "corpus.test_source",      "corpus.test_target",
      "corpus.asr_hypotheses",    "preprocess.truecase",     "preprocess.lowercase",
      "preprocess.compound_split", "preprocess.transform_lexicon", "preprocess.clean_max_len",
      "preprocess.clean_max_ratio", "lm.order",              "lm.smoothing",
      "lm.extra_corpora",         "align.model",             "align.iterations",
      "align.heuristic",          "tmodel.max_phrase_len",   "reordering.scheme",
      "decoder.stack_size",       "decoder.beam",            "decoder.distortion_limit",
      "decoder.table_limit",      "decoder.weights",         "tune.enabled",
      "tune.iterations",          "tune.nbest",              "evaluate.metrics",
      "evaluate.lowercase",       "evaluate.cascade"};
  return keys;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& base_dir) {
  Config c;
  c.base_dir_ = base_dir.empty() ? "." : base_dir;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.find('.') == std::string::npos) {
      throw Error("config line " + std::to_string(lineno) + ": key '" + key + "' needs a section prefix");
    }
    c.values_[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const fs::path dir = fs::path(path).parent_path();
  return parse(ss.str(), dir.empty() ? "." : dir.string());
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int Config::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  int out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw Error("config " + key + ": not an integer: " + v);
  return out;
}

double Config::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  double out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw Error("config " + key + ": not a number: " + v);
  return out;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = text::to_lower(get(key));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error("config " + key + ": not a boolean: " + v);
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(get(key));
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string Config::get_path(const std::string& key) const {
  const std::string v = get(key);
  if (v.empty()) return v;
  const fs::path p(v);
  return p.is_absolute() ? v : (fs::path(base_dir_) / p).lexically_normal().string();
}

std::string Config::section(const std::string& name) const {
  std::string out;
  const std::string prefix = name + ".";
  for (const auto& [k, v] : values_) {
    if (k.rfind(prefix, 0) == 0) out += k + " = " + v + "\n";
  }
  return out;
}

ExperimentConfig ExperimentConfig::from(const Config& c) {
  for (const auto& [k, v] : c.values()) {
    if (!known_keys().count(k)) throw Error("unknown config key '" + k + "'");
  }
  ExperimentConfig e;
  e.raw = c;
  e.output_dir = c.has("general.output_dir") ? c.get_path("general.output_dir") : c.base_dir() + "/work";
  e.source_lang = c.get("general.source_lang", e.source_lang);
  e.target_lang = c.get("general.target_lang", e.target_lang);

  auto required = [&](const std::string& key) {
    const std::string p = c.get_path(key);
    if (p.empty()) throw Error("config lacks " + key);
    if (!fs::exists(p)) throw Error(key + ": no such file " + p);
    return p;
  };
  auto optional_file = [&](const std::string& key) {
    const std::string p = c.get_path(key);
    if (!p.empty() && !fs::exists(p)) throw Error(key + ": no such file " + p);
    return p;
  };
  e.train_source = required("corpus.train_source");
  e.train_target = required("corpus.train_target");
  e.dev_source = required("corpus.dev_source");
  e.dev_target = required("corpus.dev_target");
  e.test_source = required("corpus.test_source");
  e.test_target = required("corpus.test_target");
  e.asr_hypotheses = optional_file("corpus.asr_hypotheses");

  e.truecase = c.get_bool("preprocess.truecase", e.truecase);
  e.lowercase = c.get_bool("preprocess.lowercase", e.lowercase);
  e.compound_split = c.get_bool("preprocess.compound_split", e.compound_split);
  e.transform_lexicon = optional_file("preprocess.transform_lexicon");
  e.clean.max_len = static_cast<size_t>(c.get_int("preprocess.clean_max_len", static_cast<int>(e.clean.max_len)));
  e.clean.max_ratio = c.get_double("preprocess.clean_max_ratio", e.clean.max_ratio);
  if (e.truecase && e.lowercase) throw Error("preprocess.truecase and preprocess.lowercase are exclusive");

  e.lm_order = c.get_int("lm.order", e.lm_order);
  if (e.lm_order < 1 || e.lm_order > lm::kMaxOrder) throw Error("lm.order out of range");
  if (c.has("lm.smoothing")) e.smoothing = lm::parse_smoothing(c.get("lm.smoothing"));
  for (const auto& p : c.get_list("lm.extra_corpora")) {
    const std::string full = fs::path(p).is_absolute() ? p : (fs::path(c.base_dir()) / p).lexically_normal().string();
    if (!fs::exists(full)) throw Error("lm.extra_corpora: no such file " + full);
    e.lm_extra.push_back(full);
  }

  e.align_model = c.get("align.model", e.align_model);
  if (e.align_model != "model1" && e.align_model != "model2") throw Error("align.model must be model1 or model2");
  e.align_iterations = c.get_int("align.iterations", e.align_iterations);
  if (e.align_iterations < 1) throw Error("align.iterations must be positive");
  if (c.has("align.heuristic")) e.heuristic = align::parse_heuristic(c.get("align.heuristic"));

  e.max_phrase_len = static_cast<size_t>(c.get_int("tmodel.max_phrase_len", static_cast<int>(e.max_phrase_len)));
  if (e.max_phrase_len < 1) throw Error("tmodel.max_phrase_len must be at least 1");
  e.reordering = c.get("reordering.scheme", e.reordering);
  if (e.reordering != "none") tmodel::parse_scheme(e.reordering);

  e.decoder.stack_size = static_cast<size_t>(c.get_int("decoder.stack_size", static_cast<int>(e.decoder.stack_size)));
  e.decoder.beam = c.get_double("decoder.beam", e.decoder.beam);
  e.decoder.distortion_limit = c.get_int("decoder.distortion_limit", e.decoder.distortion_limit);
  e.decoder.table_limit =
      static_cast<size_t>(c.get_int("decoder.table_limit", static_cast<int>(e.decoder.table_limit)));
  e.weights_file = optional_file("decoder.weights");

  e.tune = c.get_bool("tune.enabled", e.tune);
  e.tune_iterations = c.get_int("tune.iterations", e.tune_iterations);
  e.tune_nbest = static_cast<size_t>(c.get_int("tune.nbest", static_cast<int>(e.tune_nbest)));
  if (e.tune_nbest < 1) throw Error("tune.nbest must be at least 1");

  if (c.has("evaluate.metrics")) e.metrics = c.get_list("evaluate.metrics");
  for (const auto& m : e.metrics) {
    if (m != "bleu" && m != "nist" && m != "ter" && m != "wer") throw Error("unknown metric '" + m + "'");
  }
  e.eval_lowercase = c.get_bool("evaluate.lowercase", e.eval_lowercase);
  e.cascade = c.get_bool("evaluate.cascade", e.cascade);
  return e;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) { return from(Config::load(path)); }

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

}  // namespace smt::pipeline
