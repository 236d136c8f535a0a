// arpa.cpp
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
// ARPA import/export and mixture files.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "smt/lm.hpp"

namespace smt::lm {

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& s, size_t lineno) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error("ARPA line " + std::to_string(lineno) + ": bad number '" + s + "'");
  }
  return v;
}

std::string join_words(const Vocabulary& vocab, const NGram& g) {
  std::string key;
  for (size_t i = 0; i < g.size(); ++i) {
    if (i) key += ' ';
    key += vocab.word(g[i]);
  }
  return key;
}

}  // namespace

void write_arpa(std::ostream& out, const NGramLM& lm) {
  out << "# smt-lm smoothing=" << smoothing_name(lm.smoothing_) << "\n";
  for (int k = 1; k <= lm.order_; ++k) {
    if (lm.discounts_[k - 1] > 0) out << "# discount " << k << ' ' << format_number(lm.discounts_[k - 1]) << "\n";
    if (lm.wb_fallback_[k - 1]) out << "# wb-fallback " << k << "\n";
  }
  out << "\n\\data\\\n";
  for (int k = 1; k <= lm.order_; ++k) out << "ngram " << k << '=' << lm.tables_[k - 1].size() << "\n";
  for (int k = 1; k <= lm.order_; ++k) {
    out << "\n\\" << k << "-grams:\n";
    std::vector<std::pair<std::string, const NGramLM::Entry*>> rows;
    rows.reserve(lm.tables_[k - 1].size());
    for (const auto& [g, e] : lm.tables_[k - 1]) rows.emplace_back(join_words(lm.vocab_, g), &e);
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [key, e] : rows) {
      out << format_number(e->log10_prob) << '\t' << key;
      if (e->has_backoff) out << '\t' << format_number(e->log10_backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

NGramLM read_arpa(std::istream& in) {
  NGramLM lm;
  std::vector<size_t> declared;
  std::string line;
  size_t lineno = 0;
  int section = -1;  // -1 header comments, 0 \data\, k for \k-grams:
  bool ended = false;
  std::vector<std::pair<int, double>> discounts;
  std::vector<int> fallbacks;

  while (std::getline(in, line)) {
    ++lineno;
    std::string_view l = text::chomp(line);
    if (l.empty()) continue;
    if (section == -1) {
      if (l == "\\data\\") {
        section = 0;
        continue;
      }
      std::istringstream ss{std::string(l)};
      std::string hash, tag;
      ss >> hash >> tag;
      if (hash != "#") continue;
      if (tag == "smt-lm") {
        std::string kv;
        while (ss >> kv) {
          if (kv.rfind("smoothing=", 0) == 0) lm.smoothing_ = parse_smoothing(kv.substr(10));
        }
      } else if (tag == "discount") {
        int k;
        std::string v;
        ss >> k >> v;
        discounts.emplace_back(k, parse_number(v, lineno));
      } else if (tag == "wb-fallback") {
        int k;
        ss >> k;
        fallbacks.push_back(k);
      }
      continue;
    }
    if (l == "\\end\\") {
      ended = true;
      break;
    }
    if (l.front() == '\\') {
      int k = 0;
      if (std::sscanf(std::string(l).c_str(), "\\%d-grams:", &k) != 1 || k < 1 ||
          k > static_cast<int>(declared.size())) {
        throw Error("ARPA line " + std::to_string(lineno) + ": unexpected section " + std::string(l));
      }
      section = k;
      continue;
    }
    if (section == 0) {
      int k = 0;
      unsigned long long n = 0;
      if (std::sscanf(std::string(l).c_str(), "ngram %d=%llu", &k, &n) != 2 || k != static_cast<int>(declared.size()) + 1) {
        throw Error("ARPA line " + std::to_string(lineno) + ": bad count line");
      }
      declared.push_back(n);
      continue;
    }
    // n-gram entry: logp w1 .. wk [bow]
    std::vector<std::string> fields;
    {
      std::istringstream ss{std::string(l)};
      std::string f;
      while (ss >> f) fields.push_back(f);
    }
    const size_t k = static_cast<size_t>(section);
    if (fields.size() != k + 1 && fields.size() != k + 2) {
      throw Error("ARPA line " + std::to_string(lineno) + ": expected " + std::to_string(k) + " words");
    }
    if (lm.tables_.size() < declared.size()) lm.tables_.assign(declared.size(), {});
    NGram g;
    for (size_t i = 1; i <= k; ++i) g.push_back(lm.vocab_.insert(fields[i]));
    NGramLM::Entry e;
    e.log10_prob = parse_number(fields[0], lineno);
    if (fields.size() == k + 2) {
      e.log10_backoff = parse_number(fields[k + 1], lineno);
      e.has_backoff = true;
    }
    lm.tables_[k - 1][g] = e;
  }
  if (!ended) throw Error("ARPA input lacks \\end\\");
  if (declared.empty()) throw Error("ARPA input lacks \\data\\ counts");
  lm.order_ = static_cast<int>(declared.size());
  lm.tables_.resize(declared.size());
  for (size_t k = 0; k < declared.size(); ++k) {
    if (lm.tables_[k].size() != declared[k]) {
      throw Error("ARPA " + std::to_string(k + 1) + "-gram count mismatch: declared " +
                  std::to_string(declared[k]) + ", found " + std::to_string(lm.tables_[k].size()));
    }
  }
  lm.discounts_.assign(lm.order_, 0.0);
  lm.wb_fallback_.assign(lm.order_, false);
  for (auto [k, d] : discounts) {
    if (k >= 1 && k <= lm.order_) lm.discounts_[k - 1] = d;
  }
  for (int k : fallbacks) {
    if (k >= 1 && k <= lm.order_) lm.wb_fallback_[k - 1] = true;
  }
  if (!lm.tables_[0].contains(NGram{Vocabulary::kUnkId})) {
    lm.tables_[0][NGram{Vocabulary::kUnkId}] = NGramLM::Entry{-99.0, 0.0, false};
  }
  return lm;
}

void save_arpa(const std::string& path, const NGramLM& lm) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  write_arpa(out, lm);
}

NGramLM load_arpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_arpa(in);
}

void save_mixture(const std::string& path, const std::vector<std::string>& arpa_paths,
                  const std::vector<double>& weights) {
  if (arpa_paths.size() != weights.size()) throw Error("mixture needs one weight per model");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "# smt-lm-mixture\n";
  for (size_t i = 0; i < weights.size(); ++i) out << format_number(weights[i]) << '\t' << arpa_paths[i] << '\n';
}

std::shared_ptr<const LanguageModel> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::string first;
  std::getline(in, first);
  if (first.rfind("# smt-lm-mixture", 0) != 0) {
    in.clear();
    in.seekg(0);
    return std::make_shared<NGramLM>(read_arpa(in));
  }
  std::vector<std::shared_ptr<const LanguageModel>> components;
  std::vector<double> weights;
  std::string line;
  const std::string dir = path.find('/') == std::string::npos ? "" : path.substr(0, path.rfind('/') + 1);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) throw Error(path + ": expected weight<TAB>path");
    weights.push_back(parse_number(line.substr(0, tab), 0));
    std::string p = line.substr(tab + 1);
    if (!p.empty() && p[0] != '/') p = dir + p;
    components.push_back(std::make_shared<NGramLM>(load_arpa(p)));
  }
  return std::make_shared<InterpolatedLM>(std::move(components), std::move(weights));
}

}  // namespace smt::lm
