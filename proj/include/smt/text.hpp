// text.hpp
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
// UTF-8 helpers and the character classes used by the tokenizer.

#ifndef SMT_TEXT_HPP_
#define SMT_TEXT_HPP_

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace smt {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace text {

// Decodes UTF-8 into code points. Invalid bytes decode to U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(const std::vector<char32_t>& cps);
void append_utf8(char32_t cp, std::string* out);

// Number of code points in s.
size_t length_utf8(std::string_view s);

// Unicode whitespace (ASCII controls, NBSP, U+2000..U+200A, ideographic space...).
bool is_space(char32_t cp);

// Characters split off as tokens of their own: ASCII symbols and punctuation,
// Latin-1 punctuation/symbols, the General Punctuation block, currency
// symbols, CJK and full-width punctuation.
bool is_punct(char32_t cp);

// Anything that is neither whitespace nor punctuation.
inline bool is_word_char(char32_t cp) { return !is_space(cp) && !is_punct(cp); }

inline bool is_ascii_digit(char32_t cp) { return cp >= U'0' && cp <= U'9'; }

// Simple case folding for ASCII, Latin-1, Latin Extended-A (all Polish
// letters), basic Greek and Cyrillic. Other code points are unchanged.
char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view s);

// True when every code point of a non-empty token is punctuation.
bool is_punct_token(std::string_view token);

// Whitespace split (ASCII space and tab), no empty fields.
std::vector<std::string> split_ws(std::string_view line);

std::string join(const std::vector<std::string>& words, std::string_view sep = " ");

// Strips a trailing '\r' (CRLF files).
std::string_view chomp(std::string_view line);

}  // namespace text
}  // namespace smt

#endif  // SMT_TEXT_HPP_
