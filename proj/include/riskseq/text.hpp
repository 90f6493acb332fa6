// SPDX-License-Identifier: Apache-2.0
/**
 * @file   text.hpp
 * @brief  Tokenizer, signed feature-hashing text encoder and lexicon emotion
 *         scorer.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "array.hpp"
#include "lexicons.hpp"
#include "random.hpp"

namespace riskseq {

inline constexpr std::size_t kEmotionClasses = 7;

namespace detail {

// Length of a UTF-8 separator sequence starting at s[i], or 0 if none.
inline std::size_t separator_length(std::string_view s, std::size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c < 0x80)
    return (std::isspace(c) || std::ispunct(c)) ? 1 : 0;
  // U+00A0 no-break space, U+00A1..U+00BF Latin-1 punctuation.
  if (c == 0xC2 && i + 1 < s.size()) {
    const auto d = static_cast<unsigned char>(s[i + 1]);
    if (d == 0xA0 || (d >= 0xA1 && d <= 0xBF))
      return 2;
  }
  // U+2000..U+206F general punctuation and spaces, U+3000 ideographic space.
  if (c == 0xE2 && i + 2 < s.size()) {
    const auto d = static_cast<unsigned char>(s[i + 1]);
    if (d == 0x80 || d == 0x81)
      return 3;
  }
  if (c == 0xE3 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
      static_cast<unsigned char>(s[i + 2]) == 0x80)
    return 3;
  return 0;
}

} // namespace detail

/// Splits on whitespace and punctuation, ASCII-lowercasing each token.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < text.size();) {
    if (const auto sep = detail::separator_length(text, i)) {
      if (!current.empty())
        tokens.push_back(std::move(current));
      current.clear();
      i += sep;
      continue;
    }
    const auto c = static_cast<unsigned char>(text[i]);
    current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : text[i]);
    ++i;
  }
  if (!current.empty())
    tokens.push_back(std::move(current));
  return tokens;
}

/// Signed feature hashing into d_text buckets followed by L2 normalisation.
inline Array hashing_encode(std::string_view text, std::size_t d_text, std::uint64_t seed) {
  if (d_text < 8)
    fail(ErrorKind::Config, "hashing encoder width must be at least 8");
  Array v({d_text});
  const std::uint64_t basis = splitmix64(seed ^ 0x5eed5eed5eed5eedULL);
  for (const auto &tok : tokenize(text)) {
    const std::uint64_t h = splitmix64(fnv1a64(tok, basis));
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[h % d_text] += sign;
  }
  double norm = 0.0;
  for (double x : v.values())
    norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double &x : v.values())
      x /= norm;
  }
  return v;
}

class EmotionLexicon {
public:
  EmotionLexicon(std::vector<std::string> names, std::map<std::string, std::size_t> tokens)
    : names_(std::move(names)), tokens_(std::move(tokens)) {
    if (names_.size() != kEmotionClasses)
      fail(ErrorKind::Config, "emotion lexicon needs exactly 7 emotion names");
    if (std::set<std::string>(names_.begin(), names_.end()).size() != names_.size())
      fail(ErrorKind::Config, "emotion names must be unique");
    for (const auto &[tok, idx] : tokens_)
      if (idx >= kEmotionClasses)
        fail(ErrorKind::Config, "lexicon token '" + tok + "' maps to invalid index");
  }

  /// Built-in desk-scale lexicon.
  static EmotionLexicon builtin() {
    std::vector<std::string> names(lexicons::kEmotionNames.begin(),
                                   lexicons::kEmotionNames.end());
    std::map<std::string, std::size_t> tokens;
    for (const auto &w : lexicons::kEmotionWords)
      tokens.emplace(std::string(w.token), w.emotion);
    return {std::move(names), std::move(tokens)};
  }

  /// Reads `token<TAB>emotion_name` lines; blank lines and '#' comments skipped.
  static EmotionLexicon load(const std::string &path) {
    std::ifstream in(path);
    if (!in)
      fail(ErrorKind::Io, "cannot open lexicon '" + path + "'");
    std::vector<std::string> names(lexicons::kEmotionNames.begin(),
                                   lexicons::kEmotionNames.end());
    std::map<std::string, std::size_t> tokens;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#')
        continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": expected token<TAB>emotion");
      const std::string token = line.substr(0, tab);
      std::string emotion = line.substr(tab + 1);
      if (!emotion.empty() && emotion.back() == '\r')
        emotion.pop_back();
      std::size_t idx = 0;
      while (idx < names.size() && names[idx] != emotion)
        ++idx;
      if (idx == names.size())
        fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) +
                                   ": unknown emotion '" + emotion + "'");
      const auto lowered = tokenize(token);
      if (lowered.size() != 1)
        fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) +
                                   ": lexicon entry must be a single token");
      tokens[lowered.front()] = idx;
    }
    return {std::move(names), std::move(tokens)};
  }

  const std::vector<std::string> &names() const noexcept { return names_; }
  const std::map<std::string, std::size_t> &tokens() const noexcept { return tokens_; }

  std::optional<std::size_t> lookup(const std::string &token) const {
    auto it = tokens_.find(token);
    if (it == tokens_.end())
      return std::nullopt;
    return it->second;
  }

private:
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> tokens_;
};

/// Lexicon-hit proportions mixed half-and-half with the uniform distribution;
/// a text without hits scores uniform.
inline Array emotion_scores(std::string_view text, const EmotionLexicon &lexicon) {
  std::array<double, kEmotionClasses> counts{};
  double hits = 0.0;
  for (const auto &tok : tokenize(text))
    if (auto idx = lexicon.lookup(tok)) {
      counts[*idx] += 1.0;
      hits += 1.0;
    }
  Array out({kEmotionClasses});
  const double uniform = 1.0 / static_cast<double>(kEmotionClasses);
  for (std::size_t k = 0; k < kEmotionClasses; ++k) {
    const double share = hits > 0.0 ? counts[k] / hits : uniform;
    out[k] = (share + uniform) / 2.0;
  }
  return out;
}

} // namespace riskseq
