// SPDX-License-Identifier: Apache-2.0
/**
 * @file   embedding_store.hpp
 * @brief  Precomputed per-post vectors in the line-oriented interchange format.
 *
 *   #width <d_text>
 *   user_id<TAB>post_index<TAB>v1,...,vd[<TAB>e1,...,e7]
 *
 * The emotion block must be present on every record or on none.
 */
#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "array.hpp"
#include "io.hpp"
#include "text.hpp"

namespace riskseq {

struct PostKey {
  std::string user_id;
  std::size_t post_index = 0;

  auto operator<=>(const PostKey &) const = default;
};

inline std::string describe(const PostKey &key) {
  return "(" + key.user_id + ", " + std::to_string(key.post_index) + ")";
}

struct StoredVectors {
  Array text;
  std::optional<Array> emotion;

  bool operator==(const StoredVectors &) const = default;
};

class EmbeddingStore {
public:
  explicit EmbeddingStore(std::size_t width = 0) : width_(width) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool has_emotion() const noexcept { return has_emotion_.value_or(false); }
  const std::map<PostKey, StoredVectors> &records() const noexcept { return records_; }

  void insert(PostKey key, StoredVectors vectors) {
    if (vectors.text.size() != width_)
      fail(ErrorKind::Validation, "format error: record " + describe(key) + " has width " +
                                      std::to_string(vectors.text.size()) + ", declared " +
                                      std::to_string(width_));
    if (vectors.emotion && vectors.emotion->size() != kEmotionClasses)
      fail(ErrorKind::Validation,
           "format error: record " + describe(key) + " emotion block must have 7 values");
    const bool with_emotion = vectors.emotion.has_value();
    if (has_emotion_ && *has_emotion_ != with_emotion)
      fail(ErrorKind::Validation, "format error: record " + describe(key) +
                                      " emotion block must be all-present or all-absent");
    if (records_.count(key))
      fail(ErrorKind::Duplicate, "record " + describe(key) + " appears twice");
    has_emotion_ = with_emotion;
    records_.emplace(std::move(key), std::move(vectors));
  }

  const StoredVectors &lookup(const PostKey &key) const {
    auto it = records_.find(key);
    if (it == records_.end())
      fail(ErrorKind::Lookup, "no precomputed vector for " + describe(key));
    return it->second;
  }

  bool operator==(const EmbeddingStore &) const = default;

private:
  std::size_t width_;
  std::optional<bool> has_emotion_;
  std::map<PostKey, StoredVectors> records_;
};

namespace detail {

inline std::vector<double> parse_floats(const std::string &field, const std::string &where) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= field.size()) {
    auto comma = field.find(',', start);
    if (comma == std::string::npos)
      comma = field.size();
    const std::string item = field.substr(start, comma - start);
    char *end = nullptr;
    errno = 0;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || end != item.c_str() + item.size() || errno == ERANGE ||
        !std::isfinite(v))
      fail(ErrorKind::Parse, where + ": bad number '" + item + "'");
    values.push_back(v);
    start = comma + 1;
  }
  return values;
}

inline std::string format_floats(std::span<const double> values) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", values[i]);
    if (i)
      out += ',';
    out += buf;
  }
  return out;
}

} // namespace detail

inline EmbeddingStore parse_embedding_store(std::istream &in) {
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorKind::Parse, "line 1: missing #width header");
  if (!line.empty() && line.back() == '\r')
    line.pop_back();
  std::size_t width = 0;
  {
    std::istringstream header(line);
    std::string tag;
    if (!(header >> tag >> width) || tag != "#width" || width == 0)
      fail(ErrorKind::Parse, "line 1: expected '#width <d_text>'");
  }
  EmbeddingStore store(width);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    const std::string where = "line " + std::to_string(line_no);
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos)
        break;
      start = tab + 1;
    }
    if (fields.size() != 3 && fields.size() != 4)
      fail(ErrorKind::Parse, where + ": expected 3 or 4 tab-separated fields");
    if (fields[0].empty())
      fail(ErrorKind::Parse, where + ": empty user_id");
    char *end = nullptr;
    const unsigned long long index = std::strtoull(fields[1].c_str(), &end, 10);
    if (fields[1].empty() || end != fields[1].c_str() + fields[1].size() ||
        fields[1][0] == '-')
      fail(ErrorKind::Parse, where + ": bad post_index '" + fields[1] + "'");
    auto text = detail::parse_floats(fields[2], where);
    const std::size_t text_width = text.size();
    StoredVectors vectors{Array({text_width}, std::move(text)), std::nullopt};
    if (fields.size() == 4) {
      auto emo = detail::parse_floats(fields[3], where);
      const std::size_t emo_width = emo.size();
      vectors.emotion = Array({emo_width}, std::move(emo));
    }
    store.insert({fields[0], static_cast<std::size_t>(index)}, std::move(vectors));
  }
  return store;
}

inline EmbeddingStore load_embedding_store(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorKind::Io, "cannot open embedding store '" + path + "'");
  return parse_embedding_store(in);
}

inline std::string format_embedding_store(const EmbeddingStore &store) {
  std::string out = "#width " + std::to_string(store.width()) + "\n";
  for (const auto &[key, vectors] : store.records()) {
    out += key.user_id;
    out += '\t';
    out += std::to_string(key.post_index);
    out += '\t';
    out += detail::format_floats(vectors.text.values());
    if (vectors.emotion) {
      out += '\t';
      out += detail::format_floats(vectors.emotion->values());
    }
    out += '\n';
  }
  return out;
}

inline void write_store(const EmbeddingStore &store, const std::string &path) {
  write_file_atomic(path, format_embedding_store(store));
}

} // namespace riskseq
