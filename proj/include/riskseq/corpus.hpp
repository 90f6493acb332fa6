// SPDX-License-Identifier: Apache-2.0
/**
 * @file   corpus.hpp
 * @brief  Users, timestamped posts and the JSONL corpus format.
 *
 * One user per line:
 *   {"user_id": "u1", "label": 1, "posts": [{"text": "...", "timestamp": 1600000000}]}
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "io.hpp"

namespace riskseq {

struct Post {
  std::string text;
  std::int64_t timestamp = 0;

  bool operator==(const Post &) const = default;
};

struct UserRecord {
  std::string user_id;
  std::vector<Post> posts;
  int label = 0;

  std::vector<std::int64_t> timestamps() const {
    std::vector<std::int64_t> out;
    out.reserve(posts.size());
    for (const auto &p : posts)
      out.push_back(p.timestamp);
    return out;
  }

  bool operator==(const UserRecord &) const = default;
};

/// Checks the UserRecord invariants: non-empty, chronological, binary label.
inline void validate_user(const UserRecord &user) {
  if (user.posts.empty())
    fail(ErrorKind::Validation, "user '" + user.user_id + "' has no posts");
  if (user.label != 0 && user.label != 1)
    fail(ErrorKind::Validation, "user '" + user.user_id + "' has label " +
                                    std::to_string(user.label));
  for (std::size_t i = 0; i < user.posts.size(); ++i) {
    if (user.posts[i].timestamp < 0)
      fail(ErrorKind::Validation,
           "user '" + user.user_id + "' has a negative timestamp");
    if (i && user.posts[i].timestamp < user.posts[i - 1].timestamp)
      fail(ErrorKind::Validation,
           "user '" + user.user_id + "' posts are not chronological");
  }
}

class Corpus {
public:
  Corpus() = default;

  explicit Corpus(std::vector<UserRecord> users) : users_(std::move(users)) {
    for (const auto &u : users_) {
      validate_user(u);
      ++(u.label ? positives_ : negatives_);
    }
  }

  const std::vector<UserRecord> &users() const noexcept { return users_; }
  std::size_t size() const noexcept { return users_.size(); }
  std::size_t negatives() const noexcept { return negatives_; }
  std::size_t positives() const noexcept { return positives_; }

  std::size_t total_posts() const {
    std::size_t n = 0;
    for (const auto &u : users_)
      n += u.posts.size();
    return n;
  }

  bool operator==(const Corpus &) const = default;

private:
  std::vector<UserRecord> users_;
  std::size_t negatives_ = 0;
  std::size_t positives_ = 0;
};

namespace detail {

inline UserRecord parse_user(const std::string &line, std::size_t line_no) {
  const auto where = "line " + std::to_string(line_no);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error &e) {
    fail(ErrorKind::Parse, where + ": " + e.what());
  }
  UserRecord user;
  try {
    user.user_id = j.at("user_id").get<std::string>();
    user.label = j.at("label").get<int>();
    for (const auto &p : j.at("posts"))
      user.posts.push_back(
          {p.at("text").get<std::string>(), p.at("timestamp").get<std::int64_t>()});
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::Parse, where + ": " + e.what());
  }
  if (user.posts.empty())
    fail(ErrorKind::Validation,
         where + ": user '" + user.user_id + "' has no posts");
  if (user.label != 0 && user.label != 1)
    fail(ErrorKind::Validation, where + ": label must be 0 or 1");
  std::stable_sort(user.posts.begin(), user.posts.end(),
                   [](const Post &a, const Post &b) { return a.timestamp < b.timestamp; });
  return user;
}

} // namespace detail

inline Corpus parse_corpus(std::istream &in) {
  std::vector<UserRecord> users;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    users.push_back(detail::parse_user(line, line_no));
  }
  return Corpus(std::move(users));
}

/// Reads a JSONL corpus; posts are stably sorted by timestamp.
inline Corpus load_corpus(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorKind::Io, "cannot open corpus '" + path + "'");
  return parse_corpus(in);
}

inline std::string corpus_to_jsonl(const Corpus &corpus) {
  std::string out;
  for (const auto &u : corpus.users()) {
    nlohmann::json posts = nlohmann::json::array();
    for (const auto &p : u.posts)
      posts.push_back({{"text", p.text}, {"timestamp", p.timestamp}});
    nlohmann::json j = {{"user_id", u.user_id}, {"label", u.label}, {"posts", posts}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

inline void save_corpus(const Corpus &corpus, const std::string &path) {
  write_file_atomic(path, corpus_to_jsonl(corpus));
}

/// Users of the corpus selected by index, in the given order.
inline Corpus subset(const Corpus &corpus, const std::vector<std::size_t> &indices) {
  std::vector<UserRecord> users;
  users.reserve(indices.size());
  for (auto i : indices)
    users.push_back(corpus.users().at(i));
  return Corpus(std::move(users));
}

} // namespace riskseq
