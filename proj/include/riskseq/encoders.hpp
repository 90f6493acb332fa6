// SPDX-License-Identifier: Apache-2.0
/**
 * @file   encoders.hpp
 * @brief  Per-post text and emotion encoders behind a common interface, so the
 *         model never sees whether vectors were hashed on the fly or read from
 *         an interchange file.
 */
#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "corpus.hpp"
#include "embedding_store.hpp"
#include "sequence.hpp"
#include "text.hpp"

namespace riskseq {

class TextEncoder {
public:
  virtual ~TextEncoder() = default;
  virtual std::size_t width() const = 0;
  virtual Array encode_post(const PostKey &key, std::string_view text) const = 0;
  /// Vector for the whole history of a user (concatenation baseline).
  virtual Array encode_concatenated(const UserRecord &user) const = 0;
};

class EmotionEncoder {
public:
  virtual ~EmotionEncoder() = default;
  virtual Array encode_post(const PostKey &key, std::string_view text) const = 0;
};

inline std::string join_posts(const UserRecord &user) {
  std::string joined;
  for (std::size_t i = 0; i < user.posts.size(); ++i) {
    if (i)
      joined += ' ';
    joined += user.posts[i].text;
  }
  return joined;
}

class HashingTextEncoder final : public TextEncoder {
public:
  HashingTextEncoder(std::size_t width, std::uint64_t seed) : width_(width), seed_(seed) {
    if (width_ < 8)
      fail(ErrorKind::Config, "hashing encoder width must be at least 8");
  }

  std::size_t width() const override { return width_; }

  Array encode_post(const PostKey &, std::string_view text) const override {
    return hashing_encode(text, width_, seed_);
  }

  Array encode_concatenated(const UserRecord &user) const override {
    return hashing_encode(join_posts(user), width_, seed_);
  }

private:
  std::size_t width_;
  std::uint64_t seed_;
};

/// Serves vectors from a loaded interchange file.
class StoreTextEncoder final : public TextEncoder {
public:
  explicit StoreTextEncoder(std::shared_ptr<const EmbeddingStore> store)
    : store_(std::move(store)) {}

  std::size_t width() const override { return store_->width(); }

  Array encode_post(const PostKey &key, std::string_view) const override {
    return store_->lookup(key).text;
  }

  /// No stored vector exists for a joined history, so the user's post vectors
  /// are averaged and L2-normalised instead.
  Array encode_concatenated(const UserRecord &user) const override {
    Array sum({width()});
    for (std::size_t i = 0; i < user.posts.size(); ++i) {
      const auto &v = store_->lookup({user.user_id, i}).text;
      for (std::size_t k = 0; k < sum.size(); ++k)
        sum[k] += v[k];
    }
    double norm = 0.0;
    for (double x : sum.values())
      norm += x * x;
    if (norm > 0.0)
      for (double &x : sum.values())
        x /= std::sqrt(norm);
    return sum;
  }

private:
  std::shared_ptr<const EmbeddingStore> store_;
};

class LexiconEmotionEncoder final : public EmotionEncoder {
public:
  explicit LexiconEmotionEncoder(EmotionLexicon lexicon) : lexicon_(std::move(lexicon)) {}

  Array encode_post(const PostKey &, std::string_view text) const override {
    return emotion_scores(text, lexicon_);
  }

private:
  EmotionLexicon lexicon_;
};

class StoreEmotionEncoder final : public EmotionEncoder {
public:
  explicit StoreEmotionEncoder(std::shared_ptr<const EmbeddingStore> store)
    : store_(std::move(store)) {
    if (store_->size() > 0 && !store_->has_emotion())
      fail(ErrorKind::Config, "embedding store carries no emotion block");
  }

  Array encode_post(const PostKey &key, std::string_view) const override {
    const auto &rec = store_->lookup(key);
    if (!rec.emotion)
      fail(ErrorKind::Lookup, "no emotion vector for " + describe(key));
    return *rec.emotion;
  }

private:
  std::shared_ptr<const EmbeddingStore> store_;
};

struct UserMatrices {
  Array text;    // L x d_text
  Array emotion; // L x 7
};

/// Row i of each matrix encodes post i; the two encoders run independently.
inline UserMatrices encode_user(const UserRecord &user, const TextEncoder &text_encoder,
                                const EmotionEncoder &emotion_encoder) {
  if (user.posts.empty())
    fail(ErrorKind::Validation, "user '" + user.user_id + "' has no posts");
  const std::size_t L = user.posts.size();
  const std::size_t d = text_encoder.width();
  UserMatrices out{Array({L, d}), Array({L, kEmotionClasses})};
  for (std::size_t i = 0; i < L; ++i) {
    const PostKey key{user.user_id, i};
    const Array t = text_encoder.encode_post(key, user.posts[i].text);
    const Array e = emotion_encoder.encode_post(key, user.posts[i].text);
    if (t.size() != d || e.size() != kEmotionClasses)
      fail(ErrorKind::Dimension, "encoder output width mismatch for " + describe(key));
    std::ranges::copy(t.values(), out.text.row(i).begin());
    std::ranges::copy(e.values(), out.emotion.row(i).begin());
  }
  return out;
}

inline Array concat_encode(const UserRecord &user, const TextEncoder &text_encoder) {
  if (user.posts.empty())
    fail(ErrorKind::Validation, "user '" + user.user_id + "' has no posts");
  return text_encoder.encode_concatenated(user);
}

/// Sequence encoding with time-decay factors, ready for pad_and_mask.
inline EncodedUser encode_sequence(const UserRecord &user, const TextEncoder &text_encoder,
                                   const EmotionEncoder &emotion_encoder) {
  auto m = encode_user(user, text_encoder, emotion_encoder);
  const auto ts = user.timestamps();
  return {std::move(m.text), std::move(m.emotion), compute_decay(ts), user.label};
}

/// Length-1 encoding of the concatenated history, used by the text baseline.
inline EncodedUser encode_concatenated(const UserRecord &user, const TextEncoder &text_encoder) {
  Array v = concat_encode(user, text_encoder);
  const std::size_t d = v.size();
  return {Array({1, d}, v.storage()),
          Array({1, kEmotionClasses}, 1.0 / static_cast<double>(kEmotionClasses)),
          Array({1}, 1.0), user.label};
}

} // namespace riskseq
