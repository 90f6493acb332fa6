// SPDX-License-Identifier: Apache-2.0
/**
 * @file   synthetic.hpp
 * @brief  Seeded generator of labelled posting histories with planted,
 *         order- and time-dependent risk cues.
 *
 * Every user, whatever the label, gets the same number distribution of
 * gambling posts and the same multiset of emotion words, so a bag of words
 * over the whole history carries no class signal. Each gambling post of a
 * positive user is planted with probability s; planted posts differ from
 * decoys only in where and when they occur and which emotion they carry:
 *   - placement: with probability r a planted post joins a run of gambling
 *     posts ending at the latest post; decoys avoid touching other gambling
 *     posts;
 *   - timing: a planted post follows its predecessor within minutes with
 *     probability `timing`, any other post with probability `burst_rate`;
 *   - emotion: with probability e a planted post carries a sadness/fear word
 *     and the matching joy word goes on an ordinary post; decoys swap the two.
 * s = 0 makes the classes indistinguishable.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "lexicons.hpp"
#include "random.hpp"

namespace riskseq {

struct GeneratorConfig {
  std::size_t users = 400;
  std::size_t positives = 200;
  std::size_t min_posts = 3;
  std::size_t max_posts = 64;
  double mean_posts = 40.0;
  double sd_posts = 14.0;
  /// Fraction of a positive user's gambling posts that carry the cues.
  double signal = 0.8;
  /// Probability a planted post is placed in the final quartile.
  double recency = 0.9;
  /// Probability a planted post carries the risk emotion.
  double emotion = 1.0;
  /// Probability a planted post follows its predecessor within minutes.
  double timing = 0.5;
  /// Chance that any other post (ordinary or decoy) also follows within minutes.
  double burst_rate = 0.3;
  /// Per-post rate of gambling posts (at least two per user).
  double gambling_rate = 0.4;
  std::size_t min_words = 5;
  std::size_t max_words = 12;
  /// Chance that an ordinary post gets a random emotion word.
  double emotion_noise = 0.0;
  std::int64_t start_time = 1'600'000'000;

  static GeneratorConfig desk() { return {}; }

  /// Class counts and post-count shape of the reference corpus.
  static GeneratorConfig full_scale() {
    GeneratorConfig c;
    c.users = 4384;
    c.positives = 245;
    c.min_posts = 3;
    c.max_posts = 2002;
    c.mean_posts = 520.0;
    c.sd_posts = 551.0;
    return c;
  }

  void validate() const {
    if (users < 1)
      fail(ErrorKind::Config, "generator: users must be at least 1");
    if (positives > users)
      fail(ErrorKind::Config, "generator: positives (" + std::to_string(positives) +
                                  ") exceed users (" + std::to_string(users) + ")");
    if (min_posts < 1 || max_posts < min_posts)
      fail(ErrorKind::Config, "generator: need 1 <= min_posts <= max_posts");
    if (!(mean_posts > 0.0) || !(sd_posts >= 0.0))
      fail(ErrorKind::Config, "generator: mean_posts must be positive, sd_posts non-negative");
    for (double p : {signal, recency, emotion, timing, burst_rate, gambling_rate, emotion_noise})
      if (!(p >= 0.0 && p <= 1.0))
        fail(ErrorKind::Config, "generator: probabilities must lie in [0,1]");
    if (min_words < 1 || max_words < min_words)
      fail(ErrorKind::Config, "generator: need 1 <= min_words <= max_words");
  }
};

namespace detail {

template <typename List> std::string_view pick(Rng &rng, const List &list) {
  return list[rng.below(std::size(list))];
}

inline std::vector<std::string_view> words_of(std::initializer_list<std::size_t> emotions) {
  std::vector<std::string_view> out;
  for (const auto &w : lexicons::kEmotionWords)
    if (std::find(emotions.begin(), emotions.end(), w.emotion) != emotions.end())
      out.push_back(w.token);
  return out;
}

inline std::size_t draw_length(Rng &rng, const GeneratorConfig &c) {
  const double var = std::log(1.0 + (c.sd_posts * c.sd_posts) / (c.mean_posts * c.mean_posts));
  const double mu = std::log(c.mean_posts) - var / 2.0;
  const double x = std::exp(mu + std::sqrt(var) * rng.normal());
  const double clamped = std::clamp(std::round(x), static_cast<double>(c.min_posts),
                                    static_cast<double>(c.max_posts));
  return static_cast<std::size_t>(clamped);
}

struct PostPlan {
  bool gambling = false;
  bool planted = false;
  bool quick = false;
  std::vector<std::string_view> extra; // emotion words to insert
};

inline UserRecord generate_user(const GeneratorConfig &c, std::uint64_t seed, std::size_t index,
                                int label) {
  Rng rng(derive_seed(seed, "user", index));
  const std::size_t L = draw_length(rng, c);
  std::vector<PostPlan> plan(L);

  // Gambling post count: same distribution for both classes.
  std::size_t g = 0;
  for (std::size_t i = 0; i < L; ++i)
    g += rng.bernoulli(c.gambling_rate) ? 1 : 0;
  g = std::clamp<std::size_t>(g, std::min<std::size_t>(2, L), L);

  static const auto risk_words = words_of({lexicons::kSadness, lexicons::kFear});
  static const auto joy_words = words_of({lexicons::kJoy});
  static const auto all_words = words_of({0, 1, 2, 3, 4, 5, 6});

  // Tail-planted posts form one run ending at the latest post (a binge);
  // other planted posts go anywhere; decoys avoid touching another gambling
  // post where possible.
  std::size_t tail_run = 0, loose = 0, decoys = 0;
  for (std::size_t k = 0; k < g; ++k) {
    const bool planted = label == 1 && rng.bernoulli(c.signal);
    if (planted && rng.bernoulli(c.recency))
      ++tail_run;
    else if (planted)
      ++loose;
    else
      ++decoys;
  }
  std::vector<std::size_t> gambling_slots;
  for (std::size_t k = 0; k < tail_run; ++k) {
    plan[L - 1 - k].gambling = plan[L - 1 - k].planted = true;
    gambling_slots.push_back(L - 1 - k);
  }
  auto open_slots = [&](bool isolated) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < L; ++i) {
      if (plan[i].gambling)
        continue;
      if (isolated && ((i > 0 && plan[i - 1].gambling) || (i + 1 < L && plan[i + 1].gambling)))
        continue;
      out.push_back(i);
    }
    return out;
  };
  auto place = [&](bool planted) {
    auto slots = open_slots(!planted);
    if (slots.empty())
      slots = open_slots(false);
    const std::size_t slot = slots[rng.below(slots.size())];
    plan[slot].gambling = true;
    plan[slot].planted = planted;
    gambling_slots.push_back(slot);
  };
  for (std::size_t k = 0; k < loose; ++k)
    place(true);
  for (std::size_t k = 0; k < decoys; ++k)
    place(false);
  std::vector<std::size_t> free_slots = open_slots(false);
  for (std::size_t i = 0; i < L; ++i)
    plan[i].quick = rng.bernoulli(plan[i].planted ? c.timing : c.burst_rate);
  // Emotion pairing: one risk word and one joy word per gambling post, placed
  // so the class-level word counts match.
  for (auto slot : gambling_slots) {
    const bool risk_on_gambling = plan[slot].planted && rng.bernoulli(c.emotion);
    const auto risk = pick(rng, risk_words);
    const auto joy = pick(rng, joy_words);
    plan[slot].extra.push_back(risk_on_gambling ? risk : joy);
    const std::string_view other = risk_on_gambling ? joy : risk;
    if (!free_slots.empty())
      plan[free_slots[rng.below(free_slots.size())]].extra.push_back(other);
    else
      plan[slot].extra.push_back(other);
  }

  UserRecord user;
  char id[32];
  std::snprintf(id, sizeof id, "user_%05zu", index);
  user.user_id = id;
  user.label = label;
  std::int64_t t = c.start_time + static_cast<std::int64_t>(rng.below(10'000'000));
  for (std::size_t i = 0; i < L; ++i) {
    const auto &p = plan[i];
    if (i > 0) {
      double gap;
      if (p.quick)
        gap = 60.0 + rng.uniform() * 1740.0; // 1-30 minutes
      else
        gap = 86400.0 * (0.5 + rng.exponential(1.0));
      t += static_cast<std::int64_t>(gap);
    }
    std::vector<std::string_view> words;
    if (p.gambling) {
      // Topic posts: mostly gambling vocabulary with a little filler.
      const std::size_t m = 3 + rng.below(3);
      for (std::size_t k = 0; k < m; ++k)
        words.push_back(pick(rng, lexicons::kGamblingWords));
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)),
                   pick(rng, lexicons::kFillerWords));
    } else {
      const std::size_t n = c.min_words + rng.below(c.max_words - c.min_words + 1);
      for (std::size_t k = 0; k < n; ++k)
        words.push_back(pick(rng, lexicons::kFillerWords));
    }
    for (auto w : p.extra)
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)), w);
    if (!p.gambling && rng.bernoulli(c.emotion_noise))
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(rng.below(words.size() + 1)),
                   pick(rng, all_words));
    std::string text;
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (k)
        text += ' ';
      text += words[k];
    }
    user.posts.push_back({std::move(text), t});
  }
  return user;
}

} // namespace detail

inline Corpus generate_synthetic(const GeneratorConfig &config, std::uint64_t seed) {
  config.validate();
  std::vector<int> labels(config.users, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(config.positives), 1);
  Rng rng(derive_seed(seed, "labels"));
  rng.shuffle(labels);
  std::vector<UserRecord> users;
  users.reserve(config.users);
  for (std::size_t i = 0; i < config.users; ++i)
    users.push_back(detail::generate_user(config, seed, i, labels[i]));
  return Corpus(std::move(users));
}

struct CorpusSummary {
  std::size_t users = 0, negatives = 0, positives = 0, total_posts = 0;
  std::size_t min_posts = 0, q1_posts = 0, median_posts = 0, q3_posts = 0, max_posts = 0;
  double mean_posts = 0.0, sd_posts = 0.0;
};

inline CorpusSummary summarize(const Corpus &corpus) {
  CorpusSummary s;
  s.users = corpus.size();
  s.negatives = corpus.negatives();
  s.positives = corpus.positives();
  if (corpus.size() == 0)
    return s;
  std::vector<std::size_t> counts;
  for (const auto &u : corpus.users())
    counts.push_back(u.posts.size());
  std::sort(counts.begin(), counts.end());
  auto quantile = [&](double q) {
    return counts[static_cast<std::size_t>(std::floor(q * static_cast<double>(counts.size() - 1)))];
  };
  s.min_posts = counts.front();
  s.q1_posts = quantile(0.25);
  s.median_posts = quantile(0.5);
  s.q3_posts = quantile(0.75);
  s.max_posts = counts.back();
  for (auto n : counts)
    s.total_posts += n;
  s.mean_posts = static_cast<double>(s.total_posts) / static_cast<double>(counts.size());
  double ss = 0.0;
  for (auto n : counts)
    ss += (static_cast<double>(n) - s.mean_posts) * (static_cast<double>(n) - s.mean_posts);
  s.sd_posts = counts.size() > 1 ? std::sqrt(ss / static_cast<double>(counts.size() - 1)) : 0.0;
  return s;
}

inline std::string format_summary(const CorpusSummary &s) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "users %zu  negative %zu  positive %zu  posts %zu  per-user min %zu q1 %zu "
                "median %zu q3 %zu max %zu mean %.1f sd %.1f",
                s.users, s.negatives, s.positives, s.total_posts, s.min_posts, s.q1_posts,
                s.median_posts, s.q3_posts, s.max_posts, s.mean_posts, s.sd_posts);
  return buf;
}

} // namespace riskseq
