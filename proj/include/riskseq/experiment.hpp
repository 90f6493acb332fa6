// SPDX-License-Identifier: Apache-2.0
/**
 * @file   experiment.hpp
 * @brief  End-to-end runs (downsample, split, encode, train, evaluate),
 *         multi-seed aggregation, architecture comparison and the attention
 *         audit report.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "corpus.hpp"
#include "encoders.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "sampling.hpp"
#include "training.hpp"
#include "wilcoxon.hpp"

namespace riskseq {

enum class EncoderMode { Hashing, File };

struct EncoderSettings {
  EncoderMode mode = EncoderMode::Hashing;
  std::size_t d_text = 64;
  std::uint64_t hash_seed = 0;
  std::string lexicon_path;    // empty: built-in lexicon
  std::string embeddings_path; // file mode only
};

struct Encoders {
  std::shared_ptr<const TextEncoder> text;
  std::shared_ptr<const EmotionEncoder> emotion;
};

inline Encoders make_encoders(const EncoderSettings &s) {
  Encoders e;
  if (s.mode == EncoderMode::Hashing) {
    e.text = std::make_shared<HashingTextEncoder>(s.d_text, s.hash_seed);
    e.emotion = std::make_shared<LexiconEmotionEncoder>(
        s.lexicon_path.empty() ? EmotionLexicon::builtin() : EmotionLexicon::load(s.lexicon_path));
    return e;
  }
  auto store = std::make_shared<const EmbeddingStore>(load_embedding_store(s.embeddings_path));
  if (store->width() != s.d_text)
    fail(ErrorKind::Config, "embedding store width " + std::to_string(store->width()) +
                                " does not match d_text " + std::to_string(s.d_text));
  e.text = std::make_shared<StoreTextEncoder>(store);
  if (store->has_emotion() || store->size() == 0)
    e.emotion = std::make_shared<StoreEmotionEncoder>(store);
  else
    e.emotion = std::make_shared<LexiconEmotionEncoder>(
        s.lexicon_path.empty() ? EmotionLexicon::builtin() : EmotionLexicon::load(s.lexicon_path));
  return e;
}

inline EncodedUser encode_for(const ModelConfig &config, const UserRecord &user,
                              const Encoders &enc) {
  if (features(config.architecture).sequential)
    return encode_sequence(user, *enc.text, *enc.emotion);
  return encode_concatenated(user, *enc.text);
}

inline std::vector<EncodedUser> encode_corpus(const ModelConfig &config, const Corpus &corpus,
                                              const Encoders &enc) {
  std::vector<EncodedUser> out;
  out.reserve(corpus.size());
  for (const auto &u : corpus.users())
    out.push_back(encode_for(config, u, enc));
  return out;
}

/// Encodings of one corpus, computed once and shared by every run on it.
class EncodedCorpus {
public:
  EncodedCorpus(const Corpus &corpus, const Encoders &enc) : corpus_(corpus), enc_(enc) {
    for (std::size_t i = 0; i < corpus.size(); ++i)
      index_.emplace(corpus.users()[i].user_id, i);
  }

  const Corpus &corpus() const { return corpus_; }

  std::vector<EncodedUser> gather(const ModelConfig &config, const Corpus &part) {
    const bool sequential = features(config.architecture).sequential;
    auto &cache = sequential ? sequence_ : concatenated_;
    std::lock_guard lock(mutex_);
    if (cache.empty()) {
      ModelConfig probe = config;
      probe.architecture = sequential ? Architecture::LSTM : Architecture::TextBaseline;
      cache = encode_corpus(probe, corpus_, enc_);
    }
    std::vector<EncodedUser> out;
    out.reserve(part.size());
    for (const auto &u : part.users())
      out.push_back(cache[index_.at(u.user_id)]);
    return out;
  }

private:
  Corpus corpus_;
  Encoders enc_;
  std::map<std::string, std::size_t> index_;
  std::vector<EncodedUser> sequence_;
  std::vector<EncodedUser> concatenated_;
  std::mutex mutex_;
};

struct RunSettings {
  bool downsample = true;
  SplitFractions fractions;
};

struct RunOutput {
  ModelConfig config;
  ParameterSet params;
  TrainHistory history;
  MetricsReport metrics;
  CorpusSplit split;
};

/// One seeded run. The seed drives downsampling, the split, initialisation,
/// shuffling and dropout.
inline RunOutput run_once(EncodedCorpus &data, ModelConfig config, TrainConfig tc,
                          const RunSettings &settings, std::uint64_t seed,
                          std::ostream *log = nullptr) {
  Corpus corpus = settings.downsample ? downsample(data.corpus(), seed) : data.corpus();
  auto parts = split(corpus, settings.fractions, seed);
  config.init_seed = seed;
  tc.seed = seed;
  auto train_users = data.gather(config, parts.train);
  auto val_users = data.gather(config, parts.val);
  auto test_users = data.gather(config, parts.test);
  auto trained = train(config, tc, train_users, val_users, log);
  auto preds = predict(config, trained.params, test_users, tc.batch_size, pad_options(tc));
  auto report = evaluate_scores(preds.scores, preds.labels, preds.truth);
  report.seed = seed;
  return {config, std::move(trained.params), std::move(trained.history), report,
          std::move(parts)};
}

inline constexpr std::array<std::string_view, 6> kMetricNames = {
    "accuracy", "precision", "recall", "f1", "auroc", "auprc"};

inline double metric_value(const MetricsReport &r, std::string_view name) {
  if (name == "accuracy") return r.accuracy;
  if (name == "precision") return r.precision;
  if (name == "recall") return r.recall;
  if (name == "f1") return r.f1;
  if (name == "auroc") return r.auroc;
  if (name == "auprc") return r.auprc;
  fail(ErrorKind::Config, "unknown metric '" + std::string(name) + "'");
}

struct SeedAggregate {
  Architecture architecture = Architecture::EmoLSTMTdA;
  std::vector<MetricsReport> runs;
  std::map<std::string, double> mean;
  std::map<std::string, double> std; // sample standard deviation

  std::vector<double> values(std::string_view metric) const {
    std::vector<double> v;
    for (const auto &r : runs)
      v.push_back(metric_value(r, metric));
    return v;
  }
};

inline SeedAggregate aggregate(Architecture arch, std::vector<MetricsReport> runs) {
  SeedAggregate a;
  a.architecture = arch;
  a.runs = std::move(runs);
  const double n = static_cast<double>(a.runs.size());
  for (auto name : kMetricNames) {
    const auto v = a.values(name);
    double mean = 0.0;
    for (double x : v)
      mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v)
      ss += (x - mean) * (x - mean);
    a.mean[std::string(name)] = mean;
    a.std[std::string(name)] = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  }
  return a;
}

/// Runs jobs 0..count-1 on up to `workers` threads. The first failure (by job
/// index) is rethrown after all threads finish.
template <typename Fn> void parallel_for(std::size_t count, std::size_t workers, Fn &&fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::vector<std::exception_ptr> errors(count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto &t : pool)
      t.join();
  }
  for (auto &e : errors)
    if (e)
      std::rethrow_exception(e);
}

inline SeedAggregate multi_seed_run(EncodedCorpus &data, const ModelConfig &config,
                                    const TrainConfig &tc, const RunSettings &settings,
                                    const std::vector<std::uint64_t> &seeds,
                                    std::size_t workers = 1) {
  if (seeds.size() < 2)
    fail(ErrorKind::Config, "multi-seed run needs at least 2 seeds");
  std::vector<MetricsReport> runs(seeds.size());
  parallel_for(seeds.size(), workers, [&](std::size_t i) {
    try {
      runs[i] = run_once(data, config, tc, settings, seeds[i]).metrics;
    } catch (const Error &e) {
      fail(e.kind(), std::string(to_string(config.architecture)) + ", seed " +
                         std::to_string(seeds[i]) + ": " + e.message());
    }
  });
  return aggregate(config.architecture, std::move(runs));
}

struct ComparisonRow {
  std::string comparison;
  ComparisonResult result;
};

/// Consecutive-pair Wilcoxon tests on per-seed F1.
inline std::vector<ComparisonRow> compare_consecutive(const std::vector<SeedAggregate> &aggs,
                                                      std::string_view metric = "f1") {
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i + 1 < aggs.size(); ++i) {
    const std::string label = std::string(to_string(aggs[i].architecture)) + " vs " +
                              std::string(to_string(aggs[i + 1].architecture));
    try {
      rows.push_back({label, wilcoxon_signed_rank(aggs[i].values(metric),
                                                  aggs[i + 1].values(metric))});
    } catch (const Error &e) {
      fail(e.kind(), label + ": " + e.message());
    }
  }
  return rows;
}

// Attention audit

inline constexpr std::size_t kExcerptLimit = 200;

/// At most 200 bytes; longer text is cut at a UTF-8 boundary and ends in "...".
inline std::string excerpt(const std::string &text) {
  if (text.size() <= kExcerptLimit)
    return text;
  std::size_t cut = kExcerptLimit - 3;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80)
    --cut;
  return text.substr(0, cut) + "...";
}

struct AttentionEntry {
  std::size_t post_index = 0;
  std::string excerpt;
  double weight = 0.0;
};

struct UserAttention {
  std::string user_id;
  int label = 0;
  std::size_t posts = 0;
  std::vector<AttentionEntry> entries; // descending weight
};

inline std::vector<UserAttention> attention_report(const ParameterSet &params,
                                                   const ModelConfig &config,
                                                   const Corpus &users, const Encoders &enc,
                                                   std::size_t top_k = 0,
                                                   std::size_t batch_size = 32) {
  if (!config.use_attention)
    fail(ErrorKind::Config, "attention report needs an attention architecture, got " +
                                std::string(to_string(config.architecture)));
  std::vector<UserAttention> out;
  for (std::size_t start = 0; start < users.size(); start += batch_size) {
    const std::size_t stop = std::min(users.size(), start + batch_size);
    std::vector<EncodedUser> chunk;
    for (std::size_t i = start; i < stop; ++i)
      chunk.push_back(encode_for(config, users.users()[i], enc));
    auto batch = pad_and_mask(chunk);
    auto trace = forward(config, params, batch);
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      const auto &user = users.users()[start + b];
      UserAttention ua{user.user_id, user.label, user.posts.size(), {}};
      for (std::size_t t = 0; t < user.posts.size(); ++t)
        ua.entries.push_back({t, excerpt(user.posts[t].text), trace.attention_weights.at(b, t)});
      std::stable_sort(ua.entries.begin(), ua.entries.end(),
                       [](const auto &x, const auto &y) { return x.weight > y.weight; });
      if (top_k > 0 && ua.entries.size() > top_k)
        ua.entries.resize(top_k);
      out.push_back(std::move(ua));
    }
  }
  return out;
}

} // namespace riskseq
