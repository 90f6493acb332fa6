// SPDX-License-Identifier: Apache-2.0
/**
 * @file   config.hpp
 * @brief  Engine configuration: an INI document with sections dataset,
 *         encoder, model, training and evaluation.
 *
 * Keys are validated as a whole before any command touches the file system.
 * Comments go on their own line (';' or '#'). List values are comma
 * separated.
 */
#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "error.hpp"
#include "experiment.hpp"
#include "model.hpp"
#include "sampling.hpp"
#include "synthetic.hpp"
#include "training.hpp"

namespace riskseq {

struct DatasetConfig {
  std::string path;              // empty: generate in memory
  GeneratorConfig generator;
  std::uint64_t generator_seed = 1;
  bool downsample = true;
  SplitFractions fractions;
};

struct EvaluationConfig {
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<Architecture> architectures;
  std::size_t workers = 1;
  std::size_t top_k = 5;
  std::string output_dir = "out";
  std::string checkpoint; // empty: <output_dir>/checkpoint.bin
  std::string split = "test";
};

struct EngineConfig {
  DatasetConfig dataset;
  EncoderSettings encoder;
  ModelConfig model = ModelConfig::for_architecture(Architecture::EmoLSTMTdA);
  TrainConfig training;
  EvaluationConfig evaluation;

  std::string checkpoint_path() const {
    if (!evaluation.checkpoint.empty())
      return evaluation.checkpoint;
    return (std::filesystem::path(evaluation.output_dir) / "checkpoint.bin").string();
  }

  /// Checks values and referenced paths. Runs before any output is written.
  void validate() const {
    dataset.generator.validate();
    const auto &f = dataset.fractions;
    for (double x : {f.train, f.val, f.test})
      if (!(x >= 0.0 && x <= 1.0))
        fail(ErrorKind::Config, "split fractions must lie in [0,1]");
    if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
      fail(ErrorKind::Config, "split fractions must sum to 1");
    if (!dataset.path.empty() && !std::filesystem::exists(dataset.path))
      fail(ErrorKind::Config, "dataset path '" + dataset.path + "' does not exist");
    if (encoder.mode == EncoderMode::File) {
      if (encoder.embeddings_path.empty())
        fail(ErrorKind::Config, "encoder mode 'file' needs embeddings_path");
      if (!std::filesystem::exists(encoder.embeddings_path))
        fail(ErrorKind::Config,
             "embeddings path '" + encoder.embeddings_path + "' does not exist");
    } else if (!encoder.embeddings_path.empty()) {
      fail(ErrorKind::Config, "embeddings_path is only valid with encoder mode 'file'");
    }
    if (!encoder.lexicon_path.empty() && !std::filesystem::exists(encoder.lexicon_path))
      fail(ErrorKind::Config, "lexicon path '" + encoder.lexicon_path + "' does not exist");
    if (encoder.mode == EncoderMode::Hashing && encoder.d_text < 8)
      fail(ErrorKind::Config, "hashing encoder d_text must be at least 8");
    if (model.d_text != encoder.d_text)
      fail(ErrorKind::Config, "model d_text " + std::to_string(model.d_text) +
                                  " differs from encoder d_text " +
                                  std::to_string(encoder.d_text));
    model.validate();
    training.validate();
    if (evaluation.seeds.empty())
      fail(ErrorKind::Config, "evaluation seed list is empty");
    if (evaluation.workers < 1)
      fail(ErrorKind::Config, "workers must be at least 1");
    if (evaluation.split != "train" && evaluation.split != "val" && evaluation.split != "test" &&
        evaluation.split != "all")
      fail(ErrorKind::Config, "evaluation split must be train, val, test or all");
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T> T parse_number(const std::string &key, const std::string &text) {
  T value{};
  const char *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    fail(ErrorKind::Config, key + ": '" + text + "' is not a valid number");
  return value;
}

inline bool parse_bool(const std::string &key, const std::string &text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on")
    return true;
  if (text == "false" || text == "0" || text == "no" || text == "off")
    return false;
  fail(ErrorKind::Config, key + ": '" + text + "' is not a boolean");
}

inline std::vector<std::string> split_list(const std::vector<std::string> &inputs) {
  std::vector<std::string> out;
  for (const auto &in : inputs) {
    std::stringstream ss(in);
    std::string item;
    while (std::getline(ss, item, ','))
      if (auto t = trim(item); !t.empty())
        out.push_back(t);
  }
  return out;
}

class KeyTable {
public:
  using Setter = std::function<void(const std::string &key, const std::vector<std::string> &)>;

  void scalar(const std::string &key, std::function<void(const std::string &, const std::string &)> set) {
    table_[key] = [set](const std::string &k, const std::vector<std::string> &in) {
      if (in.size() != 1)
        fail(ErrorKind::Config, k + " expects a single value");
      set(k, trim(in.front()));
    };
  }
  void list(const std::string &key, Setter set) { table_[key] = std::move(set); }

  template <typename T> void number(const std::string &key, T &field) {
    scalar(key, [&field](const std::string &k, const std::string &v) {
      field = parse_number<T>(k, v);
    });
  }
  void flag(const std::string &key, bool &field) {
    scalar(key, [&field](const std::string &k, const std::string &v) { field = parse_bool(k, v); });
  }
  void text(const std::string &key, std::string &field) {
    scalar(key, [&field](const std::string &, const std::string &v) { field = v; });
  }

  void apply(const std::string &key, const std::vector<std::string> &inputs) const {
    const auto it = table_.find(key);
    if (it == table_.end())
      fail(ErrorKind::Config, "unknown key '" + key + "'");
    it->second(key, inputs);
  }

private:
  std::map<std::string, Setter> table_;
};

} // namespace detail

/// Parses an INI document. Unknown sections or keys are configuration errors.
inline EngineConfig parse_engine_config(std::istream &in) {
  EngineConfig c;
  auto &g = c.dataset.generator;
  std::optional<std::string> preset;
  std::optional<Architecture> arch;
  std::map<std::string, std::vector<std::string>> generator_keys;

  detail::KeyTable keys;
  keys.text("dataset.path", c.dataset.path);
  keys.scalar("dataset.generator", [&](const std::string &k, const std::string &v) {
    if (v != "desk" && v != "full_scale")
      fail(ErrorKind::Config, k + ": unknown preset '" + v + "' (desk or full_scale)");
    preset = v;
  });
  // Generator fields are applied after the preset, whatever their order.
  for (const char *name : {"users", "positives", "min_posts", "max_posts", "mean_posts",
                           "sd_posts", "signal", "recency", "emotion", "timing", "burst_rate",
                           "gambling_rate", "min_words", "max_words", "emotion_noise"})
    keys.list(std::string("dataset.") + name,
              [&generator_keys](const std::string &k, const std::vector<std::string> &in) {
                generator_keys[k] = in;
              });
  keys.number("dataset.generator_seed", c.dataset.generator_seed);
  keys.flag("dataset.downsample", c.dataset.downsample);
  keys.number("dataset.train_fraction", c.dataset.fractions.train);
  keys.number("dataset.val_fraction", c.dataset.fractions.val);
  keys.number("dataset.test_fraction", c.dataset.fractions.test);

  keys.scalar("encoder.mode", [&](const std::string &k, const std::string &v) {
    if (v == "hashing")
      c.encoder.mode = EncoderMode::Hashing;
    else if (v == "file")
      c.encoder.mode = EncoderMode::File;
    else
      fail(ErrorKind::Config, k + ": unknown mode '" + v + "' (hashing or file)");
  });
  keys.number("encoder.d_text", c.encoder.d_text);
  keys.number("encoder.hash_seed", c.encoder.hash_seed);
  keys.text("encoder.lexicon_path", c.encoder.lexicon_path);
  keys.text("encoder.embeddings_path", c.encoder.embeddings_path);

  keys.scalar("model.architecture", [&](const std::string &, const std::string &v) {
    arch = parse_architecture(v);
  });
  keys.number("model.hidden", c.model.hidden);
  keys.number("model.dropout", c.model.dropout_rate);
  keys.scalar("model.pooling", [&](const std::string &, const std::string &v) {
    c.model.pooling = parse_pooling(v);
  });
  keys.number("model.init_seed", c.model.init_seed);

  keys.number("training.epochs", c.training.epochs);
  keys.number("training.batch_size", c.training.batch_size);
  keys.number("training.initial_lr", c.training.initial_lr);
  keys.scalar("training.schedule", [&](const std::string &, const std::string &v) {
    c.training.schedule = parse_schedule(v);
  });
  keys.number("training.decay_factor", c.training.decay_factor);
  keys.number("training.decay_every", c.training.decay_every);
  keys.number("training.clip_norm", c.training.clip_norm);
  keys.number("training.seed", c.training.seed);
  keys.scalar("training.max_length", [&](const std::string &k, const std::string &v) {
    c.training.max_length = detail::parse_number<std::size_t>(k, v);
  });

  keys.list("evaluation.seeds", [&](const std::string &k, const std::vector<std::string> &in) {
    c.evaluation.seeds.clear();
    for (const auto &s : detail::split_list(in))
      c.evaluation.seeds.push_back(detail::parse_number<std::uint64_t>(k, s));
  });
  keys.list("evaluation.architectures",
            [&](const std::string &, const std::vector<std::string> &in) {
              c.evaluation.architectures.clear();
              for (const auto &s : detail::split_list(in))
                c.evaluation.architectures.push_back(parse_architecture(s));
            });
  keys.number("evaluation.workers", c.evaluation.workers);
  keys.number("evaluation.top_k", c.evaluation.top_k);
  keys.text("evaluation.output_dir", c.evaluation.output_dir);
  keys.text("evaluation.checkpoint", c.evaluation.checkpoint);
  keys.text("evaluation.split", c.evaluation.split);

  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_config(in);
  } catch (const CLI::Error &e) {
    fail(ErrorKind::Parse, std::string("config: ") + e.what());
  }
  for (const auto &item : items) {
    if (item.name == "++" || item.name == "--")
      continue; // section markers
    if (item.parents.size() != 1)
      fail(ErrorKind::Config, "key '" + item.fullname() + "' must sit inside one section");
    keys.apply(item.fullname(), item.inputs);
  }

  if (preset == "full_scale")
    g = GeneratorConfig::full_scale();
  detail::KeyTable gen;
  gen.number("dataset.users", g.users);
  gen.number("dataset.positives", g.positives);
  gen.number("dataset.min_posts", g.min_posts);
  gen.number("dataset.max_posts", g.max_posts);
  gen.number("dataset.mean_posts", g.mean_posts);
  gen.number("dataset.sd_posts", g.sd_posts);
  gen.number("dataset.signal", g.signal);
  gen.number("dataset.recency", g.recency);
  gen.number("dataset.emotion", g.emotion);
  gen.number("dataset.timing", g.timing);
  gen.number("dataset.burst_rate", g.burst_rate);
  gen.number("dataset.gambling_rate", g.gambling_rate);
  gen.number("dataset.min_words", g.min_words);
  gen.number("dataset.max_words", g.max_words);
  gen.number("dataset.emotion_noise", g.emotion_noise);
  for (const auto &[k, v] : generator_keys)
    gen.apply(k, v);

  // Architecture fixes the feature flags; the rest of the model section is kept.
  const ModelConfig tuned = c.model;
  c.model = ModelConfig::for_architecture(arch.value_or(tuned.architecture), c.encoder.d_text,
                                          tuned.hidden);
  c.model.dropout_rate = tuned.dropout_rate;
  c.model.pooling = tuned.pooling;
  c.model.init_seed = tuned.init_seed;
  return c;
}

inline EngineConfig load_engine_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorKind::Io, "cannot open config '" + path + "'");
  try {
    return parse_engine_config(in);
  } catch (const Error &e) {
    fail(e.kind(), path + ": " + e.message());
  }
}

} // namespace riskseq
