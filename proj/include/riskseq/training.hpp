// SPDX-License-Identifier: Apache-2.0
/**
 * @file   training.hpp
 * @brief  Mini-batch Adam training with an epoch-indexed learning-rate
 *         schedule and best-validation-loss checkpointing.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "checkpoint.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "optim.hpp"
#include "sequence.hpp"

namespace riskseq {

enum class Schedule { Constant, StepDecay };

inline std::string_view to_string(Schedule s) {
  return s == Schedule::Constant ? "constant" : "step_decay";
}

inline Schedule parse_schedule(std::string_view name) {
  if (name == "constant")
    return Schedule::Constant;
  if (name == "step_decay")
    return Schedule::StepDecay;
  fail(ErrorKind::Config, "unknown schedule '" + std::string(name) + "'");
}

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double initial_lr = 0.001;
  Schedule schedule = Schedule::Constant;
  double decay_factor = 0.5;
  std::size_t decay_every = 1;
  /// Global-norm gradient clipping; 0 disables.
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  /// Longest sequence fed to the model; longer users keep their latest posts.
  std::optional<std::size_t> max_length;
  std::string checkpoint_path;

  void validate() const {
    if (epochs < 1)
      fail(ErrorKind::Config, "epochs must be at least 1");
    if (batch_size < 1)
      fail(ErrorKind::Config, "batch_size must be at least 1");
    if (!(initial_lr > 0.0) || !std::isfinite(initial_lr))
      fail(ErrorKind::Config, "initial_lr must be positive");
    if (schedule == Schedule::StepDecay && (decay_every < 1 || !(decay_factor > 0.0)))
      fail(ErrorKind::Config, "step_decay needs factor > 0 and every_k_epochs >= 1");
    if (clip_norm < 0.0)
      fail(ErrorKind::Config, "clip_norm must be non-negative");
    if (max_length && *max_length < 1)
      fail(ErrorKind::Config, "max_length must be at least 1");
  }
};

inline double lr_schedule(std::size_t epoch, const TrainConfig &tc) {
  if (tc.schedule == Schedule::Constant)
    return tc.initial_lr;
  return tc.initial_lr *
         std::pow(tc.decay_factor, static_cast<double>(epoch / tc.decay_every));
}

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  std::vector<double> val_f1;
  std::vector<double> learning_rate;
  std::size_t best_epoch = 0;

  std::size_t size() const { return train_loss.size(); }
  bool operator==(const TrainHistory &) const = default;
};

inline nlohmann::ordered_json to_json(const TrainHistory &h) {
  nlohmann::ordered_json j;
  j["epochs"] = h.size();
  j["best_epoch"] = h.best_epoch;
  j["train_loss"] = h.train_loss;
  j["val_loss"] = h.val_loss;
  j["val_f1"] = h.val_f1;
  j["learning_rate"] = h.learning_rate;
  return j;
}

struct TrainResult {
  ParameterSet params; // state at the best epoch
  TrainHistory history;
};

struct Predictions {
  std::vector<double> scores; // positive-class probability
  std::vector<int> labels;    // argmax
  std::vector<int> truth;
  double loss = 0.0;
};

inline PadOptions pad_options(const TrainConfig &tc) {
  PadOptions p;
  p.max_length = tc.max_length;
  p.truncate = tc.max_length.has_value();
  return p;
}

namespace detail {

inline EncodedBatch gather(const std::vector<EncodedUser> &users,
                           std::span<const std::size_t> indices, const PadOptions &pad) {
  std::vector<EncodedUser> chunk;
  chunk.reserve(indices.size());
  for (auto i : indices)
    chunk.push_back(users[i]);
  PadOptions opts = pad;
  if (opts.max_length) {
    // Pad only as far as this batch needs.
    std::size_t longest = 0;
    for (const auto &u : chunk)
      longest = std::max(longest, u.length());
    opts.max_length = std::min(*opts.max_length, longest);
  }
  return pad_and_mask(chunk, opts);
}

} // namespace detail

/// Inference over users in order, batch by batch.
inline Predictions predict(const ModelConfig &config, const ParameterSet &params,
                           const std::vector<EncodedUser> &users, std::size_t batch_size = 32,
                           const PadOptions &pad = {}) {
  if (users.empty())
    fail(ErrorKind::Validation, "predict: no users");
  Predictions out;
  double loss_sum = 0.0;
  std::vector<std::size_t> idx(users.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t start = 0; start < users.size(); start += batch_size) {
    const std::size_t stop = std::min(users.size(), start + batch_size);
    auto batch = detail::gather(users, std::span(idx).subspan(start, stop - start), pad);
    auto trace = forward(config, params, batch);
    loss_sum += bce_loss(trace.Y, batch.labels).value * static_cast<double>(stop - start);
    for (std::size_t i = 0; i < batch.batch_size(); ++i) {
      out.scores.push_back(trace.Y.at(i, 1));
      out.labels.push_back(trace.Y.at(i, 1) > trace.Y.at(i, 0) ? 1 : 0);
      out.truth.push_back(batch.labels[i]);
    }
  }
  out.loss = loss_sum / static_cast<double>(users.size());
  return out;
}

inline TrainResult train(const ModelConfig &config, const TrainConfig &tc,
                         const std::vector<EncodedUser> &train_users,
                         const std::vector<EncodedUser> &val_users,
                         std::ostream *log = nullptr) {
  config.validate();
  tc.validate();
  if (train_users.empty() || val_users.empty())
    fail(ErrorKind::Validation, "train: training and validation sets must be non-empty");
  const PadOptions pad = pad_options(tc);
  TrainResult result{init_parameters(config), {}};
  ParameterSet params = result.params;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_users.size());
  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, tc);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(tc.seed, "shuffle", epoch));
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size, ++batch_no) {
      const std::size_t stop = std::min(order.size(), start + tc.batch_size);
      auto batch = detail::gather(train_users, std::span(order).subspan(start, stop - start), pad);
      ForwardOptions opts;
      opts.training = true;
      opts.dropout_seed = derive_seed(tc.seed, "dropout", epoch * 1000003ULL + batch_no);
      auto trace = forward(config, params, batch, opts);
      const double loss = bce_loss(trace.Y, batch.labels).value;
      if (!std::isfinite(loss)) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "non-finite loss at epoch %zu, batch %zu (max |parameter| = %.6g)", epoch,
                      batch_no, params.max_abs());
        fail(ErrorKind::Numerical, buf);
      }
      loss_sum += loss * static_cast<double>(stop - start);
      auto grads = backward(config, params, trace, batch.labels);
      if (tc.clip_norm > 0.0)
        clip_global_norm(grads.params, tc.clip_norm);
      params.adam_step(grads.params, lr);
    }

    const auto val = predict(config, params, val_users, tc.batch_size, pad);
    if (!std::isfinite(val.loss)) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "non-finite validation loss at epoch %zu (max |parameter| = %.6g)", epoch,
                    params.max_abs());
      fail(ErrorKind::Numerical, buf);
    }
    const auto report = classification_metrics(val.labels, val.truth);
    auto &h = result.history;
    h.train_loss.push_back(loss_sum / static_cast<double>(order.size()));
    h.val_loss.push_back(val.loss);
    h.val_f1.push_back(report.f1);
    h.learning_rate.push_back(lr);
    if (val.loss < best_val) {
      best_val = val.loss;
      h.best_epoch = epoch;
      result.params = params;
      if (!tc.checkpoint_path.empty())
        save_checkpoint(params, config, tc.checkpoint_path);
    }
    if (log) {
      char line[200];
      std::snprintf(line, sizeof line,
                    "epoch %zu/%zu  train_loss %.6f  val_loss %.6f  val_f1 %.4f  lr %.6g%s\n",
                    epoch + 1, tc.epochs, h.train_loss.back(), val.loss, report.f1, lr,
                    h.best_epoch == epoch ? "  *" : "");
      *log << line << std::flush;
    }
  }
  return result;
}

} // namespace riskseq
