// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.hpp
 * @brief  The architecture family: concatenation baseline, GRU/LSTM sequence
 *         models, optional time decay, emotion stream and attention pooling.
 *
 * Data flow for a sequence architecture:
 *
 *   text  --RNN--> H_text --(dropout, GRU variants)--+
 *                                                     (*)--> H_fused --(* decay)--> H_combined
 *   emotion --LSTM--> H_emotion ----------------------+         (emotion variants only)
 *
 *   H_combined --attention | mean | last--> pooled --FC--> softmax --> Y
 *
 * Parameter names are shared across architectures ("text_rnn.W", "head.b", ...)
 * so a parameter set for one variant can be evaluated under a related one.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layers.hpp"
#include "ops.hpp"
#include "optim.hpp"
#include "random.hpp"
#include "recurrent.hpp"
#include "sequence.hpp"
#include "text.hpp"

namespace riskseq {

enum class Architecture {
  TextBaseline,
  GRUd,
  GRUdTd,
  LSTM,
  LSTMTd,
  LSTMTdA,
  EmoLSTMTd,
  EmoLSTMTdA,
};

inline constexpr std::array<Architecture, 8> kAllArchitectures = {
    Architecture::TextBaseline, Architecture::GRUd,      Architecture::GRUdTd,
    Architecture::LSTM,         Architecture::LSTMTd,    Architecture::LSTMTdA,
    Architecture::EmoLSTMTd,    Architecture::EmoLSTMTdA};

inline std::string_view to_string(Architecture arch) {
  switch (arch) {
  case Architecture::TextBaseline: return "TextBaseline";
  case Architecture::GRUd: return "GRUd";
  case Architecture::GRUdTd: return "GRUdTd";
  case Architecture::LSTM: return "LSTM";
  case Architecture::LSTMTd: return "LSTMTd";
  case Architecture::LSTMTdA: return "LSTMTdA";
  case Architecture::EmoLSTMTd: return "EmoLSTMTd";
  case Architecture::EmoLSTMTdA: return "EmoLSTMTdA";
  }
  return "?";
}

inline Architecture parse_architecture(std::string_view name) {
  for (auto arch : kAllArchitectures)
    if (to_string(arch) == name)
      return arch;
  fail(ErrorKind::Config, "unknown architecture '" + std::string(name) + "'");
}

enum class Pooling { Mean, Last };

inline std::string_view to_string(Pooling p) { return p == Pooling::Mean ? "mean" : "last"; }

inline Pooling parse_pooling(std::string_view name) {
  if (name == "mean")
    return Pooling::Mean;
  if (name == "last")
    return Pooling::Last;
  fail(ErrorKind::Config, "unknown pooling '" + std::string(name) + "'");
}

struct FeatureFlags {
  bool sequential;
  CellType cell;
  bool dropout;
  bool decay;
  bool emotion;
  bool attention;
};

/// Feature matrix of the architecture family.
inline FeatureFlags features(Architecture arch) {
  using A = Architecture;
  switch (arch) {
  case A::TextBaseline: return {false, CellType::LSTM, false, false, false, false};
  case A::GRUd: return {true, CellType::GRU, true, false, false, false};
  case A::GRUdTd: return {true, CellType::GRU, true, true, false, false};
  case A::LSTM: return {true, CellType::LSTM, false, false, false, false};
  case A::LSTMTd: return {true, CellType::LSTM, false, true, false, false};
  case A::LSTMTdA: return {true, CellType::LSTM, false, true, false, true};
  case A::EmoLSTMTd: return {true, CellType::LSTM, false, true, true, false};
  case A::EmoLSTMTdA: return {true, CellType::LSTM, false, true, true, true};
  }
  fail(ErrorKind::Config, "unknown architecture");
}

struct ModelConfig {
  Architecture architecture = Architecture::EmoLSTMTdA;
  std::size_t d_text = 64;
  std::size_t hidden = 64;
  double dropout_rate = 0.3;
  bool use_decay = true;
  bool use_emotion = true;
  bool use_attention = true;
  Pooling pooling = Pooling::Mean;
  std::uint64_t init_seed = 1;

  static ModelConfig for_architecture(Architecture arch, std::size_t d_text = 64,
                                      std::size_t hidden = 64) {
    const auto f = features(arch);
    ModelConfig c;
    c.architecture = arch;
    c.d_text = d_text;
    c.hidden = hidden;
    c.use_decay = f.decay;
    c.use_emotion = f.emotion;
    c.use_attention = f.attention;
    return c;
  }

  void validate() const {
    const auto f = features(architecture);
    if (use_decay != f.decay || use_emotion != f.emotion || use_attention != f.attention)
      fail(ErrorKind::Config, "feature flags inconsistent with architecture " +
                                  std::string(to_string(architecture)));
    if (hidden < 1)
      fail(ErrorKind::Config, "hidden size must be at least 1");
    if (d_text < 1)
      fail(ErrorKind::Config, "d_text must be at least 1");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      fail(ErrorKind::Config, "dropout rate must lie in [0,1)");
  }

  bool operator==(const ModelConfig &) const = default;
};

namespace param {
inline const std::string kTextW = "text_rnn.W";
inline const std::string kTextU = "text_rnn.U";
inline const std::string kTextB = "text_rnn.b";
inline const std::string kEmoW = "emotion_rnn.W";
inline const std::string kEmoU = "emotion_rnn.U";
inline const std::string kEmoB = "emotion_rnn.b";
inline const std::string kAttW = "attention.W";
inline const std::string kAttB = "attention.b";
inline const std::string kAttV = "attention.v";
inline const std::string kHeadW = "head.W";
inline const std::string kHeadB = "head.b";
} // namespace param

/// Expected parameter shapes for a configuration, in registration order.
inline std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelConfig &config) {
  const auto f = features(config.architecture);
  const std::size_t h = config.hidden;
  std::vector<std::pair<std::string, Shape>> layout;
  if (!f.sequential) {
    layout.push_back({param::kHeadW, {config.d_text, 2}});
    layout.push_back({param::kHeadB, {2}});
    return layout;
  }
  const std::size_t gh = gate_count(f.cell) * h;
  layout.push_back({param::kTextW, {config.d_text, gh}});
  layout.push_back({param::kTextU, {h, gh}});
  layout.push_back({param::kTextB, {gh}});
  if (f.emotion) {
    layout.push_back({param::kEmoW, {kEmotionClasses, 4 * h}});
    layout.push_back({param::kEmoU, {h, 4 * h}});
    layout.push_back({param::kEmoB, {4 * h}});
  }
  if (f.attention) {
    layout.push_back({param::kAttW, {h, h}});
    layout.push_back({param::kAttB, {h}});
    layout.push_back({param::kAttV, {h}});
  }
  layout.push_back({param::kHeadW, {h, 2}});
  layout.push_back({param::kHeadB, {2}});
  return layout;
}

/// Uniform initialisation in [-1/sqrt(fan), 1/sqrt(fan)] with fan = hidden
/// size (input width for the baseline head), seeded by config.init_seed.
inline ParameterSet init_parameters(const ModelConfig &config) {
  config.validate();
  const bool sequential = features(config.architecture).sequential;
  const double fan = static_cast<double>(sequential ? config.hidden : config.d_text);
  const double bound = 1.0 / std::sqrt(fan);
  Rng rng(derive_seed(config.init_seed, "init"));
  ParameterSet params;
  for (auto &[name, shape] : parameter_layout(config)) {
    Array a(shape);
    for (double &x : a.values())
      x = rng.uniform(-bound, bound);
    params.add(name, std::move(a));
  }
  return params;
}

inline void check_parameters(const ModelConfig &config, const ParameterSet &params) {
  const auto layout = parameter_layout(config);
  if (params.values().size() != layout.size())
    fail(ErrorKind::Config, "parameter set does not match architecture " +
                                std::string(to_string(config.architecture)));
  for (const auto &[name, shape] : layout) {
    if (!params.contains(name))
      fail(ErrorKind::Config, "missing parameter '" + name + "'");
    if (params.get(name).shape() != shape)
      fail(ErrorKind::Config, "parameter '" + name + "' has shape " +
                                  shape_string(params.get(name).shape()) + ", expected " +
                                  shape_string(shape));
  }
}

/// Copies the parameters a configuration needs out of a (possibly larger) set.
inline ParameterSet restrict_parameters(const ParameterSet &params, const ModelConfig &config) {
  ParameterSet out;
  for (const auto &[name, shape] : parameter_layout(config)) {
    const Array &value = params.get(name);
    if (value.shape() != shape)
      fail(ErrorKind::Config, "parameter '" + name + "' has the wrong shape");
    out.add(name, value);
  }
  return out;
}

struct ForwardOptions {
  bool training = false;
  std::uint64_t dropout_seed = 0;
  /// Replace the emotion stream's hidden states with ones (reduction checks).
  bool force_emotion_ones = false;
};

struct ForwardTrace {
  ModelConfig config;
  ForwardOptions options;
  // Inputs retained for the backward pass.
  Array text_input;
  Array emotion_input;
  Array decay;
  std::vector<std::uint8_t> mask;

  RecurrentCache text_cache;
  std::optional<RecurrentCache> emotion_cache;
  Array dropout_mask;  // empty unless the architecture uses dropout
  Array text_hidden;   // H_text after dropout
  Array emotion_hidden; // empty unless use_emotion
  Array fused;         // H_fused
  Array combined;      // H_combined
  std::optional<AttentionCache> attention;
  Array pooled;        // att_out or mean/last pool, b x h (b x d_text for baseline)
  Array attention_weights; // b x L, empty unless use_attention
  Array logits;
  Array Y;
  bool complete = false;
};

inline Array text_baseline_forward(const ParameterSet &params, const Array &user_vector) {
  const Array &W = params.get(param::kHeadW);
  if (user_vector.size() != W.dim(0))
    fail(ErrorKind::Dimension, "text baseline: vector width " +
                                   std::to_string(user_vector.size()) + " vs head input " +
                                   std::to_string(W.dim(0)));
  return softmax(affine(Array({1, user_vector.size()}, user_vector.storage()), W,
                        params.get(param::kHeadB)));
}

inline ForwardTrace forward(const ModelConfig &config, const ParameterSet &params,
                            const EncodedBatch &batch, const ForwardOptions &options = {}) {
  config.validate();
  check_parameters(config, params);
  const auto f = features(config.architecture);
  if (batch.text.dim(2) != config.d_text)
    fail(ErrorKind::Config, "batch text width " + std::to_string(batch.text.dim(2)) +
                                " does not match d_text " + std::to_string(config.d_text));
  ForwardTrace tr;
  tr.config = config;
  tr.options = options;
  tr.text_input = batch.text;
  tr.decay = batch.decay;
  tr.mask = batch.mask;
  const std::size_t B = batch.batch_size();

  if (!f.sequential) {
    // Concatenated-history vector sits at timestep 0.
    tr.pooled = Array({B, config.d_text});
    for (std::size_t i = 0; i < B; ++i)
      std::ranges::copy(batch.text.row(i, 0), tr.pooled.row(i).begin());
  } else {
    tr.text_cache = recurrent_forward(f.cell, params.get(param::kTextW),
                                      params.get(param::kTextU), params.get(param::kTextB),
                                      batch.text, batch.mask);
    if (f.dropout) {
      tr.text_hidden = dropout(tr.text_cache.hidden, config.dropout_rate, options.dropout_seed,
                               options.training, &tr.dropout_mask);
    } else {
      tr.text_hidden = tr.text_cache.hidden;
    }

    if (f.emotion) {
      tr.emotion_input = batch.emotion;
      if (options.force_emotion_ones) {
        tr.emotion_hidden = Array(tr.text_hidden.shape(), 1.0);
      } else {
        tr.emotion_cache = recurrent_forward(CellType::LSTM, params.get(param::kEmoW),
                                             params.get(param::kEmoU),
                                             params.get(param::kEmoB), batch.emotion,
                                             batch.mask);
        tr.emotion_hidden = tr.emotion_cache->hidden;
      }
      tr.fused = fuse(tr.text_hidden, tr.emotion_hidden);
    } else {
      tr.fused = tr.text_hidden;
    }

    tr.combined = f.decay ? apply_decay(tr.fused, batch.decay) : tr.fused;

    if (f.attention) {
      tr.attention = attention_pool(tr.combined, batch.mask, params.get(param::kAttW),
                                    params.get(param::kAttB), params.get(param::kAttV));
      tr.pooled = tr.attention->output;
      tr.attention_weights = tr.attention->weights;
    } else if (config.pooling == Pooling::Mean) {
      tr.pooled = mean_pool(tr.combined, batch.mask);
    } else {
      tr.pooled = last_pool(tr.combined, batch.mask);
    }
  }
  tr.logits = affine(tr.pooled, params.get(param::kHeadW), params.get(param::kHeadB));
  tr.Y = softmax(tr.logits);
  tr.complete = true;
  return tr;
}

struct BackwardResult {
  GradientMap params;
  Array text_input;    // dL/d(text inputs)
  Array emotion_input; // dL/d(emotion inputs); empty unless use_emotion
};

/// Gradients of mean BCE(Y, targets) for every parameter. Decay factors are
/// constants.
inline BackwardResult backward(const ModelConfig &config, const ParameterSet &params,
                               const ForwardTrace &trace, std::span<const int> targets) {
  if (!trace.complete || !(trace.config == config))
    fail(ErrorKind::Validation, "trace error: forward trace missing or produced for another config");
  check_parameters(config, params);
  const auto f = features(config.architecture);
  BackwardResult out;

  const Array grad_y = bce_loss_grad(trace.Y, targets);
  const Array grad_logits = softmax_backward(trace.Y, grad_y);
  auto head = affine_backward(trace.pooled, params.get(param::kHeadW), grad_logits);
  out.params[param::kHeadW] = std::move(head.weight);
  out.params[param::kHeadB] = std::move(head.bias);

  if (!f.sequential) {
    out.text_input = Array(trace.text_input.shape());
    for (std::size_t i = 0; i < trace.text_input.dim(0); ++i)
      std::ranges::copy(head.input.row(i), out.text_input.row(i, 0).begin());
    return out;
  }

  const Mask mask(trace.mask);
  Array grad_combined;
  if (f.attention) {
    auto att = attention_pool_backward(trace.combined, mask, params.get(param::kAttW),
                                       params.get(param::kAttV), *trace.attention, head.input);
    out.params[param::kAttW] = std::move(att.W);
    out.params[param::kAttB] = std::move(att.b);
    out.params[param::kAttV] = std::move(att.v);
    grad_combined = std::move(att.hidden);
  } else if (config.pooling == Pooling::Mean) {
    grad_combined = mean_pool_backward(trace.combined.shape(), mask, head.input);
  } else {
    grad_combined = last_pool_backward(trace.combined.shape(), mask, head.input);
  }

  Array grad_fused = f.decay ? apply_decay_backward(trace.decay, grad_combined)
                             : std::move(grad_combined);

  Array grad_text_hidden;
  if (f.emotion) {
    grad_text_hidden = multiply(grad_fused, trace.emotion_hidden);
    if (trace.emotion_cache) {
      const Array grad_emotion_hidden = multiply(grad_fused, trace.text_hidden);
      auto emo = recurrent_backward(params.get(param::kEmoW), params.get(param::kEmoU),
                                    params.get(param::kEmoB), trace.emotion_input, mask,
                                    *trace.emotion_cache, grad_emotion_hidden);
      out.params[param::kEmoW] = std::move(emo.W);
      out.params[param::kEmoU] = std::move(emo.U);
      out.params[param::kEmoB] = std::move(emo.b);
      out.emotion_input = std::move(emo.inputs);
    } else {
      for (const auto &name : {param::kEmoW, param::kEmoU, param::kEmoB})
        out.params[name] = Array(params.get(name).shape());
      out.emotion_input = Array(trace.emotion_input.shape());
    }
  } else {
    grad_text_hidden = std::move(grad_fused);
  }

  if (f.dropout)
    grad_text_hidden = multiply(grad_text_hidden, trace.dropout_mask);

  auto text = recurrent_backward(params.get(param::kTextW), params.get(param::kTextU),
                                 params.get(param::kTextB), trace.text_input, mask,
                                 trace.text_cache, grad_text_hidden);
  out.params[param::kTextW] = std::move(text.W);
  out.params[param::kTextU] = std::move(text.U);
  out.params[param::kTextB] = std::move(text.b);
  out.text_input = std::move(text.inputs);
  return out;
}

/// Positive-class probability per user.
inline std::vector<double> positive_scores(const ForwardTrace &trace) {
  std::vector<double> s;
  for (std::size_t i = 0; i < trace.Y.dim(0); ++i)
    s.push_back(trace.Y.at(i, 1));
  return s;
}

/// Argmax decision; ties resolve to the negative class.
inline std::vector<int> predicted_labels(const ForwardTrace &trace) {
  std::vector<int> y;
  for (std::size_t i = 0; i < trace.Y.dim(0); ++i)
    y.push_back(trace.Y.at(i, 1) > trace.Y.at(i, 0) ? 1 : 0);
  return y;
}

} // namespace riskseq
