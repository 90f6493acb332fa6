// SPDX-License-Identifier: Apache-2.0
/**
 * @file   layers.hpp
 * @brief  Sequence-level layers: stream fusion, time-decay scaling, additive
 *         attention pooling and masked mean/last pooling.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "array.hpp"
#include "ops.hpp"

namespace riskseq {

using Mask = std::span<const std::uint8_t>;

/// Element-wise product of the text and emotion hidden-state sequences.
inline Array fuse(const Array &text_hidden, const Array &emotion_hidden) {
  require_same_shape(text_hidden, emotion_hidden, "fuse");
  return multiply(text_hidden, emotion_hidden);
}

namespace detail {

inline Array scale_steps(const Array &hidden, const Array &decay) {
  if (hidden.rank() != 3)
    fail(ErrorKind::Dimension, "apply_decay expects b x L x h");
  require_shape(decay, {hidden.dim(0), hidden.dim(1)}, "apply_decay decay");
  Array out(hidden.shape());
  for (std::size_t i = 0; i < hidden.dim(0); ++i)
    for (std::size_t t = 0; t < hidden.dim(1); ++t) {
      const double d = decay.at(i, t);
      auto src = hidden.row(i, t);
      auto dst = out.row(i, t);
      for (std::size_t k = 0; k < src.size(); ++k)
        dst[k] = src[k] * d;
    }
  return out;
}

} // namespace detail

/// Scales every hidden vector H[i][t] by decay[i][t].
inline Array apply_decay(const Array &hidden, const Array &decay) {
  for (double d : decay.values())
    if (!(d >= 0.0 && d <= 1.0))
      fail(ErrorKind::Validation, "decay factor " + std::to_string(d) + " outside [0,1]");
  return detail::scale_steps(hidden, decay);
}

inline Array apply_decay_backward(const Array &decay, const Array &grad_out) {
  return detail::scale_steps(grad_out, decay);
}

namespace detail {

inline std::size_t valid_count(Mask mask, std::size_t i, std::size_t L) {
  std::size_t n = 0;
  for (std::size_t t = 0; t < L; ++t)
    n += mask[i * L + t] ? 1 : 0;
  return n;
}

inline void require_unmasked_rows(Mask mask, std::size_t B, std::size_t L,
                                  const char *what) {
  if (mask.size() != B * L)
    fail(ErrorKind::Dimension, std::string(what) + ": mask length does not match b x L");
  for (std::size_t i = 0; i < B; ++i)
    if (valid_count(mask, i, L) == 0)
      fail(ErrorKind::Validation,
           std::string(what) + ": row " + std::to_string(i) + " is fully masked");
}

} // namespace detail

/// Mean over masked-in timesteps.
inline Array mean_pool(const Array &hidden, Mask mask) {
  const std::size_t B = hidden.dim(0), L = hidden.dim(1), h = hidden.dim(2);
  detail::require_unmasked_rows(mask, B, L, "mean_pool");
  Array out({B, h});
  for (std::size_t i = 0; i < B; ++i) {
    const double n = static_cast<double>(detail::valid_count(mask, i, L));
    auto dst = out.row(i);
    for (std::size_t t = 0; t < L; ++t) {
      if (!mask[i * L + t])
        continue;
      auto src = hidden.row(i, t);
      for (std::size_t k = 0; k < h; ++k)
        dst[k] += src[k];
    }
    for (auto &x : dst)
      x /= n;
  }
  return out;
}

inline Array mean_pool_backward(const Shape &hidden_shape, Mask mask, const Array &grad_out) {
  const std::size_t B = hidden_shape[0], L = hidden_shape[1], h = hidden_shape[2];
  Array grad(hidden_shape);
  for (std::size_t i = 0; i < B; ++i) {
    const double n = static_cast<double>(detail::valid_count(mask, i, L));
    for (std::size_t t = 0; t < L; ++t) {
      if (!mask[i * L + t])
        continue;
      auto dst = grad.row(i, t);
      for (std::size_t k = 0; k < h; ++k)
        dst[k] = grad_out.at(i, k) / n;
    }
  }
  return grad;
}

/// Hidden state at the last masked-in timestep.
inline Array last_pool(const Array &hidden, Mask mask) {
  const std::size_t B = hidden.dim(0), L = hidden.dim(1), h = hidden.dim(2);
  detail::require_unmasked_rows(mask, B, L, "last_pool");
  Array out({B, h});
  for (std::size_t i = 0; i < B; ++i) {
    std::size_t last = 0;
    for (std::size_t t = 0; t < L; ++t)
      if (mask[i * L + t])
        last = t;
    std::ranges::copy(hidden.row(i, last), out.row(i).begin());
  }
  return out;
}

inline Array last_pool_backward(const Shape &hidden_shape, Mask mask, const Array &grad_out) {
  const std::size_t B = hidden_shape[0], L = hidden_shape[1];
  Array grad(hidden_shape);
  for (std::size_t i = 0; i < B; ++i) {
    std::size_t last = 0;
    for (std::size_t t = 0; t < L; ++t)
      if (mask[i * L + t])
        last = t;
    std::ranges::copy(grad_out.row(i), grad.row(i, last).begin());
  }
  return grad;
}

/// Additive self-attention: score_t = v . tanh(W H_t + b), softmax over
/// masked-in steps, output = sum_t weight_t H_t.
struct AttentionCache {
  Array projected; // b x L x a, tanh(W H_t + b); zero on padding
  Array weights;   // b x L, exactly 0 on padding
  Array output;    // b x h
};

struct AttentionGrads {
  Array W;
  Array b;
  Array v;
  Array hidden;
};

inline AttentionCache attention_pool(const Array &hidden, Mask mask, const Array &W,
                                     const Array &b, const Array &v) {
  if (hidden.rank() != 3)
    fail(ErrorKind::Dimension, "attention_pool expects b x L x h");
  const std::size_t B = hidden.dim(0), L = hidden.dim(1), h = hidden.dim(2);
  const std::size_t a = v.size();
  require_shape(W, {h, a}, "attention W");
  require_shape(b, {a}, "attention b");
  require_shape(v, {a}, "attention v");
  detail::require_unmasked_rows(mask, B, L, "attention_pool");

  AttentionCache cache{Array({B, L, a}), Array({B, L}), Array({B, h})};
  std::vector<bool> keep(L);
  for (std::size_t i = 0; i < B; ++i) {
    auto scores = cache.weights.row(i);
    for (std::size_t t = 0; t < L; ++t) {
      keep[t] = mask[i * L + t] != 0;
      if (!keep[t])
        continue;
      auto u = cache.projected.row(i, t);
      std::ranges::copy(b.values(), u.begin());
      accumulate_matvec(hidden.row(i, t), W, u);
      double s = 0.0;
      for (std::size_t k = 0; k < a; ++k) {
        u[k] = std::tanh(u[k]);
        s += v[k] * u[k];
      }
      scores[t] = s;
    }
    softmax_inplace(scores, &keep);
    auto out = cache.output.row(i);
    for (std::size_t t = 0; t < L; ++t) {
      if (!keep[t])
        continue;
      auto src = hidden.row(i, t);
      for (std::size_t k = 0; k < h; ++k)
        out[k] += scores[t] * src[k];
    }
  }
  return cache;
}

inline AttentionGrads attention_pool_backward(const Array &hidden, Mask mask, const Array &W,
                                              const Array &v, const AttentionCache &cache,
                                              const Array &grad_out) {
  const std::size_t B = hidden.dim(0), L = hidden.dim(1), h = hidden.dim(2);
  const std::size_t a = v.size();
  require_shape(grad_out, {B, h}, "attention_pool_backward grad");
  AttentionGrads g{Array(W.shape()), Array({a}), Array({a}), Array(hidden.shape())};
  std::vector<double> dweight(L), dpre(a);
  for (std::size_t i = 0; i < B; ++i) {
    auto go = grad_out.row(i);
    auto w = cache.weights.row(i);
    double weighted = 0.0;
    for (std::size_t t = 0; t < L; ++t) {
      dweight[t] = 0.0;
      if (!mask[i * L + t])
        continue;
      auto src = hidden.row(i, t);
      auto dh = g.hidden.row(i, t);
      for (std::size_t k = 0; k < h; ++k) {
        dweight[t] += go[k] * src[k];
        dh[k] += w[t] * go[k];
      }
      weighted += w[t] * dweight[t];
    }
    for (std::size_t t = 0; t < L; ++t) {
      if (!mask[i * L + t])
        continue;
      const double dscore = w[t] * (dweight[t] - weighted);
      auto u = cache.projected.row(i, t);
      for (std::size_t k = 0; k < a; ++k) {
        g.v[k] += dscore * u[k];
        dpre[k] = dscore * v[k] * (1.0 - u[k] * u[k]);
        g.b[k] += dpre[k];
      }
      accumulate_outer(hidden.row(i, t), dpre, g.W);
      accumulate_matvec_t(dpre, W, g.hidden.row(i, t));
    }
  }
  return g;
}

} // namespace riskseq
