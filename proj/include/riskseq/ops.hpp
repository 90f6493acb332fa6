// SPDX-License-Identifier: Apache-2.0
/**
 * @file   ops.hpp
 * @brief  Differentiable primitives with hand-written backward passes.
 *
 * Every forward function is pure; the matching *_backward takes the cached
 * forward quantities and an upstream gradient and returns input gradients.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "array.hpp"
#include "random.hpp"

namespace riskseq {

inline constexpr double kLogClamp = 1e-12;

inline double sigmoid(double x) {
  if (x >= 0.0)
    return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// out[j] += sum_k x[k] * w[k][j]; w is row-major (x.size() x out.size()).
inline void accumulate_matvec(std::span<const double> x, const Array &w,
                              std::span<double> out) {
  const std::size_t cols = out.size();
  const double *wp = w.values().data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0)
      continue;
    const double *wrow = wp + k * cols;
    for (std::size_t j = 0; j < cols; ++j)
      out[j] += xk * wrow[j];
  }
}

// out[k] += sum_j w[k][j] * g[j]  (product with the transpose).
inline void accumulate_matvec_t(std::span<const double> g, const Array &w,
                                std::span<double> out) {
  const std::size_t cols = g.size();
  const double *wp = w.values().data();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double *wrow = wp + k * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j)
      s += wrow[j] * g[j];
    out[k] += s;
  }
}

// dw[k][j] += x[k] * g[j].
inline void accumulate_outer(std::span<const double> x, std::span<const double> g,
                             Array &dw) {
  const std::size_t cols = g.size();
  double *dp = dw.values().data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0)
      continue;
    double *drow = dp + k * cols;
    for (std::size_t j = 0; j < cols; ++j)
      drow[j] += xk * g[j];
  }
}

inline Array affine(const Array &input, const Array &weight, const Array &bias) {
  if (input.rank() != 2 || weight.rank() != 2 || bias.rank() != 1 ||
      input.dim(1) != weight.dim(0) || weight.dim(1) != bias.dim(0))
    fail(ErrorKind::Dimension,
         "affine: input " + shape_string(input.shape()) + " vs weight " +
             shape_string(weight.shape()) + " and bias " +
             shape_string(bias.shape()));
  const std::size_t n = input.dim(0);
  const std::size_t out_dim = weight.dim(1);
  Array out({n, out_dim});
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.row(i);
    std::copy(bias.values().begin(), bias.values().end(), row.begin());
    accumulate_matvec(input.row(i), weight, row);
  }
  return out;
}

struct AffineGrads {
  Array input;
  Array weight;
  Array bias;
};

inline AffineGrads affine_backward(const Array &input, const Array &weight,
                                   const Array &grad_out) {
  require_shape(grad_out, {input.dim(0), weight.dim(1)}, "affine_backward");
  AffineGrads g{Array(input.shape()), Array(weight.shape()),
                Array({weight.dim(1)})};
  for (std::size_t i = 0; i < input.dim(0); ++i) {
    auto go = grad_out.row(i);
    accumulate_matvec_t(go, weight, g.input.row(i));
    accumulate_outer(input.row(i), go, g.weight);
    for (std::size_t j = 0; j < go.size(); ++j)
      g.bias[j] += go[j];
  }
  return g;
}

/// Softmax over a span, restricted to entries where keep[j] is true. Dropped
/// entries are written as exactly 0.
inline void softmax_inplace(std::span<double> v,
                            const std::vector<bool> *keep = nullptr) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < v.size(); ++j)
    if (!keep || (*keep)[j])
      mx = std::max(mx, v[j]);
  double total = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (keep && !(*keep)[j]) {
      v[j] = 0.0;
      continue;
    }
    v[j] = std::exp(v[j] - mx);
    total += v[j];
  }
  for (auto &x : v)
    x /= total;
}

inline Array softmax(const Array &logits) {
  if (logits.rank() != 2)
    fail(ErrorKind::Dimension,
         "softmax expects a matrix, got " + shape_string(logits.shape()));
  Array out = logits;
  for (std::size_t i = 0; i < out.dim(0); ++i)
    softmax_inplace(out.row(i));
  return out;
}

/// dlogits given probabilities p and dL/dp, one row at a time.
inline void softmax_backward_row(std::span<const double> p,
                                 std::span<const double> grad_p,
                                 std::span<double> grad_logits) {
  double dot = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    dot += p[j] * grad_p[j];
  for (std::size_t j = 0; j < p.size(); ++j)
    grad_logits[j] = p[j] * (grad_p[j] - dot);
}

inline Array softmax_backward(const Array &probs, const Array &grad_probs) {
  require_same_shape(probs, grad_probs, "softmax_backward");
  Array out(probs.shape());
  for (std::size_t i = 0; i < probs.dim(0); ++i)
    softmax_backward_row(probs.row(i), grad_probs.row(i), out.row(i));
  return out;
}

struct LossValue {
  double value = 0.0;
};

inline void check_labels(std::span<const int> target, std::size_t n) {
  if (target.size() != n)
    fail(ErrorKind::Dimension, "bce_loss: " + std::to_string(n) +
                                 " predictions vs " +
                                 std::to_string(target.size()) + " labels");
  for (int y : target)
    if (y != 0 && y != 1)
      fail(ErrorKind::Validation, "invalid label " + std::to_string(y));
}

/// Mean negative log-likelihood of the target class, probabilities clamped to
/// [eps, 1 - eps].
inline LossValue bce_loss(const Array &predicted, std::span<const int> target) {
  if (predicted.rank() != 2 || predicted.dim(1) != 2)
    fail(ErrorKind::Dimension,
         "bce_loss expects n x 2, got " + shape_string(predicted.shape()));
  const std::size_t n = predicted.dim(0);
  check_labels(target, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = predicted.at(i, static_cast<std::size_t>(target[i]));
    // At or above 1 - eps the clamped prediction counts as perfect. NaN must
    // reach the total so the trainer can abort.
    if (std::isnan(p))
      total = p;
    else if (p < 1.0 - kLogClamp)
      total -= std::log(std::max(p, kLogClamp));
  }
  return {total / static_cast<double>(n)};
}

/// dL/dpredicted for bce_loss; zero where the clamp is active.
inline Array bce_loss_grad(const Array &predicted, std::span<const int> target) {
  const std::size_t n = predicted.dim(0);
  check_labels(target, n);
  Array grad(predicted.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const auto cls = static_cast<std::size_t>(target[i]);
    const double p = predicted.at(i, cls);
    if (p > kLogClamp && p < 1.0 - kLogClamp)
      grad.at(i, cls) = -1.0 / (p * static_cast<double>(n));
  }
  return grad;
}

/// Inverted dropout. Returns the output; when mask_out is given, the per-element
/// scale (0 or 1/(1-rate)) is stored there for the backward pass.
inline Array dropout(const Array &input, double rate, std::uint64_t seed,
                     bool training, Array *mask_out = nullptr) {
  if (!(rate >= 0.0 && rate < 1.0))
    fail(ErrorKind::Validation,
         "dropout rate must lie in [0,1), got " + std::to_string(rate));
  if (!training || rate == 0.0) {
    if (mask_out)
      *mask_out = Array(input.shape(), 1.0);
    return input;
  }
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  Array out(input.shape());
  Array mask(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out[i] = input[i] * mask[i];
  }
  if (mask_out)
    *mask_out = std::move(mask);
  return out;
}

inline Array map(const Array &in, double (*fn)(double)) {
  Array out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i)
    out[i] = fn(in[i]);
  return out;
}

inline Array sigmoid(const Array &x) { return map(x, [](double v) { return sigmoid(v); }); }
inline Array tanh(const Array &x) { return map(x, [](double v) { return std::tanh(v); }); }

inline Array sigmoid_backward(const Array &y, const Array &grad_y) {
  require_same_shape(y, grad_y, "sigmoid_backward");
  Array out(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i)
    out[i] = grad_y[i] * y[i] * (1.0 - y[i]);
  return out;
}

inline Array tanh_backward(const Array &y, const Array &grad_y) {
  require_same_shape(y, grad_y, "tanh_backward");
  Array out(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i)
    out[i] = grad_y[i] * (1.0 - y[i] * y[i]);
  return out;
}

inline Array multiply(const Array &a, const Array &b) {
  require_same_shape(a, b, "multiply");
  Array out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = a[i] * b[i];
  return out;
}

inline bool all_finite(const Array &a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

} // namespace riskseq
