// SPDX-License-Identifier: Apache-2.0
/**
 * @file   recurrent.hpp
 * @brief  Masked single-layer LSTM and GRU with backpropagation through time.
 *
 * Parameter layout, for input width d and hidden width h:
 *   LSTM  W: d x 4h, U: h x 4h, b: 4h, gate blocks (input, forget, cell, output)
 *   GRU   W: d x 3h, U: h x 3h, b: 3h, gate blocks (update, reset, candidate)
 *
 * LSTM:  c_t = f * c_{t-1} + i * g,            h_t = o * tanh(c_t)
 * GRU:   n   = tanh(x W_n + (r * h_{t-1}) U_n + b_n),
 *        h_t = (1 - z) * h_{t-1} + z * n
 *
 * The initial state is zero. At a masked-out step the previous hidden and cell
 * state are carried unchanged and no gate is evaluated, so padded steps never
 * touch the parameters or receive input gradient.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "array.hpp"
#include "ops.hpp"

namespace riskseq {

enum class CellType { LSTM, GRU };

inline std::size_t gate_count(CellType cell) { return cell == CellType::LSTM ? 4 : 3; }

struct RecurrentCache {
  CellType cell = CellType::LSTM;
  Array hidden; // b x L x h
  Array cells;  // b x L x h (LSTM only)
  Array gates;  // b x L x (4h | 3h), post-activation
};

struct RecurrentGrads {
  Array W;
  Array U;
  Array b;
  Array inputs;
};

namespace detail {

inline void check_recurrent_shapes(CellType cell, const Array &W, const Array &U,
                                   const Array &b, const Array &inputs,
                                   std::span<const std::uint8_t> mask) {
  if (inputs.rank() != 3)
    fail(ErrorKind::Dimension, "recurrent input must be b x L x d, got " +
                                   shape_string(inputs.shape()));
  if (U.rank() != 2 || U.dim(1) % gate_count(cell) != 0)
    fail(ErrorKind::Dimension, "recurrent U has shape " + shape_string(U.shape()));
  const std::size_t h = U.dim(0);
  const std::size_t gh = gate_count(cell) * h;
  require_shape(U, {h, gh}, "recurrent U");
  require_shape(W, {inputs.dim(2), gh}, "recurrent W");
  require_shape(b, {gh}, "recurrent b");
  if (mask.size() != inputs.dim(0) * inputs.dim(1))
    fail(ErrorKind::Dimension, "recurrent mask length does not match b x L");
}

// out[j] += sum_k x[k] * w[k][offset + j] for j < out.size().
inline void accumulate_matvec_block(std::span<const double> x, const Array &w,
                                    std::size_t offset, std::span<double> out) {
  const std::size_t cols = w.dim(1);
  const double *wp = w.values().data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0)
      continue;
    const double *wrow = wp + k * cols + offset;
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] += xk * wrow[j];
  }
}

// out[k] += sum_j w[k][offset + j] * g[j].
inline void accumulate_matvec_block_t(std::span<const double> g, const Array &w,
                                      std::size_t offset, std::span<double> out) {
  const std::size_t cols = w.dim(1);
  const double *wp = w.values().data();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double *wrow = wp + k * cols + offset;
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j)
      s += wrow[j] * g[j];
    out[k] += s;
  }
}

// dw[k][offset + j] += x[k] * g[j].
inline void accumulate_outer_block(std::span<const double> x, std::span<const double> g,
                                   std::size_t offset, Array &dw) {
  const std::size_t cols = dw.dim(1);
  double *dp = dw.values().data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0)
      continue;
    double *drow = dp + k * cols + offset;
    for (std::size_t j = 0; j < g.size(); ++j)
      drow[j] += xk * g[j];
  }
}

} // namespace detail

inline RecurrentCache recurrent_forward(CellType cell, const Array &W, const Array &U,
                                        const Array &b, const Array &inputs,
                                        std::span<const std::uint8_t> mask) {
  detail::check_recurrent_shapes(cell, W, U, b, inputs, mask);
  const std::size_t B = inputs.dim(0), L = inputs.dim(1), h = U.dim(0);
  const std::size_t gh = gate_count(cell) * h;
  RecurrentCache cache{cell, Array({B, L, h}),
                       cell == CellType::LSTM ? Array({B, L, h}) : Array(),
                       Array({B, L, gh})};
  std::vector<double> h_prev(h), c_prev(h), pre(gh), reset_h(h);
  for (std::size_t i = 0; i < B; ++i) {
    std::fill(h_prev.begin(), h_prev.end(), 0.0);
    std::fill(c_prev.begin(), c_prev.end(), 0.0);
    for (std::size_t t = 0; t < L; ++t) {
      auto h_out = cache.hidden.row(i, t);
      if (!mask[i * L + t]) {
        std::ranges::copy(h_prev, h_out.begin());
        if (cell == CellType::LSTM)
          std::ranges::copy(c_prev, cache.cells.row(i, t).begin());
        continue;
      }
      std::ranges::copy(b.values(), pre.begin());
      accumulate_matvec(inputs.row(i, t), W, pre);
      auto gate = cache.gates.row(i, t);
      if (cell == CellType::LSTM) {
        accumulate_matvec(h_prev, U, pre);
        auto c_out = cache.cells.row(i, t);
        for (std::size_t k = 0; k < h; ++k) {
          const double ig = sigmoid(pre[k]);
          const double fg = sigmoid(pre[h + k]);
          const double gg = std::tanh(pre[2 * h + k]);
          const double og = sigmoid(pre[3 * h + k]);
          gate[k] = ig;
          gate[h + k] = fg;
          gate[2 * h + k] = gg;
          gate[3 * h + k] = og;
          c_out[k] = fg * c_prev[k] + ig * gg;
          h_out[k] = og * std::tanh(c_out[k]);
        }
        std::ranges::copy(c_out, c_prev.begin());
      } else {
        detail::accumulate_matvec_block(h_prev, U, 0, std::span(pre).first(2 * h));
        for (std::size_t k = 0; k < 2 * h; ++k)
          gate[k] = sigmoid(pre[k]);
        for (std::size_t k = 0; k < h; ++k)
          reset_h[k] = gate[h + k] * h_prev[k];
        detail::accumulate_matvec_block(reset_h, U, 2 * h, std::span(pre).subspan(2 * h));
        for (std::size_t k = 0; k < h; ++k) {
          const double z = gate[k];
          const double n = std::tanh(pre[2 * h + k]);
          gate[2 * h + k] = n;
          h_out[k] = (1.0 - z) * h_prev[k] + z * n;
        }
      }
      std::ranges::copy(h_out, h_prev.begin());
    }
  }
  return cache;
}

/// BPTT given dL/d(hidden states). Masked steps pass the carried gradient
/// straight through and contribute nothing else.
inline RecurrentGrads recurrent_backward(const Array &W, const Array &U, const Array &b,
                                         const Array &inputs,
                                         std::span<const std::uint8_t> mask,
                                         const RecurrentCache &cache,
                                         const Array &grad_hidden) {
  const CellType cell = cache.cell;
  detail::check_recurrent_shapes(cell, W, U, b, inputs, mask);
  require_same_shape(grad_hidden, cache.hidden, "recurrent_backward grad");
  const std::size_t B = inputs.dim(0), L = inputs.dim(1), h = U.dim(0);
  const std::size_t gh = gate_count(cell) * h;
  RecurrentGrads g{Array(W.shape()), Array(U.shape()), Array(b.shape()),
                   Array(inputs.shape())};
  std::vector<double> dh(h), dh_carry(h), dc_carry(h), dpre(gh), zeros(h, 0.0),
      reset_h(h), d_reset_h(h);
  for (std::size_t i = 0; i < B; ++i) {
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    std::fill(dc_carry.begin(), dc_carry.end(), 0.0);
    for (std::size_t t = L; t-- > 0;) {
      auto gh_in = grad_hidden.row(i, t);
      for (std::size_t k = 0; k < h; ++k)
        dh[k] = gh_in[k] + dh_carry[k];
      if (!mask[i * L + t]) {
        std::ranges::copy(dh, dh_carry.begin());
        continue;
      }
      std::span<const double> h_prev =
          t == 0 ? std::span<const double>(zeros) : cache.hidden.row(i, t - 1);
      auto gate = cache.gates.row(i, t);
      if (cell == CellType::LSTM) {
        std::span<const double> c_prev =
            t == 0 ? std::span<const double>(zeros) : cache.cells.row(i, t - 1);
        auto c = cache.cells.row(i, t);
        for (std::size_t k = 0; k < h; ++k) {
          const double ig = gate[k], fg = gate[h + k], gg = gate[2 * h + k],
                       og = gate[3 * h + k];
          const double tc = std::tanh(c[k]);
          const double dc = dc_carry[k] + dh[k] * og * (1.0 - tc * tc);
          dpre[k] = dc * gg * ig * (1.0 - ig);
          dpre[h + k] = dc * c_prev[k] * fg * (1.0 - fg);
          dpre[2 * h + k] = dc * ig * (1.0 - gg * gg);
          dpre[3 * h + k] = dh[k] * tc * og * (1.0 - og);
          dc_carry[k] = dc * fg;
        }
        std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
        accumulate_matvec_t(dpre, U, dh_carry);
        accumulate_outer(h_prev, dpre, g.U);
      } else {
        for (std::size_t k = 0; k < h; ++k) {
          const double z = gate[k], n = gate[2 * h + k];
          dpre[k] = dh[k] * (n - h_prev[k]) * z * (1.0 - z);
          dpre[2 * h + k] = dh[k] * z * (1.0 - n * n);
          dh_carry[k] = dh[k] * (1.0 - z);
          reset_h[k] = gate[h + k] * h_prev[k];
        }
        auto d_cand = std::span<const double>(dpre).subspan(2 * h);
        std::fill(d_reset_h.begin(), d_reset_h.end(), 0.0);
        detail::accumulate_matvec_block_t(d_cand, U, 2 * h, d_reset_h);
        detail::accumulate_outer_block(reset_h, d_cand, 2 * h, g.U);
        for (std::size_t k = 0; k < h; ++k) {
          const double r = gate[h + k];
          dpre[h + k] = d_reset_h[k] * h_prev[k] * r * (1.0 - r);
          dh_carry[k] += d_reset_h[k] * r;
        }
        auto d_zr = std::span<const double>(dpre).first(2 * h);
        detail::accumulate_matvec_block_t(d_zr, U, 0, dh_carry);
        detail::accumulate_outer_block(h_prev, d_zr, 0, g.U);
      }
      accumulate_outer(inputs.row(i, t), dpre, g.W);
      accumulate_matvec_t(dpre, W, g.inputs.row(i, t));
      for (std::size_t k = 0; k < gh; ++k)
        g.b[k] += dpre[k];
    }
  }
  return g;
}

inline Array lstm_forward(const Array &W, const Array &U, const Array &b,
                          const Array &inputs, std::span<const std::uint8_t> mask) {
  return recurrent_forward(CellType::LSTM, W, U, b, inputs, mask).hidden;
}

inline Array gru_forward(const Array &W, const Array &U, const Array &b,
                         const Array &inputs, std::span<const std::uint8_t> mask) {
  return recurrent_forward(CellType::GRU, W, U, b, inputs, mask).hidden;
}

} // namespace riskseq
