// SPDX-License-Identifier: Apache-2.0
/**
 * @file   optim.hpp
 * @brief  Named parameter storage with Adam moments.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "array.hpp"

namespace riskseq {

using GradientMap = std::map<std::string, Array>;

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class ParameterSet {
public:
  /// Registers a parameter and zeroed moments of the same shape.
  void add(const std::string &name, Array value) {
    if (values_.count(name))
      fail(ErrorKind::Duplicate, "parameter '" + name + "' already defined");
    first_.emplace(name, Array(value.shape()));
    second_.emplace(name, Array(value.shape()));
    values_.emplace(name, std::move(value));
  }

  bool contains(const std::string &name) const { return values_.count(name) != 0; }

  const Array &get(const std::string &name) const {
    auto it = values_.find(name);
    if (it == values_.end())
      fail(ErrorKind::Lookup, "unknown parameter '" + name + "'");
    return it->second;
  }

  Array &get_mutable(const std::string &name) {
    auto it = values_.find(name);
    if (it == values_.end())
      fail(ErrorKind::Lookup, "unknown parameter '" + name + "'");
    return it->second;
  }

  const Array &first_moment(const std::string &name) const { return first_.at(name); }
  const Array &second_moment(const std::string &name) const { return second_.at(name); }

  const std::map<std::string, Array> &values() const noexcept { return values_; }
  std::uint64_t step() const noexcept { return step_; }
  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto &[_, v] : values_)
      n += v.size();
    return n;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto &[_, v] : values_)
      for (double x : v.values())
        m = std::isnan(x) ? x : std::max(m, std::abs(x));
    return m;
  }

  /// Restores optimizer state alongside the values (checkpoint loading).
  void restore_state(std::uint64_t step, std::map<std::string, Array> first,
                     std::map<std::string, Array> second) {
    step_ = step;
    first_ = std::move(first);
    second_ = std::move(second);
  }

  /// One bias-corrected Adam update. Elements whose gradient is exactly zero
  /// (or absent) keep their value; their moments still decay.
  void adam_step(const GradientMap &gradients, double learning_rate,
                 const AdamHyper &hyper = {}) {
    for (const auto &[name, grad] : gradients) {
      auto it = values_.find(name);
      if (it == values_.end())
        fail(ErrorKind::Lookup, "gradient for unknown parameter '" + name + "'");
      require_same_shape(it->second, grad, "adam_step '" + name + "'");
    }
    ++step_;
    const double t = static_cast<double>(step_);
    const double correction1 = 1.0 - std::pow(hyper.beta1, t);
    const double correction2 = 1.0 - std::pow(hyper.beta2, t);
    for (auto &[name, value] : values_) {
      Array &m = first_.at(name);
      Array &v = second_.at(name);
      auto git = gradients.find(name);
      const Array *g = git == gradients.end() ? nullptr : &git->second;
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double gi = g ? (*g)[i] : 0.0;
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gi;
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gi * gi;
        if (gi == 0.0)
          continue;
        const double m_hat = m[i] / correction1;
        const double v_hat = v[i] / correction2;
        value[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
      }
    }
  }

  bool operator==(const ParameterSet &) const = default;

private:
  std::map<std::string, Array> values_;
  std::map<std::string, Array> first_;
  std::map<std::string, Array> second_;
  std::uint64_t step_ = 0;
};

inline double global_norm(const GradientMap &grads) {
  double s = 0.0;
  for (const auto &[_, g] : grads)
    for (double x : g.values())
      s += x * x;
  return std::sqrt(s);
}

/// Rescales all gradients so their joint L2 norm is at most max_norm.
inline void clip_global_norm(GradientMap &grads, double max_norm) {
  const double norm = global_norm(grads);
  if (!(norm > max_norm))
    return;
  const double scale = max_norm / norm;
  for (auto &[_, g] : grads)
    for (double &x : g.values())
      x *= scale;
}

} // namespace riskseq
