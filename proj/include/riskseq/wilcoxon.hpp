// SPDX-License-Identifier: Apache-2.0
/**
 * @file   wilcoxon.hpp
 * @brief  Two-sided Wilcoxon signed-rank test for paired per-seed metrics.
 *
 * Zero differences are dropped, tied |d| share average ranks. z is computed
 * from W+ so it is signed: positive when a tends to exceed b. Its magnitude
 * equals the one obtained from W = min(W+, W-).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace riskseq {

enum class WilcoxonMethod { Auto, Exact, NormalApproximation };

inline std::string_view to_string(WilcoxonMethod m) {
  switch (m) {
  case WilcoxonMethod::Auto: return "auto";
  case WilcoxonMethod::Exact: return "exact";
  case WilcoxonMethod::NormalApproximation: return "normal_approximation";
  }
  return "?";
}

inline constexpr std::size_t kExactWilcoxonLimit = 12;
inline constexpr std::size_t kMinWilcoxonPairs = 5;

struct ComparisonResult {
  double z_value = 0.0;
  double p_value = 1.0;
  std::optional<double> significant_at; // 0.001, 0.005 or none
  std::size_t n_pairs = 0;
  WilcoxonMethod method = WilcoxonMethod::Exact;
  double w_plus = 0.0;
  double w_minus = 0.0;
  double w = 0.0;
};

inline std::optional<double> significance_level(double p) {
  if (p < 0.001)
    return 0.001;
  if (p < 0.005)
    return 0.005;
  return std::nullopt;
}

namespace detail {

struct SignedRanks {
  std::vector<std::uint64_t> doubled; // 2 x average rank of |d|
  std::vector<bool> positive;
  double tie_term = 0.0;              // sum over tie groups of t^3 - t
};

inline SignedRanks signed_ranks(std::span<const double> diffs) {
  std::vector<double> d;
  for (double x : diffs)
    if (x != 0.0)
      d.push_back(x);
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  SignedRanks r{std::vector<std::uint64_t>(n), std::vector<bool>(n), 0.0};
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]]))
      ++j;
    const double t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    for (std::size_t k = i; k <= j; ++k) {
      r.doubled[k] = i + j + 2;
      r.positive[k] = d[order[k]] > 0.0;
    }
    i = j + 1;
  }
  return r;
}

/// P(min(W+, W-) <= observed) over all 2^n equally likely sign assignments.
inline double exact_p(const std::vector<std::uint64_t> &doubled, std::uint64_t observed_min) {
  const std::size_t n = doubled.size();
  const std::uint64_t total = std::accumulate(doubled.begin(), doubled.end(), std::uint64_t{0});
  // Count sign assignments by W+ via a subset-sum table over doubled ranks.
  std::vector<std::uint64_t> ways(total + 1, 0);
  ways[0] = 1;
  for (auto r : doubled)
    for (std::uint64_t s = total; s + 1 > r; --s)
      ways[s] += ways[s - r];
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s <= total; ++s)
    if (std::min(s, total - s) <= observed_min)
      hits += ways[s];
  return static_cast<double>(hits) / std::ldexp(1.0, static_cast<int>(n));
}

} // namespace detail

inline ComparisonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                             WilcoxonMethod method = WilcoxonMethod::Auto) {
  if (a.size() != b.size())
    fail(ErrorKind::Dimension, "wilcoxon: " + std::to_string(a.size()) + " vs " +
                                   std::to_string(b.size()) + " paired values");
  std::vector<double> diffs(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    diffs[i] = a[i] - b[i];
  const auto ranks = detail::signed_ranks(diffs);
  const std::size_t n = ranks.doubled.size();
  if (n == 0)
    fail(ErrorKind::Degenerate, "wilcoxon: all paired differences are zero");
  if (n < kMinWilcoxonPairs)
    fail(ErrorKind::Validation, "wilcoxon: " + std::to_string(n) +
                                    " non-zero differences, need at least " +
                                    std::to_string(kMinWilcoxonPairs));

  std::uint64_t plus2 = 0, minus2 = 0;
  for (std::size_t i = 0; i < n; ++i)
    (ranks.positive[i] ? plus2 : minus2) += ranks.doubled[i];

  ComparisonResult r;
  r.n_pairs = n;
  r.w_plus = static_cast<double>(plus2) / 2.0;
  r.w_minus = static_cast<double>(minus2) / 2.0;
  r.w = std::min(r.w_plus, r.w_minus);
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  const double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - ranks.tie_term / 48.0;
  r.z_value = variance > 0.0 ? (r.w_plus - mean) / std::sqrt(variance) : 0.0;

  r.method = method;
  if (method == WilcoxonMethod::Auto)
    r.method = n <= kExactWilcoxonLimit ? WilcoxonMethod::Exact
                                        : WilcoxonMethod::NormalApproximation;
  if (r.method == WilcoxonMethod::Exact) {
    if (n > 40)
      fail(ErrorKind::Validation, "wilcoxon: exact enumeration limited to 40 pairs");
    r.p_value = std::min(1.0, detail::exact_p(ranks.doubled, std::min(plus2, minus2)));
  } else {
    r.p_value = std::min(1.0, std::erfc(std::abs(r.z_value) / std::sqrt(2.0)));
  }
  r.significant_at = significance_level(r.p_value);
  return r;
}

} // namespace riskseq
