// SPDX-License-Identifier: Apache-2.0
/**
 * @file   metrics.hpp
 * @brief  Confusion-matrix metrics, AUROC (pairwise and rank-sum) and
 *         step-wise AUPRC. Positive class is label 1.
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "error.hpp"

namespace riskseq {

struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auroc = 0.0;
  double auprc = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::uint64_t seed = 0;
  // Set when the metric's denominator was zero and 0 was reported instead.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  bool has_ranking = false;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const MetricsReport &) const = default;
};

namespace detail {

inline void check_binary(std::span<const int> labels, const char *what) {
  for (int y : labels)
    if (y != 0 && y != 1)
      fail(ErrorKind::Validation, std::string(what) + ": label " + std::to_string(y) +
                                      " is not 0 or 1");
}

inline void check_scored(std::span<const double> scores, std::span<const int> labels,
                         const char *what) {
  if (scores.size() != labels.size())
    fail(ErrorKind::Dimension, std::string(what) + ": " + std::to_string(scores.size()) +
                                   " scores vs " + std::to_string(labels.size()) + " labels");
  if (scores.empty())
    fail(ErrorKind::Validation, std::string(what) + ": empty input");
  check_binary(labels, what);
}

} // namespace detail

inline MetricsReport classification_metrics(std::span<const int> predicted,
                                            std::span<const int> truth) {
  if (predicted.size() != truth.size())
    fail(ErrorKind::Dimension, "classification_metrics: " + std::to_string(predicted.size()) +
                                   " predictions vs " + std::to_string(truth.size()) + " labels");
  if (truth.empty())
    fail(ErrorKind::Validation, "classification_metrics: empty input");
  detail::check_binary(predicted, "classification_metrics");
  detail::check_binary(truth, "classification_metrics");
  MetricsReport r;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == 1)
      ++(truth[i] == 1 ? r.tp : r.fp);
    else
      ++(truth[i] == 1 ? r.fn : r.tn);
  }
  const auto d = [](std::size_t x) { return static_cast<double>(x); };
  r.accuracy = d(r.tp + r.tn) / d(r.total());
  if (r.tp + r.fp > 0)
    r.precision = d(r.tp) / d(r.tp + r.fp);
  else
    r.precision_undefined = true;
  if (r.tp + r.fn > 0)
    r.recall = d(r.tp) / d(r.tp + r.fn);
  else
    r.recall_undefined = true;
  if (r.precision + r.recall > 0.0)
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  else
    r.f1_undefined = true;
  return r;
}

/// Brute force over every (positive, negative) pair; ties count one half.
inline double auroc_pairwise(std::span<const double> scores, std::span<const int> labels) {
  detail::check_scored(scores, labels, "auroc");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i)
    (labels[i] ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty())
    fail(ErrorKind::UndefinedMetric, "auroc needs both classes");
  // Doubled win counts stay integral.
  std::uint64_t doubled = 0;
  for (double p : pos)
    for (double n : neg)
      doubled += p > n ? 2 : (p == n ? 1 : 0);
  return static_cast<double>(doubled) /
         (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

/// Mann-Whitney rank-sum form with average ranks for tied scores.
inline double auroc_ranksum(std::span<const double> scores, std::span<const int> labels) {
  detail::check_scored(scores, labels, "auroc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::uint64_t positives = 0, doubled_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]])
      ++j;
    // Ranks i+1..j+1 share the average (i+j+2)/2; keep it doubled.
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]]) {
        ++positives;
        doubled_rank_sum += i + j + 2;
      }
    i = j + 1;
  }
  const std::uint64_t negatives = n - positives;
  if (positives == 0 || negatives == 0)
    fail(ErrorKind::UndefinedMetric, "auroc needs both classes");
  const std::uint64_t doubled_u = doubled_rank_sum - positives * (positives + 1);
  return static_cast<double>(doubled_u) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

inline constexpr std::size_t kPairwiseAurocLimit = 10'000;

/// Pairwise enumeration up to 10^4 scores, rank-sum above.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() <= kPairwiseAurocLimit)
    return auroc_pairwise(scores, labels);
  return auroc_ranksum(scores, labels);
}

/// Average precision: sum over distinct score thresholds (descending) of
/// recall increment times precision at that threshold.
inline double auprc(std::span<const double> scores, std::span<const int> labels) {
  detail::check_scored(scores, labels, "auprc");
  const std::size_t n = scores.size();
  const auto total_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (total_pos == 0)
    fail(ErrorKind::UndefinedMetric, "auprc needs at least one positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i, group_tp = 0;
    while (j < n && scores[order[j]] == scores[order[i]])
      group_tp += labels[order[j++]] == 1 ? 1 : 0;
    tp += group_tp;
    seen = j;
    if (group_tp > 0)
      ap += (static_cast<double>(group_tp) / static_cast<double>(total_pos)) *
            (static_cast<double>(tp) / static_cast<double>(seen));
    i = j;
  }
  return ap;
}

/// Label metrics plus both ranking metrics from positive-class scores and
/// argmax predictions.
inline MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> predicted,
                                     std::span<const int> truth) {
  MetricsReport r = classification_metrics(predicted, truth);
  r.auroc = auroc(scores, truth);
  r.auprc = auprc(scores, truth);
  r.has_ranking = true;
  return r;
}

} // namespace riskseq
