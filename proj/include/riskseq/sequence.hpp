// SPDX-License-Identifier: Apache-2.0
/**
 * @file   sequence.hpp
 * @brief  Time-decay factors and padded, masked mini-batches.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "array.hpp"

namespace riskseq {

inline constexpr double kSecondsPerDay = 86400.0;

/// decay[0] = 1 and decay[i] = exp(-(t_i - t_{i-1}) / 86400).
inline Array compute_decay(std::span<const std::int64_t> timestamps) {
  Array decay({timestamps.size()});
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (i == 0) {
      decay[i] = 1.0;
      continue;
    }
    if (timestamps[i] < timestamps[i - 1])
      fail(ErrorKind::Validation,
           "timestamps decrease at position " + std::to_string(i) + " (" +
               std::to_string(timestamps[i - 1]) + " -> " +
               std::to_string(timestamps[i]) + ")");
    const double gap = static_cast<double>(timestamps[i] - timestamps[i - 1]);
    decay[i] = std::exp(-gap / kSecondsPerDay);
  }
  return decay;
}

/// One user's encoded sequence before batching.
struct EncodedUser {
  Array text;    // L x d_text
  Array emotion; // L x 7
  Array decay;   // L
  int label = 0;

  std::size_t length() const { return text.empty() ? 0 : text.dim(0); }
};

struct EncodedBatch {
  Array text;    // b x L x d_text
  Array emotion; // b x L x 7
  Array decay;   // b x L
  std::vector<std::uint8_t> mask; // b x L, row-major
  std::vector<int> labels;
  std::vector<std::size_t> lengths;

  std::size_t batch_size() const { return labels.size(); }
  std::size_t max_length() const { return text.dim(1); }
  bool valid(std::size_t i, std::size_t t) const { return mask[i * max_length() + t] != 0; }
};

struct PadOptions {
  /// Common length; defaults to the longest sequence in the batch.
  std::optional<std::size_t> max_length;
  /// Keep only the most recent max_length posts of longer users instead of failing.
  bool truncate = false;
};

inline EncodedBatch pad_and_mask(std::span<const EncodedUser> users,
                                 const PadOptions &options = {}) {
  if (users.empty())
    fail(ErrorKind::Validation, "pad_and_mask: empty batch");
  const std::size_t d_text = users.front().text.dim(1);
  const std::size_t d_emotion = users.front().emotion.dim(1);
  std::size_t longest = 0;
  for (const auto &u : users) {
    if (u.length() == 0)
      fail(ErrorKind::Validation, "pad_and_mask: empty user sequence");
    if (u.text.dim(1) != d_text || u.emotion.dim(1) != d_emotion ||
        u.emotion.dim(0) != u.length() || u.decay.size() != u.length())
      fail(ErrorKind::Dimension, "pad_and_mask: inconsistent user arrays");
    longest = std::max(longest, u.length());
  }
  const std::size_t L = options.max_length.value_or(longest);
  if (L == 0)
    fail(ErrorKind::Validation, "pad_and_mask: L_max must be at least 1");

  const std::size_t b = users.size();
  EncodedBatch batch{Array({b, L, d_text}), Array({b, L, d_emotion}), Array({b, L}),
                     std::vector<std::uint8_t>(b * L, 0), {}, {}};
  for (std::size_t i = 0; i < b; ++i) {
    const auto &u = users[i];
    std::size_t first = 0;
    if (u.length() > L) {
      if (!options.truncate)
        fail(ErrorKind::Validation, "sequence of length " + std::to_string(u.length()) +
                                        " exceeds L_max " + std::to_string(L));
      first = u.length() - L;
    }
    const std::size_t n = u.length() - first;
    for (std::size_t t = 0; t < n; ++t) {
      std::ranges::copy(u.text.row(first + t), batch.text.row(i, t).begin());
      std::ranges::copy(u.emotion.row(first + t), batch.emotion.row(i, t).begin());
      batch.decay.at(i, t) = u.decay[first + t];
      batch.mask[i * L + t] = 1;
    }
    batch.labels.push_back(u.label);
    batch.lengths.push_back(n);
  }
  return batch;
}

} // namespace riskseq
