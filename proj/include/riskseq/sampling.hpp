// SPDX-License-Identifier: Apache-2.0
/**
 * @file   sampling.hpp
 * @brief  Majority-class downsampling and stratified train/val/test splits.
 */
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "corpus.hpp"
#include "random.hpp"

namespace riskseq {

/// Keeps every minority user and a uniform seeded subset of the majority of the
/// same size. Selected users keep their corpus order.
inline Corpus downsample(const Corpus &corpus, std::uint64_t seed) {
  if (corpus.negatives() == corpus.positives())
    return corpus;
  const int minority = corpus.positives() < corpus.negatives() ? 1 : 0;
  const std::size_t keep = std::min(corpus.positives(), corpus.negatives());
  if (keep == 0)
    fail(ErrorKind::Validation, "cannot downsample: minority class is empty");

  std::vector<std::size_t> majority;
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    (corpus.users()[i].label == minority ? selected : majority).push_back(i);

  Rng rng(derive_seed(seed, "downsample"));
  // Partial Fisher-Yates: the first `keep` slots become the sample.
  for (std::size_t i = 0; i < keep; ++i)
    std::swap(majority[i], majority[i + rng.below(majority.size() - i)]);
  selected.insert(selected.end(), majority.begin(), majority.begin() + keep);
  std::sort(selected.begin(), selected.end());
  return subset(corpus, selected);
}

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct CorpusSplit {
  Corpus train;
  Corpus val;
  Corpus test;
};

namespace detail {

// Largest-remainder apportionment of n items over the three fractions.
inline std::array<std::size_t, 3> apportion(std::size_t n, const SplitFractions &f) {
  const std::array<double, 3> frac{f.train, f.val, f.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t used = 0;
  for (int k = 0; k < 3; ++k) {
    const double exact = frac[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainder[k] = exact - static_cast<double>(counts[k]);
    used += counts[k];
  }
  while (used < n) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (remainder[k] > remainder[best] + 1e-12)
        best = k;
    ++counts[best];
    remainder[best] = -1.0;
    ++used;
  }
  return counts;
}

} // namespace detail

/// Stratified seeded split; every user lands in exactly one part.
inline CorpusSplit split(const Corpus &corpus, const SplitFractions &fractions,
                         std::uint64_t seed) {
  const double sum = fractions.train + fractions.val + fractions.test;
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 ||
      std::abs(sum - 1.0) > 1e-9)
    fail(ErrorKind::Validation, "split fractions must be non-negative and sum to 1");

  std::array<std::vector<std::size_t>, 3> parts;
  for (int label : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (corpus.users()[i].label == label)
        members.push_back(i);
    Rng rng(derive_seed(seed, "split", static_cast<std::uint64_t>(label)));
    rng.shuffle(members);
    const auto counts = detail::apportion(members.size(), fractions);
    static constexpr const char *names[] = {"train", "val", "test"};
    std::size_t offset = 0;
    for (int k = 0; k < 3; ++k) {
      if (counts[k] == 0)
        fail(ErrorKind::Validation,
             std::string("stratification error: ") + names[k] +
                 " split would receive no users of class " + std::to_string(label));
      parts[k].insert(parts[k].end(), members.begin() + offset,
                      members.begin() + offset + counts[k]);
      offset += counts[k];
    }
  }
  for (auto &p : parts)
    std::sort(p.begin(), p.end());
  return {subset(corpus, parts[0]), subset(corpus, parts[1]), subset(corpus, parts[2])};
}

} // namespace riskseq
