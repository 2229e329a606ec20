#pragma once

// Independent oracles for the permutation test. Both stay clear of the
// Monte-Carlo implementation path: the first literally enumerates every
// C(2n, n) relabeling of the pooled observations, the second evaluates the
// equivalent hypergeometric tail with exact integer binomials. The unit tests
// assert the two agree before either is used as a reference.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace testsup {

// Exact one-sided p over all relabelings: fraction of 11/11 splits whose
// statistic is >= the observed one (ties extreme, no Monte-Carlo +1 term).
inline double enumerate_permutation_p(const std::vector<std::uint8_t>& spoof,
                                      const std::vector<std::uint8_t>& control) {
  const std::size_t n = spoof.size();
  std::vector<std::uint8_t> pooled(spoof);
  pooled.insert(pooled.end(), control.begin(), control.end());
  const int spoof_ones = std::accumulate(spoof.begin(), spoof.end(), 0);
  const int control_ones = std::accumulate(control.begin(), control.end(), 0);
  const int threshold = spoof_ones - control_ones + spoof_ones + control_ones;

  // mask[i] == 1 marks position i as relabeled into the spoof group; starting
  // from the sorted mask, next_permutation walks every distinct assignment.
  std::vector<std::uint8_t> mask(pooled.size(), 0);
  std::fill(mask.begin() + static_cast<std::ptrdiff_t>(n), mask.end(), 1);
  std::sort(mask.begin(), mask.end());

  std::uint64_t total = 0;
  std::uint64_t extreme = 0;
  do {
    int k = 0;
    for (std::size_t i = 0; i < pooled.size(); ++i) {
      if (mask[i]) k += pooled[i];
    }
    ++total;
    if (2 * k >= threshold) ++extreme;
  } while (std::next_permutation(mask.begin(), mask.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<std::uint64_t>(n - k + i) /
             static_cast<std::uint64_t>(i);
  }
  return result;
}

// Same tail probability via the hypergeometric distribution of how many of
// the pooled ones land in the spoof group.
inline double hypergeometric_permutation_p(const std::vector<std::uint8_t>& spoof,
                                           const std::vector<std::uint8_t>& control) {
  const int n = static_cast<int>(spoof.size());
  const int spoof_ones = std::accumulate(spoof.begin(), spoof.end(), 0);
  const int control_ones = std::accumulate(control.begin(), control.end(), 0);
  const int total_ones = spoof_ones + control_ones;
  const int threshold = spoof_ones - control_ones + total_ones;  // 2k >= this

  std::uint64_t extreme = 0;
  for (int k = 0; k <= std::min(total_ones, n); ++k) {
    if (2 * k < threshold) continue;
    extreme += binomial(total_ones, k) * binomial(2 * n - total_ones, n - k);
  }
  return static_cast<double>(extreme) / static_cast<double>(binomial(2 * n, n));
}

}  // namespace testsup
