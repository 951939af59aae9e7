// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <vector>

namespace avseci {

// Marks the k largest of x[0..n) in keep[0..n). Equal values rank the lower
// index first, so the selection is a deterministic function of the values.
inline void select_topk(const double* x, std::size_t n, std::size_t k, bool* keep) {
  constexpr std::size_t kMaxInline = 64;
  std::array<std::size_t, kMaxInline> idx_inline{};
  std::vector<std::size_t> idx_heap;
  std::size_t* idx = idx_inline.data();
  if (n > kMaxInline) {
    idx_heap.resize(n);
    idx = idx_heap.data();
  }
  std::iota(idx, idx + n, std::size_t{0});
  k = std::min(k, n);
  auto before = [x](std::size_t a, std::size_t b) {
    return x[a] > x[b] || (x[a] == x[b] && a < b);
  };
  if (k > 0 && k < n) std::nth_element(idx, idx + (k - 1), idx + n, before);
  std::fill(keep, keep + n, false);
  for (std::size_t i = 0; i < k; ++i) keep[idx[i]] = true;
}

}  // namespace avseci
