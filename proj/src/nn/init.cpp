// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nn/init.hpp"

#include <cmath>
#include <random>

#include "common/files.hpp"

namespace avseci::nn {

void glorot_uniform(Parameter& p, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::mt19937_64 rng(derive_seed(seed, p.name));
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& v : p.value.values) v = dist(rng);
}

}  // namespace avseci::nn
