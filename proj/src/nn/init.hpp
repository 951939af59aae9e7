// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>

#include "nn/tensor.hpp"

namespace avseci::nn {

// uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)); the stream is seeded from
// (seed, parameter name) so adding layers does not perturb existing ones.
void glorot_uniform(Parameter& p, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed);

}  // namespace avseci::nn
