// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <vector>

#include "signal/waveform.hpp"

namespace avseci::data {

struct MixResult {
  signal::Waveform noisy;
  std::vector<double> noise;  // scaled noise segment as added (before peak rescale)
  double gain = 1.0;          // applied to the noise segment
  double scale = 1.0;         // peak rescale applied to the sum (<= 1)
  std::size_t offset = 0;     // start of the noise segment
};

// noisy = scale * (clean + gain * noise[offset ...]); the noise is looped
// when shorter than the clean signal.
MixResult mix_at_snr(const signal::Waveform& clean, const signal::Waveform& noise, double snr_db,
                     std::uint64_t seed);

double measured_snr_db(const std::vector<double>& clean, const std::vector<double>& noise);

}  // namespace avseci::data
