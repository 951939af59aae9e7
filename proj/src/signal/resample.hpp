// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include "signal/waveform.hpp"

namespace avseci::signal {

// Band-limited resampling with a Kaiser-windowed sinc whose cutoff sits at
// the lower of the two Nyquist frequencies. Output length is
// round(len * target / source). Taps for each output phase are normalized
// to unit sum so constants pass through unchanged away from the edges.
Waveform resample(const Waveform& w, int target_hz);

// Number of input samples on each side of an output sample that the
// filter touches, for trimming edge effects in tests.
double resample_half_width(int source_hz, int target_hz);

}  // namespace avseci::signal
