// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "ace/ace.hpp"
#include "signal/waveform.hpp"

namespace avseci::eval {

inline constexpr double kVocoderRms = 0.05;

struct VocoderConfig {
  std::vector<double> carrier_hz;  // one per channel, increasing
  int sample_rate_hz = signal::kPipelineRate;
  int hop = ace::kHop;
  int frame_len = ace::kFftLen;
  double target_rms = kVocoderRms;
};

// Carriers at the ACE channel centres.
VocoderConfig default_vocoder();

void validate(const VocoderConfig& cfg);

// Output length (T_e - 1) * hop + frame_len. Frame t's envelope sits at
// sample t * hop + frame_len / 2 and is held flat beyond the end frames.
signal::Waveform tone_vocode(const ace::Electrodogram& e, const VocoderConfig& cfg = default_vocoder());

}  // namespace avseci::eval
