// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <vector>

namespace avseci::signal {

inline constexpr int kPipelineRate = 16000;

// Mono samples at full scale [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kPipelineRate;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// RIFF/WAVE, PCM 16-bit or IEEE float 32-bit, one channel.
Waveform read_wav(const std::filesystem::path& path);

// PCM 16-bit mono; samples are clamped to the representable range.
void write_wav(const Waveform& w, const std::filesystem::path& path);

double rms(const std::vector<double>& x);
double peak_abs(const std::vector<double>& x);

}  // namespace avseci::signal
