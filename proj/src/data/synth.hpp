// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Deterministic pseudo-speech and noise generators for the desk corpus.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "signal/waveform.hpp"

namespace avseci::data {

struct SynthConfig {
  double min_duration_s = 2.0;
  double max_duration_s = 4.0;
  double peak = 0.5;
};

// Harmonic source with drifting f0 (100-300 Hz), two moving formant
// resonators, 4 Hz syllabic modulation and 10-20% silence.
signal::Waveform synth_utterance(std::uint64_t seed, const SynthConfig& cfg = {});

std::vector<signal::Waveform> synth_corpus(std::size_t n, std::uint64_t seed, const SynthConfig& cfg = {});

// white | pink | brown | babble | engine
const std::vector<std::string>& noise_types();
signal::Waveform make_noise(const std::string& type, std::size_t samples, std::uint64_t seed);

}  // namespace avseci::data
