// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Per-video-frame embeddings and their alignment to STFT frames.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>

#include "signal/waveform.hpp"

namespace avseci::avse {

inline constexpr int kVisualDim = 32;
inline constexpr double kVisualFps = 25.0;

struct VisualTrack {
  Eigen::MatrixXd data;  // T_v x D_v
  double fps = kVisualFps;
  std::string source_id;

  int frames() const { return static_cast<int>(data.rows()); }
  int dim() const { return static_cast<int>(data.cols()); }
};

// Nearest-neighbour hold: row t takes video frame clamp(round(t * hop_s * fps)).
Eigen::MatrixXd align_visual(const VisualTrack& track, std::size_t frames, double hop_s);

struct VisualSynthConfig {
  int dim = kVisualDim;
  double fps = kVisualFps;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
};

// Stand-in for a lip-reading encoder: log mel-band energies of the clean
// signal per video frame, standardized per track, plus seeded noise.
VisualTrack synth_visual_features(const signal::Waveform& clean, const VisualSynthConfig& cfg = {});

// "VISF v1 dv=<D> fps=<fps> frames=<T_v>\n" then little-endian float32 rows.
void write_visual(const VisualTrack& track, const std::filesystem::path& path);
VisualTrack read_visual(const std::filesystem::path& path);

}  // namespace avseci::avse
