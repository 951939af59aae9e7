// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <vector>

#include "signal/stft.hpp"
#include "signal/waveform.hpp"

namespace avseci::ace {

inline constexpr int kChannels = 22;
inline constexpr int kFftLen = 128;
inline constexpr int kHop = 32;
inline constexpr int kBins = kFftLen / 2 + 1;  // 65
inline constexpr int kFrameRate = signal::kPipelineRate / kHop;  // 500
inline constexpr int kDefaultMaxima = 8;
inline constexpr double kBinWidthHz = static_cast<double>(signal::kPipelineRate) / kFftLen;

inline signal::StftConfig analysis_config() { return {kFftLen, kHop}; }

struct ChannelBand {
  int start_bin = 0;
  int bin_count = 0;
  double lo_hz = 0.0;
  double hi_hz = 0.0;
  double center_hz = 0.0;  // geometric mean of the edges
};

struct ChannelMap {
  std::array<ChannelBand, kChannels> entries;
};

// Fixed 22-channel allocation over FFT bins 2..63.
ChannelMap build_channel_map();

// Channel x frame envelopes, nonnegative, divided by reference_peak and
// clipped to [0, 1].
struct EnvelopeMatrix {
  Eigen::MatrixXd data;  // 22 x T_e
  double reference_peak = 1.0;
  int frame_rate = kFrameRate;
};

// Per-frame stimulation magnitudes; at most n_active nonzero per column.
struct Electrodogram {
  Eigen::MatrixXd data;  // channels x T_e
  int n_active = kDefaultMaxima;
  int frame_rate = kFrameRate;

  int channels() const { return static_cast<int>(data.rows()); }
  int frames() const { return static_cast<int>(data.cols()); }
};

struct Analysis {
  EnvelopeMatrix envelopes;
  Eigen::MatrixXd mag65;  // 65 x T_e, |FFT| / reference_peak (not clipped)
};

// Unnormalized envelopes: sqrt of the power summed over each channel's bins.
Eigen::MatrixXd raw_envelopes(const Eigen::MatrixXd& mag65, const ChannelMap& map);

// 128-point Hann FFT magnitudes at 32-sample hop.
Eigen::MatrixXd analysis_magnitudes(const signal::Waveform& w);

// Largest raw envelope of one utterance (0 for silence).
double envelope_peak(const signal::Waveform& w, const ChannelMap& map);

// Max of envelope_peak over a corpus.
double corpus_peak(const std::vector<signal::Waveform>& corpus, const ChannelMap& map);

// Without a reference peak the utterance's own peak is used.
Analysis analyze_envelopes(const signal::Waveform& w, const ChannelMap& map,
                           std::optional<double> reference_peak = std::nullopt);

// Keeps the n largest envelopes per frame; ties go to the lower channel.
Electrodogram select_maxima(const EnvelopeMatrix& env, int n = kDefaultMaxima);
Electrodogram select_maxima(const Eigen::MatrixXd& env, int n = kDefaultMaxima);

// Loudness growth function.
double lgf(double x, double base = 0.0156, double sat = 1.0, double rho = 416.2);

// analyze_envelopes followed by select_maxima(8); envelope domain.
Electrodogram ace_encode(const signal::Waveform& w,
                         std::optional<double> reference_peak = std::nullopt,
                         int n = kDefaultMaxima);

}  // namespace avseci::ace
