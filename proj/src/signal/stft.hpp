// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "signal/waveform.hpp"

namespace avseci::signal {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Frames start at sample 0 (no centering); fft length equals window length.
struct StftConfig {
  int window_len = 510;
  int hop = 128;

  int bins() const { return window_len / 2 + 1; }
  bool operator==(const StftConfig&) const = default;
};

// w[n] = 0.5 - 0.5 cos(2 pi n / N)
std::vector<double> periodic_hann(int n);

// floor((len - window) / hop) + 1, or 0 when len < window.
std::size_t frame_count(std::size_t len, int window_len, int hop);

// Rows are frames: row t holds x[t*hop .. t*hop + window_len).
RowMatrix frame_signal(std::span<const double> x, int window_len, int hop);

// Precomputed windowed real-DFT bases for one config. Analysis of a frame
// matrix X (T x N) is X * analysis_re / X * analysis_im (T x F); synthesis of
// (re, im) is re * synthesis_re + im * synthesis_im (T x N), unwindowed.
class StftBasis {
 public:
  explicit StftBasis(const StftConfig& cfg);

  const StftConfig& config() const { return cfg_; }
  const std::vector<double>& window() const { return window_; }
  const RowMatrix& analysis_re() const { return an_re_; }
  const RowMatrix& analysis_im() const { return an_im_; }
  const RowMatrix& synthesis_re() const { return syn_re_; }
  const RowMatrix& synthesis_im() const { return syn_im_; }

  // Per-sample 1 / sum_t w^2[n - t*hop] for `frames` frames; 0 where the
  // denominator vanishes. Applying window, overlap-add and this factor is
  // the least-squares inverse of the analysis.
  std::vector<double> dual_normalizer(std::size_t frames) const;

 private:
  StftConfig cfg_;
  std::vector<double> window_;
  RowMatrix an_re_, an_im_, syn_re_, syn_im_;
};

// Cached, thread-safe.
const StftBasis& stft_basis(const StftConfig& cfg);

struct ComplexSpectrogram {
  Eigen::MatrixXcd data;  // F x T
  StftConfig config;
  std::size_t origin_len = 0;

  int bins() const { return static_cast<int>(data.rows()); }
  int frames() const { return static_cast<int>(data.cols()); }
};

ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg = {});

// Weighted overlap-add with the least-squares dual window, truncated (or
// zero-extended) to origin_len. The sample rate is the pipeline rate.
Waveform istft(const ComplexSpectrogram& s);

// |X| as an F x T real matrix.
Eigen::MatrixXd magnitude(const ComplexSpectrogram& s);

}  // namespace avseci::signal
