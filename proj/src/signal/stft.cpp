// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "signal/stft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "common/error.hpp"

namespace avseci::signal {

std::vector<double> periodic_hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

std::size_t frame_count(std::size_t len, int window_len, int hop) {
  const auto n = static_cast<std::size_t>(window_len);
  if (len < n) return 0;
  return (len - n) / static_cast<std::size_t>(hop) + 1;
}

RowMatrix frame_signal(std::span<const double> x, int window_len, int hop) {
  const std::size_t t = frame_count(x.size(), window_len, hop);
  RowMatrix frames(static_cast<Eigen::Index>(t), window_len);
  for (std::size_t i = 0; i < t; ++i) {
    const double* src = x.data() + i * static_cast<std::size_t>(hop);
    std::copy(src, src + window_len, frames.row(static_cast<Eigen::Index>(i)).data());
  }
  return frames;
}

StftBasis::StftBasis(const StftConfig& cfg) : cfg_(cfg) {
  if (cfg.window_len < 2 || cfg.window_len % 2 != 0 || cfg.hop < 1) {
    throw UsageError("stft: window length must be even and >= 2, hop >= 1");
  }
  const int n = cfg.window_len;
  const int f = cfg.bins();
  window_ = periodic_hann(n);
  an_re_.resize(n, f);
  an_im_.resize(n, f);
  syn_re_.resize(f, n);
  syn_im_.resize(f, n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < f; ++k) {
      // Reduce the phase index exactly before converting to an angle.
      const long idx = (static_cast<long>(j) * k) % n;
      const double ang = 2.0 * std::numbers::pi * static_cast<double>(idx) / n;
      const double c = std::cos(ang), s = std::sin(ang);
      an_re_(j, k) = window_[static_cast<std::size_t>(j)] * c;
      an_im_(j, k) = -window_[static_cast<std::size_t>(j)] * s;
      const double a = (k == 0 || k == n / 2) ? 1.0 / n : 2.0 / n;
      syn_re_(k, j) = a * c;
      syn_im_(k, j) = -a * s;
    }
  }
}

std::vector<double> StftBasis::dual_normalizer(std::size_t frames) const {
  const std::size_t n = static_cast<std::size_t>(cfg_.window_len);
  const std::size_t hop = static_cast<std::size_t>(cfg_.hop);
  const std::size_t len = frames == 0 ? 0 : (frames - 1) * hop + n;
  std::vector<double> acc(len, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t j = 0; j < n; ++j) acc[t * hop + j] += window_[j] * window_[j];
  }
  for (double& v : acc) v = v > 1e-10 ? 1.0 / v : 0.0;
  return acc;
}

const StftBasis& stft_basis(const StftConfig& cfg) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<StftBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{cfg.window_len, cfg.hop}];
  if (!slot) slot = std::make_unique<StftBasis>(cfg);
  return *slot;
}

ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  if (w.samples.size() < static_cast<std::size_t>(cfg.window_len)) {
    throw LengthError("stft: signal of " + std::to_string(w.samples.size()) +
                      " samples is shorter than one window (" +
                      std::to_string(cfg.window_len) + ")");
  }
  const StftBasis& basis = stft_basis(cfg);
  const RowMatrix frames = frame_signal(w.samples, cfg.window_len, cfg.hop);
  const RowMatrix re = frames * basis.analysis_re();
  const RowMatrix im = frames * basis.analysis_im();
  ComplexSpectrogram s;
  s.config = cfg;
  s.origin_len = w.samples.size();
  s.data.resize(cfg.bins(), frames.rows());
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    for (int k = 0; k < cfg.bins(); ++k) s.data(k, t) = {re(t, k), im(t, k)};
  }
  return s;
}

Waveform istft(const ComplexSpectrogram& s) {
  const StftConfig& cfg = s.config;
  if (s.data.rows() != cfg.bins()) {
    throw ShapeError("istft: spectrogram has " + std::to_string(s.data.rows()) +
                     " bins, config expects " + std::to_string(cfg.bins()));
  }
  const StftBasis& basis = stft_basis(cfg);
  const Eigen::Index t_count = s.data.cols();
  Waveform out;
  out.sample_rate_hz = kPipelineRate;
  out.samples.assign(s.origin_len, 0.0);
  if (t_count == 0) return out;

  const RowMatrix re = s.data.real().transpose();
  const RowMatrix im = s.data.imag().transpose();
  const RowMatrix frames = re * basis.synthesis_re() + im * basis.synthesis_im();
  const auto norm = basis.dual_normalizer(static_cast<std::size_t>(t_count));
  std::vector<double> y(norm.size(), 0.0);
  const auto n = static_cast<std::size_t>(cfg.window_len);
  const auto hop = static_cast<std::size_t>(cfg.hop);
  const auto& win = basis.window();
  for (Eigen::Index t = 0; t < t_count; ++t) {
    const double* row = frames.row(t).data();
    double* dst = y.data() + static_cast<std::size_t>(t) * hop;
    for (std::size_t j = 0; j < n; ++j) dst[j] += win[j] * row[j];
  }
  const std::size_t m = std::min(y.size(), out.samples.size());
  for (std::size_t i = 0; i < m; ++i) out.samples[i] = y[i] * norm[i];
  return out;
}

Eigen::MatrixXd magnitude(const ComplexSpectrogram& s) { return s.data.cwiseAbs(); }

}  // namespace avseci::signal
