// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "signal/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "common/error.hpp"

namespace avseci::signal {

namespace {

constexpr double kZeroCrossings = 32.0;
constexpr double kKaiserBeta = 8.6;

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double t, double beta) {
  // t in [-1, 1]
  if (std::abs(t) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - t * t)) /
         std::cyl_bessel_i(0.0, beta);
}

}  // namespace

double resample_half_width(int source_hz, int target_hz) {
  const double fc = 0.5 * std::min(source_hz, target_hz) / source_hz;
  return kZeroCrossings / (2.0 * fc);
}

Waveform resample(const Waveform& w, int target_hz) {
  if (target_hz <= 0) throw UsageError("resample: target rate must be positive");
  if (w.sample_rate_hz <= 0) throw DataError("resample: invalid source rate");
  if (target_hz == w.sample_rate_hz) return w;

  const long src = w.sample_rate_hz;
  const long g = std::gcd(src, static_cast<long>(target_hz));
  const long up = target_hz / g;   // output phases
  const long down = src / g;

  // Cutoff in cycles per input sample.
  const double fc = 0.5 * std::min<long>(src, target_hz) / static_cast<double>(src);
  const double half = kZeroCrossings / (2.0 * fc);
  const long reach = static_cast<long>(std::ceil(half));

  // Output m sits at input position m*down/up; its fractional part only
  // depends on (m*down) mod up.
  std::vector<std::vector<double>> taps(static_cast<std::size_t>(up));
  for (long phase = 0; phase < up; ++phase) {
    const double frac = static_cast<double>(phase) / up;
    auto& h = taps[static_cast<std::size_t>(phase)];
    h.resize(static_cast<std::size_t>(2 * reach + 1));
    double sum = 0.0;
    for (long j = -reach; j <= reach; ++j) {
      const double tau = static_cast<double>(j) - frac;
      const double v = 2.0 * fc * sinc(2.0 * fc * tau) * kaiser(tau / half, kKaiserBeta);
      h[static_cast<std::size_t>(j + reach)] = v;
      sum += v;
    }
    for (double& v : h) v /= sum;
  }

  const auto n_in = static_cast<long>(w.samples.size());
  const auto n_out = static_cast<long>(
      std::llround(static_cast<double>(n_in) * target_hz / static_cast<double>(src)));
  Waveform out;
  out.sample_rate_hz = target_hz;
  out.samples.assign(static_cast<std::size_t>(n_out), 0.0);
  for (long m = 0; m < n_out; ++m) {
    const long num = m * down;
    const long base = num / up;
    const auto& h = taps[static_cast<std::size_t>(num % up)];
    double acc = 0.0;
    const long lo = std::max(-reach, -base);
    const long hi = std::min(reach, n_in - 1 - base);
    for (long j = lo; j <= hi; ++j) {
      acc += h[static_cast<std::size_t>(j + reach)] * w.samples[static_cast<std::size_t>(base + j)];
    }
    out.samples[static_cast<std::size_t>(m)] = acc;
  }
  return out;
}

}  // namespace avseci::signal
