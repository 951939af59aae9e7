// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "data/mix.hpp"

#include <cmath>
#include <random>

#include "common/error.hpp"

namespace avseci::data {

namespace {

double power(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace

MixResult mix_at_snr(const signal::Waveform& clean, const signal::Waveform& noise, double snr_db,
                     std::uint64_t seed) {
  if (clean.sample_rate_hz != noise.sample_rate_hz) throw DataError("mix: clean and noise rates differ");
  if (clean.samples.empty() || noise.samples.empty()) throw DataError("mix: empty input");
  if (!std::isfinite(snr_db)) throw UsageError("mix: SNR must be finite");
  MixResult r;
  std::mt19937_64 rng(seed);
  const std::size_t n = clean.size();
  if (noise.size() > n) r.offset = std::uniform_int_distribution<std::size_t>(0, noise.size() - n)(rng);
  std::vector<double> seg(n);
  for (std::size_t i = 0; i < n; ++i) seg[i] = noise.samples[(r.offset + i) % noise.size()];

  const double pc = power(clean.samples);
  const double pn = power(seg);
  if (!(pc > 0.0)) throw DataError("mix: clean signal has zero power");
  if (!(pn > 0.0)) throw DataError("mix: noise segment has zero power");
  r.gain = std::sqrt(pc / pn) / std::pow(10.0, snr_db / 20.0);
  r.noise.resize(n);
  r.noisy.sample_rate_hz = clean.sample_rate_hz;
  r.noisy.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    r.noise[i] = r.gain * seg[i];
    r.noisy.samples[i] = clean.samples[i] + r.noise[i];
  }
  const double peak = signal::peak_abs(r.noisy.samples);
  if (peak > 1.0) {
    r.scale = 1.0 / peak;
    for (double& v : r.noisy.samples) v *= r.scale;
  }
  return r;
}

double measured_snr_db(const std::vector<double>& clean, const std::vector<double>& noise) {
  return 10.0 * std::log10(power(clean) / power(noise));
}

}  // namespace avseci::data
