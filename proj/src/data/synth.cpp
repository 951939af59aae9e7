// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <numbers>
#include <random>

#include "common/error.hpp"
#include "common/files.hpp"
#include "signal/fft.hpp"

namespace avseci::data {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRate = signal::kPipelineRate;

// Two-pole resonator.
struct Resonator {
  double y1 = 0.0, y2 = 0.0;

  double step(double x, double freq, double bw) {
    const double r = std::exp(-std::numbers::pi * bw / kRate);
    const double a1 = 2.0 * r * std::cos(kTwoPi * freq / kRate);
    const double a2 = -r * r;
    const double y = (1.0 - r) * x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

// Piecewise-linear path through random targets placed every `seg` samples.
std::vector<double> glide(std::mt19937_64& rng, std::size_t n, std::size_t seg, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> knots(n / seg + 2);
  for (double& k : knots) k = d(rng);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i / seg;
    const double frac = static_cast<double>(i % seg) / static_cast<double>(seg);
    out[i] = knots[k] + frac * (knots[k + 1] - knots[k]);
  }
  return out;
}

void normalize_peak(std::vector<double>& x, double peak) {
  const double p = signal::peak_abs(x);
  if (p > 0.0) {
    for (double& v : x) v *= peak / p;
  }
}

}  // namespace

signal::Waveform synth_utterance(std::uint64_t seed, const SynthConfig& cfg) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double dur = cfg.min_duration_s + (cfg.max_duration_s - cfg.min_duration_s) * unit(rng);
  const auto n = static_cast<std::size_t>(std::floor(dur * kRate));

  // f0: slow random glide plus vibrato-like drift, held inside 100-300 Hz.
  const double base = 110.0 + 130.0 * unit(rng);
  const std::vector<double> drift = glide(rng, n, static_cast<std::size_t>(0.3 * kRate), -0.15, 0.15);
  const std::vector<double> f1 = glide(rng, n, static_cast<std::size_t>(0.125 * kRate), 300.0, 900.0);
  const std::vector<double> f2 = glide(rng, n, static_cast<std::size_t>(0.125 * kRate), 900.0, 2500.0);
  const double am_phase = kTwoPi * unit(rng);
  const double gap_fraction = 0.10 + 0.10 * unit(rng);

  // Silence: lead-in, tail and one internal pause sharing the gap budget.
  const auto gap_total = static_cast<std::size_t>(gap_fraction * static_cast<double>(n));
  const double a = 0.2 + 0.2 * unit(rng), b = 0.2 + 0.2 * unit(rng);
  const auto lead = static_cast<std::size_t>(a * static_cast<double>(gap_total));
  const auto tail = static_cast<std::size_t>(b * static_cast<double>(gap_total));
  const std::size_t pause = gap_total - lead - tail;
  const std::size_t voiced = n - gap_total;
  const std::size_t pause_at = lead + static_cast<std::size_t>((0.3 + 0.4 * unit(rng)) * static_cast<double>(voiced));
  std::vector<double> gate(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < lead || i >= n - tail || (i >= pause_at && i < pause_at + pause)) gate[i] = 0.0;
  }
  // 10 ms raised-cosine ramps at every gate edge.
  const auto ramp = static_cast<std::size_t>(0.01 * kRate);
  std::vector<double> smooth(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t j = i >= ramp ? i - ramp : 0; j <= std::min(n - 1, i + ramp); j += 8) {
      acc += gate[j];
      ++cnt;
    }
    smooth[i] = acc / static_cast<double>(cnt);
  }

  std::normal_distribution<double> breath(0.0, 1.0);
  Resonator r1, r2;
  double phase = 0.0;
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kRate;
    const double f0 = std::clamp(base * (1.0 + drift[i]), 100.0, 300.0);
    phase += kTwoPi * f0 / kRate;
    if (phase > kTwoPi) phase -= kTwoPi;
    double src = 0.0;
    const int harmonics = static_cast<int>(6000.0 / f0);
    for (int h = 1; h <= harmonics; ++h) src += std::sin(h * phase) / h;
    src += 0.05 * breath(rng);
    const double y = r1.step(src, f1[i], 90.0) + 0.5 * r2.step(src, f2[i], 140.0);
    const double syll = 0.5 - 0.5 * std::cos(kTwoPi * 4.0 * t + am_phase);
    x[i] = y * (0.15 + 0.85 * syll) * smooth[i];
  }
  normalize_peak(x, cfg.peak);
  return {std::move(x), signal::kPipelineRate};
}

std::vector<signal::Waveform> synth_corpus(std::size_t n, std::uint64_t seed, const SynthConfig& cfg) {
  if (n == 0) throw UsageError("synth_corpus: need at least one utterance");
  std::vector<signal::Waveform> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(synth_utterance(derive_seed(seed, "utt" + std::to_string(i)), cfg));
  return out;
}

const std::vector<std::string>& noise_types() {
  static const std::vector<std::string> kTypes = {"white", "pink", "brown", "babble", "engine"};
  return kTypes;
}

namespace {

std::vector<double> gaussian(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = d(rng);
  return x;
}

// Power falls 10 dB per decade: amplitude ~ f^-1/2.
std::vector<double> pink(std::size_t n, std::mt19937_64& rng) {
  const std::vector<double> w = gaussian(n, rng);
  auto spec = signal::rfft(w);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = std::max(static_cast<double>(k) * kRate / static_cast<double>(n), 20.0);
    spec[k] *= 1.0 / std::sqrt(f);
  }
  return signal::irfft(spec, n);
}

std::vector<double> brown(std::size_t n, std::mt19937_64& rng) {
  const std::vector<double> w = gaussian(n, rng);
  std::vector<double> x(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc = 0.995 * acc + w[i];
    x[i] = acc;
  }
  return x;
}

std::vector<double> babble(std::size_t n, std::uint64_t seed) {
  std::vector<double> x(n, 0.0);
  std::mt19937_64 rng(seed);
  for (int talker = 0; talker < 6; ++talker) {
    const signal::Waveform s = synth_utterance(derive_seed(seed, "talker" + std::to_string(talker)));
    const std::size_t shift = std::uniform_int_distribution<std::size_t>(0, s.size() - 1)(rng);
    for (std::size_t i = 0; i < n; ++i) x[i] += s.samples[(i + shift) % s.size()];
  }
  return x;
}

// Firing-rate harmonics with slow rpm wobble over low-passed rumble.
std::vector<double> engine(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double base = 30.0 + 30.0 * u(rng);
  const double wobble = 0.2 + 0.3 * u(rng);
  const std::vector<double> w = gaussian(n, rng);
  std::vector<double> x(n);
  double phase = 0.0, lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kRate;
    const double f = base * (1.0 + 0.05 * std::sin(kTwoPi * wobble * t));
    phase += kTwoPi * f / kRate;
    double tone = 0.0;
    for (int h = 1; h <= 40; ++h) tone += std::sin(h * phase) / std::sqrt(static_cast<double>(h));
    lp = 0.97 * lp + 0.03 * w[i];
    x[i] = tone + 8.0 * lp;
  }
  return x;
}

}  // namespace

signal::Waveform make_noise(const std::string& type, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw UsageError("make_noise: zero length");
  std::mt19937_64 rng(seed);
  std::vector<double> x;
  if (type == "white") {
    x = gaussian(samples, rng);
  } else if (type == "pink") {
    x = pink(samples, rng);
  } else if (type == "brown") {
    x = brown(samples, rng);
  } else if (type == "babble") {
    x = babble(samples, seed);
  } else if (type == "engine") {
    x = engine(samples, rng);
  } else {
    throw UsageError("unknown noise type '" + type + "'");
  }
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  for (double& v : x) v -= mean;
  normalize_peak(x, 0.5);
  return {std::move(x), signal::kPipelineRate};
}

}  // namespace avseci::data
