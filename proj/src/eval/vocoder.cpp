// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "eval/vocoder.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "common/error.hpp"

namespace avseci::eval {

VocoderConfig default_vocoder() {
  VocoderConfig cfg;
  const ace::ChannelMap map = ace::build_channel_map();
  for (const auto& b : map.entries) cfg.carrier_hz.push_back(b.center_hz);
  return cfg;
}

void validate(const VocoderConfig& cfg) {
  if (cfg.carrier_hz.empty()) throw UsageError("vocoder: no carriers");
  if (cfg.hop < 1 || cfg.frame_len < 1 || cfg.sample_rate_hz < 1) throw UsageError("vocoder: bad framing");
  const double nyq = 0.5 * cfg.sample_rate_hz;
  for (std::size_t i = 0; i < cfg.carrier_hz.size(); ++i) {
    const double f = cfg.carrier_hz[i];
    if (!(f > 0.0 && f < nyq)) throw UsageError("vocoder: carrier " + std::to_string(i) + " outside (0, Nyquist)");
    if (i > 0 && !(f > cfg.carrier_hz[i - 1])) throw UsageError("vocoder: carriers must increase");
  }
}

signal::Waveform tone_vocode(const ace::Electrodogram& e, const VocoderConfig& cfg) {
  validate(cfg);
  if (static_cast<std::size_t>(e.channels()) != cfg.carrier_hz.size()) {
    throw ShapeError("vocoder: electrodogram has " + std::to_string(e.channels()) + " channels, config has " +
                     std::to_string(cfg.carrier_hz.size()));
  }
  signal::Waveform out;
  out.sample_rate_hz = cfg.sample_rate_hz;
  const long frames = e.frames();
  if (frames == 0) return out;
  const long n = (frames - 1) * cfg.hop + cfg.frame_len;
  out.samples.assign(static_cast<std::size_t>(n), 0.0);

  const double centre0 = 0.5 * cfg.frame_len;
  std::vector<double> amp(static_cast<std::size_t>(n));
  for (int c = 0; c < e.channels(); ++c) {
    if (e.data.row(c).cwiseAbs().maxCoeff() == 0.0) continue;
    for (long i = 0; i < n; ++i) {
      const double pos = (static_cast<double>(i) - centre0) / cfg.hop;
      double a;
      if (pos <= 0.0) {
        a = e.data(c, 0);
      } else if (pos >= static_cast<double>(frames - 1)) {
        a = e.data(c, frames - 1);
      } else {
        const long t = static_cast<long>(pos);
        const double w = pos - static_cast<double>(t);
        a = (1.0 - w) * e.data(c, t) + w * e.data(c, t + 1);
      }
      amp[static_cast<std::size_t>(i)] = a;
    }
    const double step = 2.0 * std::numbers::pi * cfg.carrier_hz[static_cast<std::size_t>(c)] / cfg.sample_rate_hz;
    for (long i = 0; i < n; ++i) {
      out.samples[static_cast<std::size_t>(i)] += amp[static_cast<std::size_t>(i)] * std::sin(step * static_cast<double>(i));
    }
  }
  const double r = signal::rms(out.samples);
  if (r > 0.0) {
    const double g = cfg.target_rms / r;
    for (double& v : out.samples) v *= g;
  }
  return out;
}

}  // namespace avseci::eval
