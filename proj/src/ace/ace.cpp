// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ace/ace.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "common/error.hpp"
#include "common/topk.hpp"

namespace avseci::ace {

ChannelMap build_channel_map() {
  static constexpr std::array<int, kChannels> kCounts = {
      1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 4, 4, 5, 5, 6, 7, 8};
  ChannelMap map;
  int bin = 2;
  for (int c = 0; c < kChannels; ++c) {
    ChannelBand& b = map.entries[static_cast<std::size_t>(c)];
    b.start_bin = bin;
    b.bin_count = kCounts[static_cast<std::size_t>(c)];
    b.lo_hz = (bin - 0.5) * kBinWidthHz;
    b.hi_hz = (bin + b.bin_count - 0.5) * kBinWidthHz;
    b.center_hz = std::sqrt(b.lo_hz * b.hi_hz);
    bin += b.bin_count;
  }
  return map;
}

Eigen::MatrixXd analysis_magnitudes(const signal::Waveform& w) {
  if (w.samples.size() < static_cast<std::size_t>(kFftLen)) {
    throw LengthError("ace: input of " + std::to_string(w.samples.size()) +
                      " samples is shorter than one 128-sample frame");
  }
  return signal::magnitude(signal::stft(w, analysis_config()));
}

Eigen::MatrixXd raw_envelopes(const Eigen::MatrixXd& mag65, const ChannelMap& map) {
  if (mag65.rows() != kBins) throw ShapeError("ace: expected 65 magnitude bins");
  Eigen::MatrixXd env(kChannels, mag65.cols());
  for (Eigen::Index t = 0; t < mag65.cols(); ++t) {
    for (int c = 0; c < kChannels; ++c) {
      const ChannelBand& b = map.entries[static_cast<std::size_t>(c)];
      double p = 0.0;
      for (int k = b.start_bin; k < b.start_bin + b.bin_count; ++k) {
        p += mag65(k, t) * mag65(k, t);
      }
      env(c, t) = std::sqrt(p);
    }
  }
  return env;
}

double envelope_peak(const signal::Waveform& w, const ChannelMap& map) {
  const Eigen::MatrixXd env = raw_envelopes(analysis_magnitudes(w), map);
  return env.size() == 0 ? 0.0 : env.maxCoeff();
}

double corpus_peak(const std::vector<signal::Waveform>& corpus, const ChannelMap& map) {
  double peak = 0.0;
  for (const auto& w : corpus) peak = std::max(peak, envelope_peak(w, map));
  return peak;
}

Analysis analyze_envelopes(const signal::Waveform& w, const ChannelMap& map,
                           std::optional<double> reference_peak) {
  Analysis a;
  a.mag65 = analysis_magnitudes(w);
  Eigen::MatrixXd env = raw_envelopes(a.mag65, map);
  double peak = reference_peak.value_or(env.size() ? env.maxCoeff() : 0.0);
  if (reference_peak && !(*reference_peak > 0.0)) {
    throw DataError("ace: reference peak must be positive");
  }
  if (peak > 0.0) {
    env = (env / peak).cwiseMin(1.0);
    a.mag65 /= peak;
  } else {
    peak = 1.0;  // silence: leave zeros
  }
  a.envelopes.data = std::move(env);
  a.envelopes.reference_peak = peak;
  return a;
}

Electrodogram select_maxima(const Eigen::MatrixXd& env, int n) {
  const auto channels = static_cast<std::size_t>(env.rows());
  if (n < 1 || static_cast<std::size_t>(n) > channels) {
    throw UsageError("select_maxima: n must be in [1, " + std::to_string(channels) + "]");
  }
  Electrodogram e;
  e.n_active = n;
  e.data = Eigen::MatrixXd::Zero(env.rows(), env.cols());
  std::unique_ptr<bool[]> keep(new bool[channels]);
  for (Eigen::Index t = 0; t < env.cols(); ++t) {
    const double* col = env.col(t).data();
    select_topk(col, channels, static_cast<std::size_t>(n), keep.get());
    for (std::size_t c = 0; c < channels; ++c) {
      if (keep[c]) e.data(static_cast<Eigen::Index>(c), t) = col[c];
    }
  }
  return e;
}

Electrodogram select_maxima(const EnvelopeMatrix& env, int n) {
  Electrodogram e = select_maxima(env.data, n);
  e.frame_rate = env.frame_rate;
  return e;
}

double lgf(double x, double base, double sat, double rho) {
  if (!(sat > base)) throw UsageError("lgf: saturation level must exceed base level");
  if (x <= base) return 0.0;
  if (x >= sat) return 1.0;
  return std::log1p(rho * (x - base) / (sat - base)) / std::log1p(rho);
}

Electrodogram ace_encode(const signal::Waveform& w, std::optional<double> reference_peak,
                         int n) {
  static const ChannelMap map = build_channel_map();
  return select_maxima(analyze_envelopes(w, map, reference_peak).envelopes, n);
}

}  // namespace avseci::ace
