// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/visual.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

#include "common/error.hpp"
#include "common/files.hpp"
#include "signal/fft.hpp"
#include "signal/stft.hpp"

namespace avseci::avse {

Eigen::MatrixXd align_visual(const VisualTrack& track, std::size_t frames, double hop_s) {
  if (track.frames() == 0 || track.dim() == 0) {
    throw DataError("align_visual: empty visual track '" + track.source_id + "'");
  }
  if (!(track.fps > 0.0) || !(hop_s > 0.0)) throw UsageError("align_visual: fps and hop must be positive");
  const long last = track.frames() - 1;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(frames), track.dim());
  for (std::size_t t = 0; t < frames; ++t) {
    const long idx = std::clamp(std::lround(static_cast<double>(t) * hop_s * track.fps), 0L, last);
    out.row(static_cast<Eigen::Index>(t)) = track.data.row(idx);
  }
  return out;
}

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// Triangular filters on the rfft grid of an n-point transform.
Eigen::MatrixXd mel_bank(int bands, int n, double rate) {
  const int bins = n / 2 + 1;
  const double lo = hz_to_mel(50.0), hi = hz_to_mel(rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(bands + 2));
  for (int i = 0; i < bands + 2; ++i) edges[static_cast<std::size_t>(i)] = mel_to_hz(lo + (hi - lo) * i / (bands + 1));
  Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(bands, bins);
  for (int b = 0; b < bands; ++b) {
    const double l = edges[static_cast<std::size_t>(b)], c = edges[static_cast<std::size_t>(b + 1)],
                 r = edges[static_cast<std::size_t>(b + 2)];
    for (int k = 0; k < bins; ++k) {
      const double f = k * rate / n;
      if (f > l && f < r) bank(b, k) = f <= c ? (f - l) / (c - l) : (r - f) / (r - c);
    }
  }
  return bank;
}

}  // namespace

VisualTrack synth_visual_features(const signal::Waveform& clean, const VisualSynthConfig& cfg) {
  if (cfg.dim < 1 || !(cfg.fps > 0.0)) throw UsageError("synth_visual_features: invalid dim/fps");
  const double rate = clean.sample_rate_hz;
  const auto frame_len = static_cast<std::size_t>(std::lround(rate / cfg.fps));
  const std::size_t n_frames = std::max<std::size_t>(1, (clean.size() + frame_len - 1) / frame_len);
  const Eigen::MatrixXd bank = mel_bank(cfg.dim, static_cast<int>(frame_len), rate);
  const std::vector<double> win = signal::periodic_hann(static_cast<int>(frame_len));

  VisualTrack track;
  track.fps = cfg.fps;
  track.data.resize(static_cast<Eigen::Index>(n_frames), cfg.dim);
  std::vector<double> buf(frame_len);
  Eigen::VectorXd power(bank.cols());
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t i = 0; i < frame_len; ++i) {
      const std::size_t j = t * frame_len + i;
      buf[i] = j < clean.size() ? win[i] * clean.samples[j] : 0.0;
    }
    const auto spec = signal::rfft(buf);
    for (Eigen::Index k = 0; k < power.size(); ++k) power(k) = std::norm(spec[static_cast<std::size_t>(k)]);
    track.data.row(static_cast<Eigen::Index>(t)) = (bank * power).array().unaryExpr([](double e) {
      return std::log(e + 1e-8);
    }).transpose();
  }
  for (Eigen::Index d = 0; d < track.data.cols(); ++d) {
    auto col = track.data.col(d);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().mean());
    if (sd > 1e-9) {
      col = (col.array() - mean) / sd;
    } else {
      col.setZero();
    }
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
  for (Eigen::Index t = 0; t < track.data.rows(); ++t) {
    for (Eigen::Index d = 0; d < track.data.cols(); ++d) track.data(t, d) += noise(rng);
  }
  return track;
}

void write_visual(const VisualTrack& track, const std::filesystem::path& path) {
  char head[128];
  std::snprintf(head, sizeof(head), "VISF v1 dv=%d fps=%g frames=%d\n", track.dim(), track.fps, track.frames());
  std::vector<std::uint8_t> bytes(head, head + std::char_traits<char>::length(head));
  bytes.reserve(bytes.size() + static_cast<std::size_t>(track.data.size()) * 4);
  for (Eigen::Index t = 0; t < track.data.rows(); ++t) {
    for (Eigen::Index d = 0; d < track.data.cols(); ++d) append_f32_le(bytes, static_cast<float>(track.data(t, d)));
  }
  write_file_atomic(path, bytes);
}

VisualTrack read_visual(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  const auto nl = std::find(bytes.begin(), bytes.end(), static_cast<std::uint8_t>('\n'));
  if (nl == bytes.end()) throw FormatError(path.string() + ": missing VISF header line");
  const std::string head(bytes.begin(), nl);
  int dim = 0, frames = 0;
  double fps = 0.0;
  char tail = 0;
  if (std::sscanf(head.c_str(), "VISF v1 dv=%d fps=%lf frames=%d%c", &dim, &fps, &frames, &tail) != 3 || dim < 1 ||
      frames < 0 || !(fps > 0.0)) {
    throw FormatError(path.string() + ": bad VISF header '" + head + "'");
  }
  const std::size_t offset = static_cast<std::size_t>(nl - bytes.begin()) + 1;
  const std::size_t expect = static_cast<std::size_t>(dim) * static_cast<std::size_t>(frames) * 4;
  if (bytes.size() - offset != expect) {
    throw FormatError(path.string() + ": VISF payload is " + std::to_string(bytes.size() - offset) +
                      " bytes, header implies " + std::to_string(expect));
  }
  VisualTrack track;
  track.fps = fps;
  track.source_id = path.stem().string();
  track.data.resize(frames, dim);
  const std::uint8_t* p = bytes.data() + offset;
  for (int t = 0; t < frames; ++t) {
    for (int d = 0; d < dim; ++d, p += 4) {
      const float v = read_f32_le(p);
      if (!std::isfinite(v)) throw FormatError(path.string() + ": non-finite visual feature");
      track.data(t, d) = v;
    }
  }
  return track;
}

}  // namespace avseci::avse
