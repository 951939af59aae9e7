// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "common/error.hpp"
#include "signal/fft.hpp"
#include "signal/resample.hpp"

namespace avseci::eval {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann without its zero endpoints: hanning(n + 2)[1:-1].
std::vector<double> inner_hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1) / (n + 1));
  return w;
}

// Frame starts 0, hop, ... strictly below len - frame.
long frame_count(std::size_t len, int frame, int hop) {
  const long span = static_cast<long>(len) - frame;
  if (span <= 0) return 0;
  return (span - 1) / hop + 1;
}

bool all_zero(const std::vector<double>& x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

struct Pair {
  std::vector<double> x, y;
  int rate = 0;
};

Pair trimmed_pair(const signal::Waveform& clean, const signal::Waveform& proc, const char* who) {
  if (clean.sample_rate_hz != proc.sample_rate_hz) {
    throw UsageError(std::string(who) + ": sample rates differ (" + std::to_string(clean.sample_rate_hz) + " vs " +
                     std::to_string(proc.sample_rate_hz) + ")");
  }
  const std::size_t n = std::min(clean.size(), proc.size());
  Pair p;
  p.rate = clean.sample_rate_hz;
  p.x.assign(clean.samples.begin(), clean.samples.begin() + static_cast<std::ptrdiff_t>(n));
  p.y.assign(proc.samples.begin(), proc.samples.begin() + static_cast<std::ptrdiff_t>(n));
  for (double v : p.x) if (!std::isfinite(v)) throw NumericError(std::string(who) + ": non-finite clean sample");
  for (double v : p.y) if (!std::isfinite(v)) throw NumericError(std::string(who) + ": non-finite processed sample");
  if (all_zero(p.x)) throw UndefinedMetricError(std::string(who) + ": clean signal is silent");
  if (all_zero(p.y)) throw UndefinedMetricError(std::string(who) + ": processed signal is silent");
  return p;
}

std::vector<double> to_rate(std::vector<double> x, int from, int to) {
  if (from == to) return x;
  signal::Waveform w{std::move(x), from};
  return signal::resample(w, to).samples;
}

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
}

// Octave-style polyphase resampler (60 dB Kaiser-windowed sinc, output
// length ceil(n * up / down)) so the STOI front-end matches the usual
// reference implementation sample for sample.
std::vector<double> resample_octave(const std::vector<double>& x, int from, int to) {
  if (from == to) return x;
  const long g = std::gcd(from, to);
  const long up = to / g, down = from / g;
  const double cutoff = 1.0 / (2.0 * static_cast<double>(std::max(up, down)));
  const double rejection = 60.0;
  const long half = static_cast<long>(std::ceil((rejection - 8.0) / (28.714 * cutoff / 10.0)));
  const double beta = 0.1102 * (rejection - 8.7);
  const long taps = 2 * half + 1;
  std::vector<double> h(static_cast<std::size_t>(taps));
  double sum = 0.0;
  for (long i = 0; i < taps; ++i) {
    const double t = static_cast<double>(i - half);
    const double r = 2.0 * static_cast<double>(i) / static_cast<double>(taps - 1) - 1.0;
    const double win = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / std::cyl_bessel_i(0.0, beta);
    h[static_cast<std::size_t>(i)] = win * 2.0 * static_cast<double>(up) * cutoff * sinc(2.0 * cutoff * t);
    sum += h[static_cast<std::size_t>(i)];
  }
  for (double& v : h) v = v / sum * static_cast<double>(up);

  const long n_in = static_cast<long>(x.size());
  const long n_out = (n_in * up + down - 1) / down;
  const long pre_pad = down - half % down;
  const long pre_remove = (half + pre_pad) / down;
  std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
  for (long i = 0; i < n_out; ++i) {
    // Upsampled-domain position of this output, relative to the unpadded filter.
    const long pos = (i + pre_remove) * down - pre_pad;
    double acc = 0.0;
    // x[j] sits at j * up; tap index k = pos - j * up must lie in [0, taps).
    const long j_lo = std::max(0L, (pos - taps + 1 + up - 1) / up);
    const long j_hi = std::min(n_in - 1, pos >= 0 ? pos / up : -1);
    for (long j = j_lo; j <= j_hi; ++j) acc += h[static_cast<std::size_t>(pos - j * up)] * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

struct Envelopes {
  Eigen::MatrixXd x, y;  // bands x frames
};

const Eigen::MatrixXd& stoi_obm() {
  static const Eigen::MatrixXd m = detail::third_octave_matrix(kStoiRate, kStoiFft, kStoiBands, kStoiMinFreq);
  return m;
}

Envelopes stoi_front_end(const signal::Waveform& clean, const signal::Waveform& proc, const char* who) {
  Pair p = trimmed_pair(clean, proc, who);
  p.x = resample_octave(p.x, p.rate, kStoiRate);
  p.y = resample_octave(p.y, p.rate, kStoiRate);
  detail::remove_silent_frames(p.x, p.y, kStoiDynRange, kStoiFrame, kStoiFrame / 2);
  Envelopes env{detail::band_envelopes(p.x, stoi_obm()), detail::band_envelopes(p.y, stoi_obm())};
  if (env.x.cols() < kStoiSegment) {
    throw UndefinedMetricError(std::string(who) + ": only " + std::to_string(env.x.cols()) +
                               " non-silent frames, need " + std::to_string(kStoiSegment));
  }
  return env;
}

double stoi_score(const Envelopes& env) {
  const double clip = 1.0 + std::pow(10.0, -kStoiBeta / 20.0);
  const Eigen::Index bands = env.x.rows(), n = kStoiSegment;
  const Eigen::Index segs = env.x.cols() - n + 1;
  double sum = 0.0;
  for (Eigen::Index m = 0; m < segs; ++m) {
    for (Eigen::Index j = 0; j < bands; ++j) {
      Eigen::ArrayXd x = env.x.row(j).segment(m, n).transpose().array();
      Eigen::ArrayXd y = env.y.row(j).segment(m, n).transpose().array();
      const double alpha = x.matrix().norm() / (y.matrix().norm() + kEps);
      Eigen::ArrayXd yp = (alpha * y).min(x * clip);
      yp -= yp.mean();
      x -= x.mean();
      yp /= yp.matrix().norm() + kEps;
      x /= x.matrix().norm() + kEps;
      sum += (x * yp).sum();
    }
  }
  return sum / static_cast<double>(bands * segs);
}

void normalize_rows(Eigen::MatrixXd& a) {
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    a.row(r).array() -= a.row(r).mean();
    const double nrm = a.row(r).norm();
    if (nrm > 0.0) a.row(r) /= nrm;
  }
}

void normalize_cols(Eigen::MatrixXd& a) {
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    a.col(c).array() -= a.col(c).mean();
    const double nrm = a.col(c).norm();
    if (nrm > 0.0) a.col(c) /= nrm;
  }
}

double estoi_score(const Envelopes& env) {
  const Eigen::Index n = kStoiSegment;
  const Eigen::Index segs = env.x.cols() - n + 1;
  double sum = 0.0;
  for (Eigen::Index m = 0; m < segs; ++m) {
    Eigen::MatrixXd x = env.x.middleCols(m, n), y = env.y.middleCols(m, n);
    normalize_rows(x);
    normalize_rows(y);
    normalize_cols(x);
    normalize_cols(y);
    sum += x.cwiseProduct(y).sum() / static_cast<double>(n);
  }
  return sum / static_cast<double>(segs);
}

double erb_number(double f) { return 21.4 * std::log10(4.37e-3 * f + 1.0); }
double erb_number_inv(double e) { return (std::pow(10.0, e / 21.4) - 1.0) / 4.37e-3; }

// Zero-phase filtering in the frequency domain.
std::vector<double> filtered(const std::vector<std::complex<double>>& spec, const std::vector<double>& gain,
                             std::size_t nfft) {
  std::vector<std::complex<double>> s(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) s[k] = spec[k] * gain[k];
  return signal::irfft(s, nfft);
}

// Rectified, 25 Hz low-passed, 100 Hz decimated envelopes [bands x frames].
Eigen::MatrixXd ncm_envelopes(const std::vector<double>& x, int rate, const std::vector<double>& centres) {
  const std::size_t n = x.size();
  std::size_t nfft = 1;
  while (nfft < n + static_cast<std::size_t>(rate / 10)) nfft <<= 1;
  std::vector<double> padded(x);
  padded.resize(nfft, 0.0);
  const auto spec = signal::rfft(padded);
  const std::size_t bins = nfft / 2 + 1;
  const double df = static_cast<double>(rate) / static_cast<double>(nfft);

  std::vector<double> lp(bins);
  for (std::size_t k = 0; k < bins; ++k) lp[k] = 1.0 / std::sqrt(1.0 + std::pow(k * df / kNcmEnvCutoffHz, 8.0));

  const std::size_t step = static_cast<std::size_t>(rate / kNcmEnvRate);
  const std::size_t frames = (n + step - 1) / step;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(centres.size()), static_cast<Eigen::Index>(frames));
  std::vector<double> g(bins);
  for (std::size_t b = 0; b < centres.size(); ++b) {
    const double fc = centres[b];
    const double bw = 1.019 * 24.7 * (4.37e-3 * fc + 1.0);
    for (std::size_t k = 0; k < bins; ++k) {
      const double u = (k * df - fc) / bw;
      g[k] = 1.0 / ((1.0 + u * u) * (1.0 + u * u));
    }
    std::vector<double> band = filtered(spec, g, nfft);
    for (std::size_t i = 0; i < nfft; ++i) band[i] = i < n ? std::abs(band[i]) : 0.0;
    const std::vector<double> env = filtered(signal::rfft(band), lp, nfft);
    for (std::size_t t = 0; t < frames; ++t) out(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(t)) = env[t * step];
  }
  return out;
}

}  // namespace

namespace detail {

Eigen::MatrixXd third_octave_matrix(int fs, int nfft, int bands, double min_freq) {
  const int bins = nfft / 2 + 1;
  auto nearest = [&](double f) {
    int best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (int k = 0; k < bins; ++k) {
      const double d = std::pow(static_cast<double>(fs) * k / nfft - f, 2.0);
      if (d < dist) {
        dist = d;
        best = k;
      }
    }
    return best;
  };
  Eigen::MatrixXd obm = Eigen::MatrixXd::Zero(bands, bins);
  for (int i = 0; i < bands; ++i) {
    const int lo = nearest(min_freq * std::pow(2.0, (2.0 * i - 1.0) / 6.0));
    const int hi = nearest(min_freq * std::pow(2.0, (2.0 * i + 1.0) / 6.0));
    for (int k = lo; k < hi; ++k) obm(i, k) = 1.0;
  }
  return obm;
}

void remove_silent_frames(std::vector<double>& x, std::vector<double>& y, double dyn_range, int frame, int hop) {
  const long frames = frame_count(x.size(), frame, hop);
  const std::vector<double> w = inner_hann(frame);
  std::vector<double> energy(static_cast<std::size_t>(frames));
  for (long f = 0; f < frames; ++f) {
    double ss = 0.0;
    for (int i = 0; i < frame; ++i) {
      const double v = w[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(f * hop + i)];
      ss += v * v;
    }
    energy[static_cast<std::size_t>(f)] = 20.0 * std::log10(std::sqrt(ss) + kEps);
  }
  const double top = frames > 0 ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  std::vector<long> keep;
  for (long f = 0; f < frames; ++f) {
    if (top - dyn_range - energy[static_cast<std::size_t>(f)] < 0.0) keep.push_back(f);
  }
  const std::size_t len = keep.empty() ? 0 : (keep.size() - 1) * static_cast<std::size_t>(hop) + static_cast<std::size_t>(frame);
  std::vector<double> xo(len, 0.0), yo(len, 0.0);
  for (std::size_t j = 0; j < keep.size(); ++j) {
    const std::size_t src = static_cast<std::size_t>(keep[j] * hop), dst = j * static_cast<std::size_t>(hop);
    for (int i = 0; i < frame; ++i) {
      const double wi = w[static_cast<std::size_t>(i)];
      xo[dst + static_cast<std::size_t>(i)] += wi * x[src + static_cast<std::size_t>(i)];
      yo[dst + static_cast<std::size_t>(i)] += wi * y[src + static_cast<std::size_t>(i)];
    }
  }
  x = std::move(xo);
  y = std::move(yo);
}

Eigen::MatrixXd band_envelopes(const std::vector<double>& x, const Eigen::MatrixXd& obm) {
  const int hop = kStoiFrame / 2;
  const long frames = frame_count(x.size(), kStoiFrame, hop);
  static const auto basis = [] {
    const int bins = kStoiFft / 2 + 1;
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cs{Eigen::MatrixXd(bins, kStoiFrame), Eigen::MatrixXd(bins, kStoiFrame)};
    const std::vector<double> w = inner_hann(kStoiFrame);
    for (int k = 0; k < bins; ++k) {
      for (int i = 0; i < kStoiFrame; ++i) {
        const double ph = 2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(k) * i) % kStoiFft) / kStoiFft;
        cs.first(k, i) = w[static_cast<std::size_t>(i)] * std::cos(ph);
        cs.second(k, i) = w[static_cast<std::size_t>(i)] * std::sin(ph);
      }
    }
    return cs;
  }();
  Eigen::MatrixXd fr(kStoiFrame, frames);
  for (long f = 0; f < frames; ++f) {
    for (int i = 0; i < kStoiFrame; ++i) fr(i, f) = x[static_cast<std::size_t>(f * hop + i)];
  }
  const Eigen::MatrixXd re = basis.first * fr, im = basis.second * fr;
  const Eigen::MatrixXd power = re.cwiseAbs2() + im.cwiseAbs2();
  return (obm * power).cwiseSqrt();
}

std::vector<double> erb_centres(int bands, double lo, double hi) {
  const double e0 = erb_number(lo), e1 = erb_number(hi);
  std::vector<double> c(static_cast<std::size_t>(bands));
  for (int b = 0; b < bands; ++b) c[static_cast<std::size_t>(b)] = erb_number_inv(e0 + (e1 - e0) * (b + 0.5) / bands);
  return c;
}

}  // namespace detail

double stoi(const signal::Waveform& clean, const signal::Waveform& proc) {
  return stoi_score(stoi_front_end(clean, proc, "stoi"));
}

double estoi(const signal::Waveform& clean, const signal::Waveform& proc) {
  return estoi_score(stoi_front_end(clean, proc, "estoi"));
}

double ncm(const signal::Waveform& clean, const signal::Waveform& proc) {
  Pair p = trimmed_pair(clean, proc, "ncm");
  if (p.rate < 2 * static_cast<int>(kNcmHighHz)) {
    p.x = to_rate(std::move(p.x), p.rate, signal::kPipelineRate);
    p.y = to_rate(std::move(p.y), p.rate, signal::kPipelineRate);
    p.rate = signal::kPipelineRate;
  }
  const std::vector<double> centres = detail::erb_centres(kNcmBands, kNcmLowHz, kNcmHighHz);
  const Eigen::MatrixXd ex = ncm_envelopes(p.x, p.rate, centres);
  const Eigen::MatrixXd ey = ncm_envelopes(p.y, p.rate, centres);
  if (ex.cols() < 2) throw UndefinedMetricError("ncm: signal shorter than two envelope frames");
  double ti = 0.0;
  for (Eigen::Index b = 0; b < ex.rows(); ++b) {
    const Eigen::ArrayXd a = ex.row(b).array() - ex.row(b).mean();
    const Eigen::ArrayXd c = ey.row(b).array() - ey.row(b).mean();
    const double sa = a.matrix().squaredNorm(), sc = c.matrix().squaredNorm();
    double snr = -15.0;
    if (sa > 0.0 && sc > 0.0) {
      const double r2 = std::pow((a * c).sum(), 2.0) / (sa * sc);
      snr = r2 >= 1.0 ? 15.0 : std::clamp(10.0 * std::log10(r2 / (1.0 - r2)), -15.0, 15.0);
    }
    ti += (snr + 15.0) / 30.0;
  }
  return ti / static_cast<double>(ex.rows());
}

Scores all_metrics(const signal::Waveform& clean, const signal::Waveform& proc) {
  const Envelopes env = stoi_front_end(clean, proc, "stoi");
  return {stoi_score(env), estoi_score(env), ncm(clean, proc)};
}

}  // namespace avseci::eval
