// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <vector>

#include <json.hpp>

#include "common/error.hpp"
#include "common/files.hpp"
#include "data/manifest.hpp"
#include "data/mix.hpp"
#include "data/synth.hpp"
#include "ecs/ecs.hpp"
#include "eval/evaluate.hpp"
#include "eval/metrics.hpp"
#include "eval/vocoder.hpp"
#include "oracles.hpp"
#include "signal/fft.hpp"

using namespace avseci;
using namespace avseci::eval;

namespace {

signal::Waveform utterance(std::uint64_t seed) { return data::synth_utterance(seed); }

signal::Waveform with_white_noise(const signal::Waveform& clean, double snr_db, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> noise(clean.size());
  for (double& v : noise) v = n(rng);
  const double g = signal::rms(clean.samples) / (signal::rms(noise) * std::pow(10.0, snr_db / 20.0));
  signal::Waveform out = clean;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += g * noise[i];
  return out;
}

signal::Waveform scaled(signal::Waveform w, double c) {
  for (double& v : w.samples) v *= c;
  return w;
}

ace::Electrodogram constant_elec(int frames, const std::vector<int>& on, double value = 1.0) {
  ace::Electrodogram e;
  e.data = Eigen::MatrixXd::Zero(ace::kChannels, frames);
  for (int c : on) e.data.row(c).setConstant(value);
  return e;
}

std::vector<double> power_spectrum(const std::vector<double>& x) {
  std::vector<double> p;
  for (const auto& c : signal::rfft(x)) p.push_back(std::norm(c));
  return p;
}

}  // namespace

TEST_CASE("vocoder: zero electrodogram is silent") {
  const auto w = tone_vocode(constant_elec(50, {}));
  CHECK(w.size() == 49 * 32 + 128);
  CHECK(signal::peak_abs(w.samples) == 0.0);
}

TEST_CASE("vocoder: config validation") {
  VocoderConfig cfg = default_vocoder();
  CHECK(cfg.carrier_hz.size() == 22);
  for (std::size_t i = 1; i < cfg.carrier_hz.size(); ++i) CHECK(cfg.carrier_hz[i] > cfg.carrier_hz[i - 1]);
  CHECK(cfg.carrier_hz.back() < 8000.0);
  VocoderConfig bad = cfg;
  bad.carrier_hz[3] = bad.carrier_hz[2];
  CHECK_THROWS_AS(validate(bad), UsageError);
  bad = cfg;
  bad.carrier_hz.back() = 8000.0;
  CHECK_THROWS_AS(validate(bad), UsageError);
  ace::Electrodogram e = constant_elec(10, {0});
  e.data.conservativeResize(21, 10);
  CHECK_THROWS_AS(tone_vocode(e), ShapeError);
}

TEST_CASE("vocoder: single channel concentrates power at its carrier") {
  const VocoderConfig cfg = default_vocoder();
  const auto w = tone_vocode(constant_elec(800, {9}), cfg);
  const auto p = power_spectrum(w.samples);
  const double df = 16000.0 / static_cast<double>(w.size());
  double total = 0.0, near = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    total += p[k];
    if (std::abs(k * df - cfg.carrier_hz[9]) <= 50.0) near += p[k];
  }
  CHECK(near / total >= 0.9);
  CHECK(signal::rms(w.samples) == doctest::Approx(kVocoderRms).epsilon(1e-12));
}

TEST_CASE("vocoder: all channels give a peak at every carrier") {
  const VocoderConfig cfg = default_vocoder();
  std::vector<int> all(22);
  for (int c = 0; c < 22; ++c) all[static_cast<std::size_t>(c)] = c;
  const auto w = tone_vocode(constant_elec(1000, all), cfg);
  const auto p = power_spectrum(w.samples);
  const double df = 16000.0 / static_cast<double>(w.size());
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= static_cast<double>(p.size());
  for (double fc : cfg.carrier_hz) {
    const auto k = static_cast<std::size_t>(std::lround(fc / df));
    double local = 0.0;
    for (std::size_t j = k - 2; j <= k + 2; ++j) local = std::max(local, p[j]);
    CHECK(local > 100.0 * mean);
  }
}

TEST_CASE("vocoder: linear envelope interpolation and continuous phase") {
  VocoderConfig cfg = default_vocoder();
  ace::Electrodogram e = constant_elec(6, {});
  const double env[6] = {0.0, 1.0, 0.5, 0.5, 0.2, 0.9};
  for (int t = 0; t < 6; ++t) e.data(4, t) = env[t];
  cfg.target_rms = 1.0;
  const auto w = tone_vocode(e, cfg);
  REQUIRE(w.size() == 5 * 32 + 128);
  // Oracle: piecewise-linear envelope through (64 + 32 t, env[t]).
  std::vector<double> ref(w.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double x = static_cast<double>(i);
    double a;
    if (x <= 64.0) a = env[0];
    else if (x >= 64.0 + 5 * 32) a = env[5];
    else {
      const int t = static_cast<int>((x - 64.0) / 32.0);
      const double frac = (x - 64.0 - 32.0 * t) / 32.0;
      a = env[t] + frac * (env[t + 1] - env[t]);
    }
    ref[i] = a * std::sin(2.0 * std::numbers::pi * cfg.carrier_hz[4] * x / 16000.0);
  }
  const double g = 1.0 / signal::rms(ref);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(w.samples[i] == doctest::Approx(g * ref[i]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("third-octave bands match the reference bin edges") {
  const Eigen::MatrixXd obm = detail::third_octave_matrix(10000, 512, 15, 150.0);
  const int edges[15][2] = {{7, 9},     {9, 11},    {11, 14},   {14, 17},   {17, 22},
                            {22, 27},   {27, 34},   {34, 43},   {43, 55},   {55, 69},
                            {69, 87},   {87, 109},  {109, 138}, {138, 174}, {174, 219}};
  REQUIRE(obm.rows() == 15);
  REQUIRE(obm.cols() == 257);
  for (int b = 0; b < 15; ++b) {
    for (int k = 0; k < 257; ++k) {
      const bool in = k >= edges[b][0] && k < edges[b][1];
      CHECK(obm(b, k) == (in ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("silent-frame removal keeps only loud frames") {
  // 20 loud frames then 20 frames at -60 dB.
  std::vector<double> x = testing::random_signal(128 * 41, 3);
  for (std::size_t i = 128 * 21; i < x.size(); ++i) x[i] *= 1e-3;
  std::vector<double> y = x;
  detail::remove_silent_frames(x, y, 40.0, 256, 128);
  // Frames 0..19 are loud; frame 20 straddles and is loud as well.
  CHECK(x.size() == 20 * 128 + 256);
  CHECK(x == y);
}

TEST_CASE("metric self-identity") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto x = utterance(seed);
    CHECK(std::abs(stoi(x, x) - 1.0) < 1e-8);
    CHECK(std::abs(estoi(x, x) - 1.0) < 1e-8);
    CHECK(std::abs(ncm(x, x) - 1.0) < 1e-8);
  }
}

TEST_CASE("metrics are invariant to rescaling the processed signal") {
  const auto x = utterance(11);
  const auto y = with_white_noise(x, 0.0, 5);
  const Scores base = all_metrics(x, y);
  for (double c : {0.5, 2.0}) {
    const Scores s = all_metrics(x, scaled(y, c));
    CHECK(std::abs(s.stoi - base.stoi) < 1e-6);
    CHECK(std::abs(s.estoi - base.estoi) < 1e-6);
    CHECK(std::abs(s.ncm - base.ncm) < 1e-6);
  }
}

TEST_CASE("metrics decrease with mixture SNR") {
  for (std::uint64_t seed : {21u, 22u}) {
    const auto x = utterance(seed);
    Scores prev{2.0, 2.0, 2.0};
    for (double snr : {12.0, 0.0, -12.0}) {
      const Scores s = all_metrics(x, with_white_noise(x, snr, seed + 100));
      CHECK(s.stoi < prev.stoi);
      CHECK(s.estoi < prev.estoi);
      CHECK(s.ncm < prev.ncm);
      prev = s;
    }
  }
}

TEST_CASE("ncm of independent noise is low") {
  for (std::uint64_t seed : {31u, 32u, 33u}) {
    const auto x = utterance(seed);
    signal::Waveform n{testing::random_signal(x.size(), seed + 7), 16000};
    CHECK(ncm(x, n) < 0.3);
  }
}

TEST_CASE("estoi is below stoi on noisy mixtures in aggregate") {
  double s = 0.0, e = 0.0;
  for (std::uint64_t seed = 40; seed < 46; ++seed) {
    const auto x = utterance(seed);
    const Scores sc = all_metrics(x, with_white_noise(x, -4.0, seed));
    s += sc.stoi;
    e += sc.estoi;
  }
  CHECK(e < s);
}

TEST_CASE("silent input is an undefined metric") {
  const auto x = utterance(5);
  signal::Waveform z{std::vector<double>(x.size(), 0.0), 16000};
  CHECK_THROWS_AS(stoi(z, x), UndefinedMetricError);
  CHECK_THROWS_AS(estoi(x, z), UndefinedMetricError);
  CHECK_THROWS_AS(ncm(z, z), UndefinedMetricError);
  signal::Waveform brief{std::vector<double>(x.samples.begin(), x.samples.begin() + 3000), 16000};
  CHECK_THROWS_AS(stoi(brief, brief), UndefinedMetricError);
}

TEST_CASE("stoi and estoi agree with the reference implementation") {
  const std::filesystem::path dir = std::filesystem::path(AVSECI_TEST_DATA_DIR) / "stoi";
  const auto golden = nlohmann::json::parse(read_file_text(dir / "golden.json"));
  REQUIRE(golden.at("pairs").size() == 10);
  for (const auto& p : golden.at("pairs")) {
    const std::string name = p.at("name");
    const auto c = signal::read_wav(dir / (name + "_clean.wav"));
    const auto d = signal::read_wav(dir / (name + "_proc.wav"));
    const Scores s = all_metrics(c, d);
    INFO(name);
    CHECK(std::abs(s.stoi - p.at("stoi").get<double>()) < 0.01);
    CHECK(std::abs(s.estoi - p.at("estoi").get<double>()) < 0.01);
  }
}

TEST_CASE("evaluate_set: structure, determinism and failure accounting") {
  const auto dir = testing::scratch_dir("eval_set");
  data::CorpusConfig cc;
  cc.n_train = 2;
  cc.n_val = 1;
  cc.n_test = 4;
  cc.synth.min_duration_s = 2.0;
  cc.synth.max_duration_s = 2.2;
  const data::Manifest m = data::build_corpus(cc, dir / "corpus");
  ecs::EcsNetwork net(3);
  net.corpus_peak = 30.0;
  SystemModels models{&net, nullptr, {}};
  EvalOptions opts;
  opts.conditions = {kClean, kNoisy};

  const MetricReport a = evaluate_set(m, System::kEcs, models, opts);
  CHECK(a.rows.size() == 8);
  CHECK(a.failures.empty());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].id == m.split("test")[i / 2]->id);
    CHECK(a.rows[i].condition == opts.conditions[i % 2]);
    CHECK(a.rows[i].snr_db.has_value() == (i % 2 == 1));
  }
  double sum = 0.0;
  for (const auto& r : a.rows) {
    if (r.condition == kNoisy) sum += r.scores.stoi;
  }
  CHECK(a.mean(kNoisy).mean.stoi == doctest::Approx(sum / 4.0));
  CHECK(a.mean(kNoisy).count == 4);

  const MetricReport b = evaluate_set(m, System::kEcs, models, opts);
  CHECK(report_csv(a) == report_csv(b));
  CHECK(report_csv(a).rfind("id,condition,snr_db,stoi,estoi,ncm\n", 0) == 0);

  // A missing noisy file is recorded, not fatal.
  std::filesystem::remove(m.resolve(m.split("test")[2]->noisy_path));
  const MetricReport c = evaluate_set(m, System::kEcs, models, opts);
  CHECK(c.failures.size() == 1);
  CHECK(c.failures[0].id == m.split("test")[2]->id);
  CHECK(c.mean(kNoisy).count == 3);
  CHECK(c.mean(kClean).count == 4);

  CHECK_THROWS_AS(evaluate_set(m, System::kAseEcs, models, opts), UsageError);
  CHECK_THROWS_AS(parse_system("vocoder"), UsageError);
  CHECK(parse_system("avse-ecs") == System::kAvseEcs);
}

TEST_CASE("markdown table layout") {
  const std::string t = markdown_table("System", {{"ACE", {0.5, 0.25, 0.125}}});
  CHECK(t == "| System | STOI | ESTOI | NCM |\n|---|---|---|---|\n| ACE | 0.5000 | 0.2500 | 0.1250 |\n");
}
