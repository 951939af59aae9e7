// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "avse/enhancer.hpp"
#include "avse/visual.hpp"
#include "common/error.hpp"
#include "data/synth.hpp"
#include "nn/ops.hpp"
#include "oracles.hpp"
#include "signal/stft.hpp"

using namespace avseci;
using namespace avseci::avse;

namespace {

VisualTrack ramp_track(int frames, int dim, double fps = 25.0) {
  VisualTrack t;
  t.fps = fps;
  t.data.resize(frames, dim);
  for (int i = 0; i < frames; ++i) t.data.row(i).setConstant(i);
  return t;
}

void fill(nn::Parameter& p, std::initializer_list<double> v) {
  REQUIRE(p.value.values.size() == v.size());
  std::copy(v.begin(), v.end(), p.value.values.begin());
}

double interior_rel_err(const std::vector<double>& a, const std::vector<double>& b, std::size_t margin) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = margin; i + margin < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("align_visual holds each video frame for five STFT frames") {
  const auto t = ramp_track(10, 3);
  const Eigen::MatrixXd a = align_visual(t, 40, 128.0 / 16000.0);
  REQUIRE(a.rows() == 40);
  REQUIRE(a.cols() == 3);
  // Row t takes video frame round(t / 5).
  for (int r = 0; r < 40; ++r) CHECK(a(r, 0) == std::min(9L, std::lround(r / 5.0)));
  // Runs of five except the half-length first run from rounding.
  int run = 1, longest = 0;
  for (int r = 1; r < 40; ++r) {
    run = a(r, 0) == a(r - 1, 0) ? run + 1 : 1;
    longest = std::max(longest, run);
  }
  CHECK(longest >= 5);

  const Eigen::MatrixXd held = align_visual(ramp_track(1, 2), 17, 0.008);
  CHECK(held.rows() == 17);
  CHECK((held.array() == 0.0).all());
  CHECK(align_visual(t, 500, 0.008).rows() == 500);
  CHECK(align_visual(t, 500, 0.008)(499, 0) == 9.0);

  VisualTrack empty;
  CHECK_THROWS_AS(align_visual(empty, 5, 0.008), DataError);
}

TEST_CASE("fusion with zero value projection is the identity") {
  nn::Tape tape;
  FusionLayer layer(FusionMode::kCross, 3, 2, 4);
  auto a = testing::random_tensor({5, 3}, 1), v = testing::random_tensor({5, 2}, 2);
  for (auto* p : {&layer.q_w, &layer.k_w}) {
    auto r = testing::random_tensor(p->value.shape, 3);
    p->value = r;
  }
  const nn::Var out = fusion_block(tape, layer, tape.constant(a), tape.constant(v));
  for (std::size_t i = 0; i < a.values.size(); ++i) CHECK(out.value()[i] == a.values[i]);
}

TEST_CASE("fusion with constant visual rows adds the constant value row") {
  nn::Tape tape;
  FusionLayer layer(FusionMode::kCross, 2, 2, 2);
  for (auto* p : layer.parameters()) p->value = testing::random_tensor(p->value.shape, 7);
  nn::Tensor a = testing::random_tensor({4, 2}, 8);
  nn::Tensor vis({4, 2}, {0.3, -0.7, 0.3, -0.7, 0.3, -0.7, 0.3, -0.7});
  const nn::Var out = fusion_block(tape, layer, tape.constant(a), tape.constant(vis));
  // M_V v + b_V
  const auto& W = layer.v_w.value.values;
  const auto& b = layer.v_b.value.values;
  const double mv0 = 0.3 * W[0] - 0.7 * W[2] + b[0];
  const double mv1 = 0.3 * W[1] - 0.7 * W[3] + b[1];
  for (std::size_t t = 0; t < 4; ++t) {
    CHECK(out.value()[2 * t] - a[2 * t] == doctest::Approx(mv0).epsilon(1e-12));
    CHECK(out.value()[2 * t + 1] - a[2 * t + 1] == doctest::Approx(mv1).epsilon(1e-12));
  }
}

TEST_CASE("two-frame fusion matches the direct formula") {
  nn::Tape tape;
  FusionLayer layer(FusionMode::kCross, 2, 2, 2);
  fill(layer.q_w, {1.0, 0.5, -0.5, 1.0});
  fill(layer.q_b, {0.1, 0.0});
  fill(layer.k_w, {0.2, -1.0, 0.7, 0.3});
  fill(layer.k_b, {0.0, 0.2});
  fill(layer.v_w, {1.0, 2.0, -1.0, 0.5});
  fill(layer.v_b, {0.0, -0.1});
  const nn::Tensor a({2, 2}, {0.4, -0.2, 1.0, 0.3});
  const nn::Tensor v({2, 2}, {-0.5, 0.8, 0.9, 0.1});
  const nn::Var out = fusion_block(tape, layer, tape.constant(a), tape.constant(v));

  auto lin = [](const double* x, const nn::Parameter& w, const nn::Parameter& b, int j) {
    return x[0] * w.value.values[static_cast<std::size_t>(j)] + x[1] * w.value.values[static_cast<std::size_t>(2 + j)] +
           b.value.values[static_cast<std::size_t>(j)];
  };
  for (int t = 0; t < 2; ++t) {
    const double* at = &a.values[static_cast<std::size_t>(2 * t)];
    double q[2], s[2];
    for (int j = 0; j < 2; ++j) q[j] = lin(at, layer.q_w, layer.q_b, j);
    for (int u = 0; u < 2; ++u) {
      const double* vu = &v.values[static_cast<std::size_t>(2 * u)];
      s[u] = (q[0] * lin(vu, layer.k_w, layer.k_b, 0) + q[1] * lin(vu, layer.k_w, layer.k_b, 1)) / std::sqrt(2.0);
    }
    const double w0 = 1.0 / (1.0 + std::exp(s[1] - s[0])), w1 = 1.0 - w0;
    for (int j = 0; j < 2; ++j) {
      const double expect = at[j] + w0 * lin(&v.values[0], layer.v_w, layer.v_b, j) +
                            w1 * lin(&v.values[2], layer.v_w, layer.v_b, j);
      CHECK(out.value()[static_cast<std::size_t>(2 * t + j)] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("fusion errors") {
  nn::Tape tape;
  FusionLayer cross(FusionMode::kCross, 2, 2, 2);
  const auto a = tape.constant(testing::random_tensor({3, 2}, 1));
  CHECK_THROWS_AS(fusion_block(tape, cross, a, std::nullopt), DataError);
  CHECK_THROWS_AS(fusion_block(tape, cross, a, tape.constant(testing::random_tensor({4, 2}, 2))), ShapeError);
  FusionLayer self(FusionMode::kSelf, 2, 2, 2);
  CHECK(fusion_block(tape, self, a, std::nullopt).shape() == nn::Shape{3, 2});
}

TEST_CASE("identity and zero masks") {
  const auto w = data::synth_utterance(3);
  const auto s = signal::stft(w, {});
  const auto ones = apply_mask(w, Eigen::MatrixXd::Ones(s.bins(), s.frames()));
  CHECK(ones.enhanced.size() == w.size());
  CHECK(interior_rel_err(ones.enhanced.samples, w.samples, 510) < 1e-6);
  const auto zeros = apply_mask(w, Eigen::MatrixXd::Zero(s.bins(), s.frames()));
  for (double x : zeros.enhanced.samples) CHECK(x == 0.0);
  CHECK_THROWS_AS(apply_mask(w, Eigen::MatrixXd::Ones(3, 3)), ShapeError);
}

TEST_CASE("enhancer mask is bounded and never amplifies") {
  const auto clean = data::synth_utterance(5);
  const auto vis = synth_visual_features(clean);
  EnhancerNetwork net({}, 4);
  const auto r = enhance(clean, &vis, net);
  const auto s = signal::stft(clean, {});
  REQUIRE(r.mask.rows() == s.bins());
  REQUIRE(r.mask.cols() == s.frames());
  CHECK(r.mask.minCoeff() >= 0.0);
  CHECK(r.mask.maxCoeff() <= 1.0);
  CHECK((r.enhanced_mag.array() <= s.data.cwiseAbs().array() + 1e-15).all());
  CHECK(r.enhanced.size() == clean.size());
  // No sampling anywhere.
  const auto again = enhance(clean, &vis, net);
  CHECK(again.enhanced.samples == r.enhanced.samples);
}

TEST_CASE("cross needs visual features, self ignores them") {
  const auto clean = data::synth_utterance(6);
  EnhancerNetwork cross({}, 1);
  CHECK_THROWS_AS(enhance(clean, nullptr, cross), DataError);
  EnhancerConfig sc;
  sc.fusion = FusionMode::kSelf;
  EnhancerNetwork self(sc, 1);
  const auto r = enhance(clean, nullptr, self);
  const auto vis = synth_visual_features(clean);
  CHECK(enhance(clean, &vis, cross).mask.rows() == r.mask.rows());
  CHECK(enhance(clean, &vis, cross).mask.cols() == r.mask.cols());
  signal::Waveform w8{std::vector<double>(8000, 0.1), 8000};
  CHECK_THROWS_AS(enhance(w8, nullptr, self), DataError);
}

TEST_CASE("cross and self differ only in the key/value input width") {
  EnhancerConfig cc, sc;
  sc.fusion = FusionMode::kSelf;
  EnhancerNetwork cross(cc, 1), self(sc, 1);
  const std::size_t kv_cross = static_cast<std::size_t>(cc.visual_dim), kv_self = static_cast<std::size_t>(cc.audio_dim);
  const std::size_t d_k = static_cast<std::size_t>(cc.audio_dim), d_a = d_k;
  const long diff = static_cast<long>(cross.parameter_count()) - static_cast<long>(self.parameter_count());
  CHECK(diff == static_cast<long>((kv_cross - kv_self) * (d_k + d_a)));
  auto pc = cross.parameters(), ps = self.parameters();
  REQUIRE(pc.size() == ps.size());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    CHECK(pc[i]->name == ps[i]->name);
    if (pc[i]->name != "fusion.k.weight" && pc[i]->name != "fusion.v.weight") CHECK(pc[i]->value.shape == ps[i]->value.shape);
  }
}

TEST_CASE("inputs shorter than one window are padded and truncated") {
  const auto full = data::synth_utterance(2);
  signal::Waveform w{std::vector<double>(full.samples.begin(), full.samples.begin() + 300), 16000};
  EnhancerConfig sc;
  sc.fusion = FusionMode::kSelf;
  EnhancerNetwork self(sc, 1);
  const auto r = enhance(w, nullptr, self);
  CHECK(r.enhanced.size() == 300);
  CHECK(r.mask.cols() == 1);
}

TEST_CASE("checkpoint round trip preserves the enhancer") {
  EnhancerConfig sc;
  sc.fusion = FusionMode::kSelf;
  EnhancerNetwork net(sc, 9);
  const auto dir = testing::scratch_dir("enhancer_ckpt");
  net.to_checkpoint().save(dir);
  EnhancerNetwork back = EnhancerNetwork::from_checkpoint(nn::Checkpoint::load(dir));
  CHECK(back.config().fusion == FusionMode::kSelf);
  const auto w = data::synth_utterance(1);
  const auto a = enhance(w, nullptr, net), b = enhance(w, nullptr, back);
  CHECK((a.mask - b.mask).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("oracle visual features") {
  const auto clean = data::synth_utterance(12);
  VisualSynthConfig cfg;
  cfg.seed = 3;
  const auto a = synth_visual_features(clean, cfg), b = synth_visual_features(clean, cfg);
  CHECK(a.data == b.data);
  CHECK(a.dim() == 32);
  CHECK(a.fps == 25.0);
  CHECK(a.frames() == static_cast<int>(std::ceil(clean.size() / 640.0)));
  CHECK(a.data.allFinite());
  cfg.seed = 4;
  CHECK(synth_visual_features(clean, cfg).data != a.data);

  SUBCASE("silence is a constant plus noise") {
    VisualSynthConfig quiet;
    quiet.noise_sigma = 0.0;
    const auto s = synth_visual_features(signal::Waveform{std::vector<double>(16000, 0.0), 16000}, quiet);
    CHECK((s.data.rowwise() - s.data.row(0)).cwiseAbs().maxCoeff() == 0.0);
    VisualSynthConfig noisy;
    const auto n = synth_visual_features(signal::Waveform{std::vector<double>(16000, 0.0), 16000}, noisy);
    const double sd = std::sqrt((n.data.array() - n.data.mean()).square().mean());
    CHECK(sd == doctest::Approx(0.1).epsilon(0.2));
  }

  SUBCASE("features follow the clean envelope") {
    double total = 0.0;
    int count = 0;
    for (std::uint64_t seed = 20; seed < 26; ++seed) {
      const auto w = data::synth_utterance(seed);
      const auto v = synth_visual_features(w);
      // Frame energy of the clean speech on the video grid.
      Eigen::VectorXd env(v.frames());
      for (int t = 0; t < v.frames(); ++t) {
        double e = 0.0;
        for (std::size_t i = static_cast<std::size_t>(t) * 640; i < std::min(w.size(), static_cast<std::size_t>(t + 1) * 640); ++i) {
          e += w.samples[i] * w.samples[i];
        }
        env(t) = std::log(e + 1e-8);
      }
      const Eigen::VectorXd ec = env.array() - env.mean();
      for (int d = 0; d < v.dim(); ++d) {
        const Eigen::VectorXd x = v.data.col(d).array() - v.data.col(d).mean();
        total += std::abs(x.dot(ec) / (x.norm() * ec.norm()));
        ++count;
      }
    }
    CHECK(total / count > 0.3);
  }
}

TEST_CASE("VISF file round trip and errors") {
  const auto t = synth_visual_features(data::synth_utterance(1));
  const auto dir = testing::scratch_dir("visf");
  write_visual(t, dir / "a.visf");
  const auto back = read_visual(dir / "a.visf");
  CHECK(back.frames() == t.frames());
  CHECK(back.dim() == t.dim());
  CHECK((back.data - t.data).cwiseAbs().maxCoeff() < 1e-5);
  {
    std::ofstream(dir / "bad.visf") << "VISF v2 dv=32 fps=25 frames=1\n";
  }
  CHECK_THROWS_AS(read_visual(dir / "bad.visf"), Error);
  CHECK_THROWS_AS(read_visual(dir / "missing.visf"), Error);
}
