// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avse/enhancer.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "nn/init.hpp"
#include "nn/ops.hpp"

namespace avseci::avse {

std::string to_string(FusionMode mode) { return mode == FusionMode::kCross ? "cross" : "self"; }

FusionMode parse_fusion(const std::string& s) {
  if (s == "cross") return FusionMode::kCross;
  if (s == "self") return FusionMode::kSelf;
  throw UsageError("fusion mode must be 'cross' or 'self', got '" + s + "'");
}

nlohmann::json to_json(const EnhancerConfig& cfg) {
  return {{"fusion", to_string(cfg.fusion)},
          {"window_len", cfg.stft.window_len},
          {"hop", cfg.stft.hop},
          {"audio_dim", cfg.audio_dim},
          {"visual_dim", cfg.visual_dim},
          {"enc1", cfg.enc1},
          {"enc2", cfg.enc2},
          {"dec1", cfg.dec1},
          {"locality_slope", cfg.locality_slope}};
}

EnhancerConfig enhancer_config_from_json(const nlohmann::json& j) {
  EnhancerConfig cfg;
  cfg.fusion = parse_fusion(j.at("fusion").get<std::string>());
  cfg.stft.window_len = j.at("window_len").get<int>();
  cfg.stft.hop = j.at("hop").get<int>();
  cfg.audio_dim = j.at("audio_dim").get<int>();
  cfg.visual_dim = j.at("visual_dim").get<int>();
  cfg.enc1 = j.at("enc1").get<int>();
  cfg.enc2 = j.at("enc2").get<int>();
  cfg.dec1 = j.at("dec1").get<int>();
  cfg.locality_slope = j.at("locality_slope").get<double>();
  return cfg;
}

namespace {

void init_dense(nn::Parameter& w, nn::Parameter& b, const std::string& name, std::size_t in, std::size_t out,
                std::uint64_t seed) {
  w = nn::Parameter(name + ".weight", {in, out});
  b = nn::Parameter(name + ".bias", {out});
  nn::glorot_uniform(w, in, out, seed);
}

void init_conv(nn::Parameter& w, nn::Parameter& b, const std::string& name, std::size_t cin, std::size_t cout,
               std::size_t k, std::uint64_t seed) {
  w = nn::Parameter(name + ".weight", {cout, cin, k, k});
  b = nn::Parameter(name + ".bias", {cout});
  nn::glorot_uniform(w, cin * k * k, cout * k * k, seed);
}

std::size_t round_up4(std::size_t n) { return (n + 3) / 4 * 4; }

}  // namespace

FusionLayer::FusionLayer(FusionMode m, std::size_t audio_dim, std::size_t kv_dim, std::size_t d_k) : mode(m) {
  q_w = nn::Parameter("fusion.q.weight", {audio_dim, d_k});
  q_b = nn::Parameter("fusion.q.bias", {d_k});
  k_w = nn::Parameter("fusion.k.weight", {kv_dim, d_k});
  k_b = nn::Parameter("fusion.k.bias", {d_k});
  v_w = nn::Parameter("fusion.v.weight", {kv_dim, audio_dim});
  v_b = nn::Parameter("fusion.v.bias", {audio_dim});
}

std::vector<nn::Parameter*> FusionLayer::parameters() { return {&q_w, &q_b, &k_w, &k_b, &v_w, &v_b}; }

nn::Var fusion_block(nn::Tape& tape, FusionLayer& layer, nn::Var audio, std::optional<nn::Var> visual,
                     const nn::Tensor* bias, bool track_params) {
  auto p = [&](nn::Parameter& prm) { return track_params ? tape.param(prm) : tape.constant(prm.value); };
  nn::Var kv = audio;
  if (layer.mode == FusionMode::kCross) {
    if (!visual) throw DataError("fusion: cross mode needs visual features");
    if (visual->shape().size() != 2 || visual->shape()[0] != audio.shape()[0]) {
      throw ShapeError("fusion: visual " + nn::shape_str(visual->shape()) + " not aligned with audio " +
                       nn::shape_str(audio.shape()));
    }
    kv = *visual;
  }
  const nn::Var q = nn::dense(audio, p(layer.q_w), p(layer.q_b));
  const nn::Var k = nn::dense(kv, p(layer.k_w), p(layer.k_b));
  const nn::Var v = nn::dense(kv, p(layer.v_w), p(layer.v_b));
  return nn::add(audio, nn::attention(q, k, v, bias));
}

nn::Tensor locality_bias(std::size_t steps, double slope) {
  nn::Tensor b({steps, steps});
  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t j = 0; j < steps; ++j) {
      b[i * steps + j] = -slope * std::abs(static_cast<double>(i) - static_cast<double>(j));
    }
  }
  return b;
}

EnhancerNetwork::EnhancerNetwork(const EnhancerConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), seed_(seed), bins_(static_cast<std::size_t>(cfg.stft.bins())) {
  const auto c1 = static_cast<std::size_t>(cfg.enc1), c2 = static_cast<std::size_t>(cfg.enc2),
             c3 = static_cast<std::size_t>(cfg.dec1), da = static_cast<std::size_t>(cfg.audio_dim);
  const std::size_t flat = c2 * round_up4(bins_) / 4;
  init_conv(enc1_w_, enc1_b_, "enc1", 1, c1, 3, seed);
  init_conv(enc2_w_, enc2_b_, "enc2", c1, c2, 3, seed);
  init_dense(in_w_, in_b_, "bottleneck.in", flat, da, seed);
  init_dense(out_w_, out_b_, "bottleneck.out", da, flat, seed);
  init_conv(dec2_w_, dec2_b_, "dec2", c2, c1, 3, seed);
  init_conv(dec1_w_, dec1_b_, "dec1", c1, c3, 3, seed);
  init_conv(head_w_, head_b_, "head", c3, 1, 1, seed);
  const std::size_t kv = cfg.fusion == FusionMode::kCross ? static_cast<std::size_t>(cfg.visual_dim) : da;
  fusion_ = FusionLayer(cfg.fusion, da, kv, da);
  nn::glorot_uniform(fusion_.q_w, da, da, seed);
  nn::glorot_uniform(fusion_.k_w, kv, da, seed);
  nn::glorot_uniform(fusion_.v_w, kv, da, seed);
}

std::vector<nn::Parameter*> EnhancerNetwork::parameters() {
  std::vector<nn::Parameter*> out = {&enc1_w_, &enc1_b_, &enc2_w_, &enc2_b_, &in_w_,   &in_b_,   &out_w_,
                                     &out_b_,  &dec2_w_, &dec2_b_, &dec1_w_, &dec1_b_, &head_w_, &head_b_};
  for (auto* p : fusion_.parameters()) out.push_back(p);
  return out;
}

std::size_t EnhancerNetwork::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->value.size();
  return n;
}

Eigen::MatrixXd EnhancerNetwork::bottleneck_visual(const VisualTrack& track, std::size_t frames,
                                                    std::size_t first) const {
  const std::size_t padded = round_up4(frames);
  const double hop_s = static_cast<double>(cfg_.stft.hop) / signal::kPipelineRate;
  const Eigen::MatrixXd full = align_visual(track, first + padded, hop_s);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(padded / 4), full.cols());
  for (Eigen::Index s = 0; s < out.rows(); ++s) out.row(s) = full.row(static_cast<Eigen::Index>(first) + 4 * s + 2);
  return out;
}

nn::Var EnhancerNetwork::forward(nn::Tape& tape, const Eigen::MatrixXd& log_mag, const Eigen::MatrixXd* visual,
                                 bool track_params) {
  if (static_cast<std::size_t>(log_mag.rows()) != bins_) {
    throw ShapeError("enhancer: expected " + std::to_string(bins_) + " bins, got " + std::to_string(log_mag.rows()));
  }
  auto p = [&](nn::Parameter& prm) { return track_params ? tape.param(prm) : tape.constant(prm.value); };
  const std::size_t f = bins_, t = static_cast<std::size_t>(log_mag.cols());
  const std::size_t fp = round_up4(f), tp = round_up4(t);
  const std::size_t fq = fp / 4, tq = tp / 4;

  nn::Tensor in({1, fp, tp});
  for (std::size_t i = 0; i < f; ++i) {
    for (std::size_t j = 0; j < t; ++j) {
      in[i * tp + j] = log_mag(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  const nn::Var x = tape.constant(std::move(in));
  const nn::Var e1 = nn::relu(nn::conv2d(x, p(enc1_w_), p(enc1_b_), 2, 1));
  const nn::Var e2 = nn::relu(nn::conv2d(e1, p(enc2_w_), p(enc2_b_), 2, 1));
  const std::size_t c2 = e2.shape()[0];

  nn::Var seq = nn::transpose(nn::reshape(e2, {c2 * fq, tq}));
  seq = nn::relu(nn::dense(seq, p(in_w_), p(in_b_)));

  std::optional<nn::Var> vis;
  if (cfg_.fusion == FusionMode::kCross) {
    if (visual == nullptr) throw DataError("enhancer: cross fusion requires a visual track");
    if (static_cast<std::size_t>(visual->rows()) != tq || visual->cols() != cfg_.visual_dim) {
      throw ShapeError("enhancer: visual features must be " + std::to_string(tq) + " x " +
                       std::to_string(cfg_.visual_dim));
    }
    nn::Tensor v({tq, static_cast<std::size_t>(cfg_.visual_dim)});
    for (std::size_t i = 0; i < tq; ++i) {
      for (int d = 0; d < cfg_.visual_dim; ++d) {
        v[i * static_cast<std::size_t>(cfg_.visual_dim) + static_cast<std::size_t>(d)] =
            (*visual)(static_cast<Eigen::Index>(i), d);
      }
    }
    vis = tape.constant(std::move(v));
  }
  const nn::Tensor bias = locality_bias(tq, cfg_.locality_slope);
  seq = fusion_block(tape, fusion_, seq, vis, &bias, track_params);

  seq = nn::relu(nn::dense(seq, p(out_w_), p(out_b_)));
  nn::Var d2 = nn::add(nn::reshape(nn::transpose(seq), {c2, fq, tq}), e2);
  nn::Var d1 = nn::relu(nn::conv2d(nn::upsample2x(d2), p(dec2_w_), p(dec2_b_), 1, 1));
  d1 = nn::add(d1, e1);
  nn::Var d0 = nn::relu(nn::conv2d(nn::upsample2x(d1), p(dec1_w_), p(dec1_b_), 1, 1));
  nn::Var mask = nn::sigmoid(nn::conv2d(d0, p(head_w_), p(head_b_), 1, 0));
  return nn::reshape(nn::pad_or_crop(mask, f, t), {f, t});
}

nn::Checkpoint EnhancerNetwork::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.kind = "avse";
  ck.seed = seed_;
  ck.config = {{"network", to_json(cfg_)}};
  auto* self = const_cast<EnhancerNetwork*>(this);
  ck.add_parameters(self->parameters());
  return ck;
}

EnhancerNetwork EnhancerNetwork::from_checkpoint(const nn::Checkpoint& ck) {
  if (ck.kind != "avse") throw DataError("checkpoint kind '" + ck.kind + "' is not an enhancer model");
  const nlohmann::json& c = ck.config.contains("network") ? ck.config["network"] : ck.config;
  EnhancerNetwork net(enhancer_config_from_json(c), ck.seed);
  ck.restore(net.parameters());
  return net;
}

Eigen::MatrixXd log_magnitude(const Eigen::MatrixXd& mag) { return mag.array().log1p().matrix(); }

namespace {

signal::Waveform pad_to_window(const signal::Waveform& w, int window_len) {
  signal::Waveform out = w;
  if (out.samples.size() < static_cast<std::size_t>(window_len)) out.samples.resize(static_cast<std::size_t>(window_len), 0.0);
  return out;
}

}  // namespace

EnhanceResult apply_mask(const signal::Waveform& noisy, const Eigen::MatrixXd& mask, const signal::StftConfig& cfg) {
  signal::ComplexSpectrogram s = signal::stft(pad_to_window(noisy, cfg.window_len), cfg);
  if (mask.rows() != s.data.rows() || mask.cols() != s.data.cols()) {
    throw ShapeError("apply_mask: mask is " + std::to_string(mask.rows()) + "x" + std::to_string(mask.cols()) +
                     ", spectrogram is " + std::to_string(s.data.rows()) + "x" + std::to_string(s.data.cols()));
  }
  EnhanceResult r;
  r.mask = mask;
  r.enhanced_mag = mask.cwiseProduct(s.data.cwiseAbs());
  // Scaling each bin by a real mask keeps the noisy phase.
  s.data = s.data.cwiseProduct(mask.cast<std::complex<double>>());
  r.enhanced = signal::istft(s);
  r.enhanced.samples.resize(noisy.samples.size());
  return r;
}

EnhanceResult enhance(const signal::Waveform& noisy, const VisualTrack* visual, EnhancerNetwork& net) {
  if (noisy.sample_rate_hz != signal::kPipelineRate) throw DataError("enhance: input must be at 16 kHz");
  const signal::StftConfig& cfg = net.config().stft;
  const signal::ComplexSpectrogram s = signal::stft(pad_to_window(noisy, cfg.window_len), cfg);
  const Eigen::MatrixXd mag = s.data.cwiseAbs();
  Eigen::MatrixXd vis;
  if (net.config().fusion == FusionMode::kCross) {
    if (visual == nullptr) throw DataError("enhance: cross fusion requires a visual track");
    vis = net.bottleneck_visual(*visual, static_cast<std::size_t>(s.frames()));
  }
  nn::Tape tape;
  const nn::Var m = net.forward(tape, log_magnitude(mag), vis.size() ? &vis : nullptr, false);
  Eigen::MatrixXd mask(s.bins(), s.frames());
  // Var values are row-major [F x T].
  for (int i = 0; i < s.bins(); ++i) {
    for (int j = 0; j < s.frames(); ++j) mask(i, j) = m.value()[static_cast<std::size_t>(i * s.frames() + j)];
  }
  return apply_mask(noisy, mask, cfg);
}

}  // namespace avseci::avse
