// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Compact masking encoder-decoder with one attention fusion block at the
// bottleneck. Cross mode attends from audio queries to visual keys/values;
// self mode draws all three from audio.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avse/visual.hpp"
#include "nn/checkpoint.hpp"
#include "nn/tape.hpp"
#include "signal/stft.hpp"
#include "signal/waveform.hpp"

namespace avseci::avse {

enum class FusionMode { kCross, kSelf };

std::string to_string(FusionMode mode);
FusionMode parse_fusion(const std::string& s);

struct EnhancerConfig {
  FusionMode fusion = FusionMode::kCross;
  signal::StftConfig stft;
  int audio_dim = 64;  // d_a = d_k
  int visual_dim = kVisualDim;
  int enc1 = 16;
  int enc2 = 32;
  int dec1 = 8;
  // Attention logits get -slope * |t - s| (bottleneck steps).
  double locality_slope = 1.0;
};

nlohmann::json to_json(const EnhancerConfig& cfg);
EnhancerConfig enhancer_config_from_json(const nlohmann::json& j);

struct FusionLayer {
  FusionMode mode = FusionMode::kCross;
  nn::Parameter q_w, q_b, k_w, k_b, v_w, v_b;

  FusionLayer() = default;
  FusionLayer(FusionMode mode, std::size_t audio_dim, std::size_t kv_dim, std::size_t d_k);
  std::vector<nn::Parameter*> parameters();
};

// audio [T x d_a]; visual [T x D_v] in cross mode, ignored in self mode.
// Returns audio + attention(audio M_Q, kv M_K, kv M_V).
nn::Var fusion_block(nn::Tape& tape, FusionLayer& layer, nn::Var audio, std::optional<nn::Var> visual,
                     const nn::Tensor* bias = nullptr, bool track_params = true);

nn::Tensor locality_bias(std::size_t steps, double slope);

class EnhancerNetwork {
 public:
  explicit EnhancerNetwork(const EnhancerConfig& cfg = {}, std::uint64_t seed = 0);

  // log_mag [F x T]; visual [ceil(T/4) x D_v] at bottleneck rate (cross
  // mode only). Returns the sigmoid mask [F x T].
  nn::Var forward(nn::Tape& tape, const Eigen::MatrixXd& log_mag, const Eigen::MatrixXd* visual,
                  bool track_params = true);

  std::vector<nn::Parameter*> parameters();
  std::size_t parameter_count();
  const EnhancerConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  FusionLayer& fusion() { return fusion_; }

  // Visual rows sampled at the centre of each 4-frame bottleneck step of
  // STFT frames [first, first + frames).
  Eigen::MatrixXd bottleneck_visual(const VisualTrack& track, std::size_t frames, std::size_t first = 0) const;

  nn::Checkpoint to_checkpoint() const;
  static EnhancerNetwork from_checkpoint(const nn::Checkpoint& ck);

 private:
  EnhancerConfig cfg_;
  std::uint64_t seed_;
  std::size_t bins_;
  nn::Parameter enc1_w_, enc1_b_, enc2_w_, enc2_b_;
  nn::Parameter in_w_, in_b_, out_w_, out_b_;
  nn::Parameter dec2_w_, dec2_b_, dec1_w_, dec1_b_, head_w_, head_b_;
  FusionLayer fusion_;
};

// Network input feature: log(1 + |S|).
Eigen::MatrixXd log_magnitude(const Eigen::MatrixXd& mag);

struct EnhanceResult {
  signal::Waveform enhanced;
  Eigen::MatrixXd mask;          // F x T
  Eigen::MatrixXd enhanced_mag;  // F x T
};

// Applies a given mask to the noisy magnitude and resynthesizes with the noisy phase.
EnhanceResult apply_mask(const signal::Waveform& noisy, const Eigen::MatrixXd& mask,
                         const signal::StftConfig& cfg = {});

EnhanceResult enhance(const signal::Waveform& noisy, const VisualTrack* visual, EnhancerNetwork& net);

}  // namespace avseci::avse
