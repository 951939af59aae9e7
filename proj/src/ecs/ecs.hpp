// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "ace/ace.hpp"
#include "nn/checkpoint.hpp"
#include "nn/tape.hpp"
#include "signal/waveform.hpp"

namespace avseci::ecs {

inline constexpr std::array<std::size_t, 4> kLayerWidths = {1024, 512, 256, 22};

// Per-frame coding network: 65 normalized FFT magnitudes -> dense ReLU
// stack (1024, 512, 256) -> 22 sigmoid envelopes -> top-k channel selection.
class EcsNetwork {
 public:
  explicit EcsNetwork(std::uint64_t seed = 0, std::size_t in_dim = ace::kBins,
                      std::array<std::size_t, 4> widths = kLayerWidths, int k = ace::kDefaultMaxima);

  // frames [N x in] -> pre-mask envelopes [N x out]. With track_params
  // false the weights enter the tape as constants.
  nn::Var forward(nn::Tape& tape, nn::Var frames, bool track_params = true);
  // Framewise top-k of forward().
  nn::Var encode(nn::Tape& tape, nn::Var frames, bool track_params = true);

  std::vector<nn::Parameter*> parameters();
  nn::Parameter& output_bias() { return biases_.back(); }
  void set_frozen(bool frozen);

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return widths_.back(); }
  int k() const { return k_; }

  // ACE corpus normalization reference carried with the weights.
  double corpus_peak = 1.0;
  // Fixed gain applied to the (peak-normalized) input frames.
  double input_gain = 1.0;

  nn::Checkpoint to_checkpoint() const;
  static EcsNetwork from_checkpoint(const nn::Checkpoint& ck);

 private:
  std::size_t in_dim_;
  std::array<std::size_t, 4> widths_;
  int k_;
  std::array<nn::Parameter, 4> weights_;
  std::array<nn::Parameter, 4> biases_;
  std::uint64_t seed_;
};

struct EcsOutput {
  Eigen::MatrixXd env_pre;  // 22 x T_e
  ace::Electrodogram elec;
};

// mag65: 65 x T_e, already divided by the corpus peak.
EcsOutput ecs_forward(EcsNetwork& net, const Eigen::MatrixXd& mag65);

// ACE framing (128/32 Hann) -> normalized magnitudes -> ecs_forward.
ace::Electrodogram ecs_encode(EcsNetwork& net, const signal::Waveform& w);

struct EcsTrainConfig {
  double lr = 1e-3;
  int epochs = 8;
  std::size_t batch_frames = 256;
  std::uint64_t seed = 1;
  double val_fraction = 0.05;
  // 0 selects 1 / RMS of the training inputs.
  double input_gain = 0.0;
};

struct EcsEpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // running mean over the epoch's batches
  double val_loss = 0.0;
};

using EcsProgress = std::function<void(const EcsEpochStats&)>;

// Minimizes the mean absolute error between the pre-mask network output and
// the ACE envelope matrix over all channels. The corpus peak is computed
// from `corpus` and stored in the returned checkpoint together with the
// per-epoch history.
nn::Checkpoint ecs_pretrain(const std::vector<signal::Waveform>& corpus, const EcsTrainConfig& cfg,
                            const EcsProgress& progress = {});

nlohmann::json to_json(const EcsTrainConfig& cfg);
// Missing keys keep their defaults.
EcsTrainConfig ecs_train_config_from_json(const nlohmann::json& j);

}  // namespace avseci::ecs
