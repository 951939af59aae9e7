// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Enhancer training: spectrogram loss alone, or jointly with the
// electrodogram loss through a frozen ECS.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "avse/enhancer.hpp"
#include "avse/visual.hpp"
#include "ecs/ecs.hpp"
#include "nn/checkpoint.hpp"
#include "signal/waveform.hpp"
#include "training/losses.hpp"

namespace avseci::training {

struct TrainUtterance {
  std::string id;
  signal::Waveform noisy;
  signal::Waveform clean;  // the clean component exactly as mixed into `noisy`
  std::optional<avse::VisualTrack> visual;
};

struct JointConfig {
  LossWeights weights;
  double lr = 1e-4;
  int epochs = 30;
  std::size_t crop_frames = 256;
  std::uint64_t seed = 1;
  avse::EnhancerConfig network;
  signal::StftConfig ace_stft{128, 32};
  // Magnitudes entering L_Spec are multiplied by this.
  double spec_scale = 1.0;
};

nlohmann::json to_json(const JointConfig& cfg);
// Missing keys keep their defaults; "network" takes partial enhancer settings.
JointConfig joint_config_from_json(const nlohmann::json& j);

struct StepLoss {
  long step = 0;
  std::string id;
  double spec = 0.0;
  double elec = 0.0;  // NaN when no ECS is attached
  double total = 0.0;
};

struct TrainResult {
  nn::Checkpoint checkpoint;
  std::vector<StepLoss> history;
};

using StepCallback = std::function<void(const StepLoss&)>;

// ECS stays frozen; its parameters are verified unchanged on return.
TrainResult joint_train(const std::vector<TrainUtterance>& utts, ecs::EcsNetwork& ecs, const JointConfig& cfg,
                        const StepCallback& on_step = {});

// Same sampling and optimizer as joint_train, no electrodogram path at all.
TrainResult spec_only_train(const std::vector<TrainUtterance>& utts, const JointConfig& cfg,
                            const StepCallback& on_step = {});

// "step,L_Spec,L_Elec,L_Total"
void write_loss_csv(const std::vector<StepLoss>& history, const std::filesystem::path& path);

}  // namespace avseci::training
