// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Experiment runners behind `experiment table1|table2|table3`. Trained
// models are cached under <root>/cache keyed by manifest, ECS and config,
// reports go to <root>/<table>/.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "avse/enhancer.hpp"
#include "data/manifest.hpp"
#include "ecs/ecs.hpp"
#include "training/joint.hpp"

namespace avseci::harness {

struct HarnessConfig {
  std::uint64_t seed = 1;
  ecs::EcsTrainConfig ecs;
  training::JointConfig joint;  // weights.beta is overridden per run
  std::vector<double> betas = {0.25, 0.5, 1.0};
  double joint_beta = 0.5;  // the joint AVSE-ECS row of table3
  unsigned threads = 0;
};

nlohmann::json to_json(const HarnessConfig& cfg);
// "seed" also seeds the ECS and enhancer runs unless their sections set one.
HarnessConfig harness_config_from_json(const nlohmann::json& j);

using Log = std::function<void(const std::string&)>;

std::vector<signal::Waveform> load_clean_split(const data::Manifest& m, const std::string& split);

// Throws DataError naming the first entry (manifest order) whose visual
// track is missing.
void require_visual(const data::Manifest& m, const std::string& split);

std::vector<training::TrainUtterance> load_train_utterances(const data::Manifest& m, const std::string& split,
                                                           bool with_visual);

struct TrainedModel {
  std::filesystem::path checkpoint;  // directory
  std::filesystem::path loss_csv;    // empty for the ECS
  std::string hash;                  // checkpoint_hash of the directory
  bool cached = false;
};

class Workspace {
 public:
  Workspace(const std::filesystem::path& manifest_path, const std::filesystem::path& root, HarnessConfig cfg,
            Log log = {});

  const data::Manifest& manifest() const { return manifest_; }
  const HarnessConfig& config() const { return cfg_; }
  const std::filesystem::path& root() const { return root_; }

  // Uses the given checkpoint, or pretrains on the clean train split.
  const TrainedModel& ecs(const std::optional<std::filesystem::path>& given = std::nullopt);
  // beta == 0 trains with the spectrogram loss only (electrodogram loss is
  // still logged).
  TrainedModel enhancer(avse::FusionMode fusion, double beta);

  void log(const std::string& line) const {
    if (log_) log_(line);
  }

 private:
  std::filesystem::path cache_dir(const std::string& label, const nlohmann::json& key) const;

  data::Manifest manifest_;
  std::string manifest_hash_;
  std::filesystem::path root_;
  HarnessConfig cfg_;
  Log log_;
  std::optional<TrainedModel> ecs_;
};

struct ExperimentOutput {
  std::string name;
  std::filesystem::path dir;
  std::filesystem::path markdown;
  nlohmann::json summary;  // also written to <dir>/summary.json
};

ExperimentOutput experiment_table1(Workspace& ws);
ExperimentOutput experiment_table2(Workspace& ws);
ExperimentOutput experiment_table3(Workspace& ws);
ExperimentOutput run_experiment(const std::string& name, Workspace& ws);

}  // namespace avseci::harness
