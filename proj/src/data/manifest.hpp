// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Desk corpus: synthesized clean speech, noise sources, mixtures and visual
// tracks under corpus/{clean,noise,noisy,visual}/<id>.*, indexed by a JSON
// manifest.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "avse/visual.hpp"
#include "data/synth.hpp"
#include "signal/waveform.hpp"

namespace avseci::data {

inline constexpr const char* kManifestFormat = "avseci-manifest v1";

struct CorpusConfig {
  std::uint64_t seed = 7;
  std::size_t n_train = 60;
  std::size_t n_val = 8;
  std::size_t n_test = 40;
  std::vector<double> train_snrs = {-12.0, -6.0, 0.0, 6.0, 12.0};
  std::vector<double> test_snrs = {-1.0, -4.0, -7.0, -10.0};
  std::vector<std::string> train_noises = {"white", "babble", "brown"};
  std::vector<std::string> test_noises = {"pink", "engine"};
  SynthConfig synth;
  avse::VisualSynthConfig visual;
};

nlohmann::json to_json(const CorpusConfig& cfg);
CorpusConfig corpus_config_from_json(const nlohmann::json& j);

struct ManifestEntry {
  std::string id;
  std::string split;  // train | val | test
  std::string clean_path, noise_path, noisy_path, visual_path;  // relative to the manifest
  std::string noise_type;
  double snr_db = 0.0;
  double duration_s = 0.0;
  double scale = 1.0;  // peak rescale applied to the mixture (and hence to its clean part)
  double gain = 1.0;
  std::size_t noise_offset = 0;
};

struct Manifest {
  std::string format = kManifestFormat;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;  // directory holding manifest.json; not serialized

  std::vector<const ManifestEntry*> split(const std::string& name) const;
  std::filesystem::path resolve(const std::string& rel) const { return root / rel; }
  const ManifestEntry& find(const std::string& id) const;
};

// Rejects overlapping train/test noise types or SNRs.
void validate_protocol(const CorpusConfig& cfg);

Manifest build_corpus(const CorpusConfig& cfg, const std::filesystem::path& dir);

void save_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

signal::Waveform load_clean(const Manifest& m, const ManifestEntry& e);
// The clean signal exactly as it appears inside the stored mixture.
signal::Waveform load_clean_scaled(const Manifest& m, const ManifestEntry& e);
signal::Waveform load_noisy(const Manifest& m, const ManifestEntry& e);
avse::VisualTrack load_visual(const Manifest& m, const ManifestEntry& e);

}  // namespace avseci::data
