// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "data/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "common/error.hpp"
#include "common/files.hpp"
#include "common/parallel.hpp"
#include "data/mix.hpp"

namespace avseci::data {

nlohmann::json to_json(const CorpusConfig& cfg) {
  return {{"seed", cfg.seed},
          {"n_train", cfg.n_train},
          {"n_val", cfg.n_val},
          {"n_test", cfg.n_test},
          {"train_snrs", cfg.train_snrs},
          {"test_snrs", cfg.test_snrs},
          {"train_noises", cfg.train_noises},
          {"test_noises", cfg.test_noises},
          {"min_duration_s", cfg.synth.min_duration_s},
          {"max_duration_s", cfg.synth.max_duration_s},
          {"peak", cfg.synth.peak},
          {"visual_dim", cfg.visual.dim},
          {"visual_fps", cfg.visual.fps},
          {"visual_noise_sigma", cfg.visual.noise_sigma}};
}

CorpusConfig corpus_config_from_json(const nlohmann::json& j) {
  CorpusConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  cfg.n_train = j.value("n_train", cfg.n_train);
  cfg.n_val = j.value("n_val", cfg.n_val);
  cfg.n_test = j.value("n_test", cfg.n_test);
  cfg.train_snrs = j.value("train_snrs", cfg.train_snrs);
  cfg.test_snrs = j.value("test_snrs", cfg.test_snrs);
  cfg.train_noises = j.value("train_noises", cfg.train_noises);
  cfg.test_noises = j.value("test_noises", cfg.test_noises);
  cfg.synth.min_duration_s = j.value("min_duration_s", cfg.synth.min_duration_s);
  cfg.synth.max_duration_s = j.value("max_duration_s", cfg.synth.max_duration_s);
  cfg.synth.peak = j.value("peak", cfg.synth.peak);
  cfg.visual.dim = j.value("visual_dim", cfg.visual.dim);
  cfg.visual.fps = j.value("visual_fps", cfg.visual.fps);
  cfg.visual.noise_sigma = j.value("visual_noise_sigma", cfg.visual.noise_sigma);
  return cfg;
}

std::vector<const ManifestEntry*> Manifest::split(const std::string& name) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries) {
    if (e.split == name) out.push_back(&e);
  }
  return out;
}

const ManifestEntry& Manifest::find(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return e;
  }
  throw DataError("manifest: no utterance '" + id + "'");
}

void validate_protocol(const CorpusConfig& cfg) {
  if (cfg.n_train + cfg.n_val + cfg.n_test == 0) throw UsageError("corpus: no utterances requested");
  if ((cfg.n_train + cfg.n_val > 0 && (cfg.train_snrs.empty() || cfg.train_noises.empty())) ||
      (cfg.n_test > 0 && (cfg.test_snrs.empty() || cfg.test_noises.empty()))) {
    throw UsageError("corpus: every populated split needs SNRs and noise types");
  }
  for (const auto& n : cfg.train_noises) {
    if (std::find(cfg.test_noises.begin(), cfg.test_noises.end(), n) != cfg.test_noises.end()) {
      throw UsageError("corpus: noise type '" + n + "' appears in both train and test lists");
    }
  }
  for (double s : cfg.train_snrs) {
    if (std::find(cfg.test_snrs.begin(), cfg.test_snrs.end(), s) != cfg.test_snrs.end()) {
      throw UsageError("corpus: SNR " + std::to_string(s) + " dB appears in both train and test lists");
    }
  }
  const auto& known = noise_types();
  for (const auto* list : {&cfg.train_noises, &cfg.test_noises}) {
    for (const auto& n : *list) {
      if (std::find(known.begin(), known.end(), n) == known.end()) throw UsageError("corpus: unknown noise type '" + n + "'");
    }
  }
}

namespace {

std::string make_id(const std::string& split, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%03zu", split.c_str(), i);
  return buf;
}

}  // namespace

Manifest build_corpus(const CorpusConfig& cfg, const std::filesystem::path& dir) {
  validate_protocol(cfg);
  Manifest m;
  m.seed = cfg.seed;
  m.config = to_json(cfg);
  m.root = dir;
  struct Plan {
    std::string split;
    std::size_t count;
    const std::vector<double>* snrs;
    const std::vector<std::string>* noises;
  };
  for (const Plan& p : {Plan{"train", cfg.n_train, &cfg.train_snrs, &cfg.train_noises},
                        Plan{"val", cfg.n_val, &cfg.train_snrs, &cfg.train_noises},
                        Plan{"test", cfg.n_test, &cfg.test_snrs, &cfg.test_noises}}) {
    for (std::size_t i = 0; i < p.count; ++i) {
      ManifestEntry e;
      e.id = make_id(p.split, i);
      e.split = p.split;
      // Cycle SNRs fastest so every noise type meets every SNR.
      e.snr_db = (*p.snrs)[i % p.snrs->size()];
      e.noise_type = (*p.noises)[(i / p.snrs->size()) % p.noises->size()];
      e.clean_path = "clean/" + e.id + ".wav";
      e.noise_path = "noise/" + e.id + ".wav";
      e.noisy_path = "noisy/" + e.id + ".wav";
      e.visual_path = "visual/" + e.id + ".visf";
      m.entries.push_back(e);
    }
  }

  parallel_for(m.entries.size(), [&](std::size_t i) {
    ManifestEntry& e = m.entries[i];
    const signal::Waveform clean = synth_utterance(derive_seed(cfg.seed, e.id), cfg.synth);
    const signal::Waveform noise =
        make_noise(e.noise_type, clean.size() + signal::kPipelineRate, derive_seed(cfg.seed, e.id + "/noise"));
    const MixResult mix = mix_at_snr(clean, noise, e.snr_db, derive_seed(cfg.seed, e.id + "/mix"));
    avse::VisualSynthConfig vcfg = cfg.visual;
    vcfg.seed = derive_seed(cfg.seed, e.id + "/visual");
    avse::VisualTrack visual = avse::synth_visual_features(clean, vcfg);
    e.duration_s = clean.duration_s();
    e.scale = mix.scale;
    e.gain = mix.gain;
    e.noise_offset = mix.offset;
    signal::write_wav(clean, dir / e.clean_path);
    signal::write_wav(noise, dir / e.noise_path);
    signal::write_wav(mix.noisy, dir / e.noisy_path);
    avse::write_visual(visual, dir / e.visual_path);
  });
  save_manifest(m, dir / "manifest.json");
  return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = m.format;
  j["seed"] = m.seed;
  j["config"] = m.config;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : m.entries) {
    j["entries"].push_back({{"id", e.id},
                            {"split", e.split},
                            {"clean_path", e.clean_path},
                            {"noise_path", e.noise_path},
                            {"noisy_path", e.noisy_path},
                            {"visual_path", e.visual_path},
                            {"noise_type", e.noise_type},
                            {"snr_db", e.snr_db},
                            {"duration_s", e.duration_s},
                            {"scale", e.scale},
                            {"gain", e.gain},
                            {"noise_offset", e.noise_offset}});
  }
  write_file_atomic(path, j.dump(2) + "\n");
}

Manifest load_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  Manifest m;
  m.root = path.parent_path();
  try {
    m.format = j.at("format").get<std::string>();
    if (m.format != kManifestFormat) throw FormatError(path.string() + ": unsupported manifest format '" + m.format + "'");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.value("config", nlohmann::json::object());
    std::set<std::string> ids;
    for (const auto& je : j.at("entries")) {
      ManifestEntry e;
      e.id = je.at("id").get<std::string>();
      e.split = je.at("split").get<std::string>();
      e.clean_path = je.at("clean_path").get<std::string>();
      e.noise_path = je.value("noise_path", "");
      e.noisy_path = je.at("noisy_path").get<std::string>();
      e.visual_path = je.value("visual_path", "");
      e.noise_type = je.value("noise_type", "");
      e.snr_db = je.at("snr_db").get<double>();
      e.duration_s = je.value("duration_s", 0.0);
      e.scale = je.value("scale", 1.0);
      e.gain = je.value("gain", 1.0);
      e.noise_offset = je.value("noise_offset", std::size_t{0});
      if (e.split != "train" && e.split != "val" && e.split != "test") {
        throw FormatError(path.string() + ": entry '" + e.id + "' has unknown split '" + e.split + "'");
      }
      if (!ids.insert(e.id).second) throw FormatError(path.string() + ": duplicate id '" + e.id + "'");
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

signal::Waveform load_clean(const Manifest& m, const ManifestEntry& e) {
  return signal::read_wav(m.resolve(e.clean_path));
}

signal::Waveform load_clean_scaled(const Manifest& m, const ManifestEntry& e) {
  signal::Waveform w = load_clean(m, e);
  for (double& v : w.samples) v *= e.scale;
  return w;
}

signal::Waveform load_noisy(const Manifest& m, const ManifestEntry& e) {
  return signal::read_wav(m.resolve(e.noisy_path));
}

avse::VisualTrack load_visual(const Manifest& m, const ManifestEntry& e) {
  if (e.visual_path.empty()) throw DataError("utterance '" + e.id + "' has no visual track");
  const auto path = m.resolve(e.visual_path);
  if (!std::filesystem::exists(path)) {
    throw DataError("missing visual features for utterance '" + e.id + "': " + path.string());
  }
  avse::VisualTrack t = avse::read_visual(path);
  t.source_id = e.id;
  return t;
}

}  // namespace avseci::data
