// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ace/ace.hpp"
#include "avse/enhancer.hpp"
#include "data/manifest.hpp"
#include "ecs/ecs.hpp"
#include "eval/metrics.hpp"
#include "eval/vocoder.hpp"

namespace avseci::eval {

enum class System { kAce, kEcs, kAseEcs, kAvseEcs };

std::string to_string(System s);
System parse_system(const std::string& s);

// Condition "clean" feeds the clean utterance to the system, "noisy" the
// mixture. Metrics are always taken against the clean utterance.
inline constexpr const char* kClean = "clean";
inline constexpr const char* kNoisy = "noisy";

struct SystemModels {
  ecs::EcsNetwork* ecs = nullptr;
  avse::EnhancerNetwork* enhancer = nullptr;
  // ACE envelope reference; defaults to ecs->corpus_peak.
  std::optional<double> ace_peak;
};

struct MetricRow {
  std::string id;
  std::string condition;
  std::optional<double> snr_db;  // empty for the clean condition
  Scores scores;
};

struct ConditionMean {
  std::string condition;
  std::size_t count = 0;
  Scores mean;
};

struct Failure {
  std::string id;
  std::string condition;
  std::string message;
};

struct MetricReport {
  std::string system;
  std::vector<MetricRow> rows;       // manifest order, conditions in request order
  std::vector<ConditionMean> means;  // one per requested condition
  std::vector<Failure> failures;

  const ConditionMean& mean(const std::string& condition) const;
  // Arithmetic mean over the rows accepted by keep.
  Scores mean_where(const std::function<bool(const MetricRow&)>& keep) const;
};

struct EvalOptions {
  std::string split = "test";
  std::vector<std::string> conditions = {kNoisy};
  VocoderConfig vocoder = default_vocoder();
  unsigned threads = 0;  // 0: hardware concurrency
};

// Electrodogram for one input waveform.
ace::Electrodogram run_system(System system, const SystemModels& models, const signal::Waveform& input,
                              const avse::VisualTrack* visual);

MetricReport evaluate_set(const data::Manifest& manifest, System system, const SystemModels& models,
                          const EvalOptions& opts = {});

void write_report_csv(const MetricReport& report, const std::filesystem::path& path);
std::string report_csv(const MetricReport& report);

// Rows of (label, scores) as a STOI / ESTOI / NCM markdown table.
std::string markdown_table(const std::string& first_header, const std::vector<std::pair<std::string, Scores>>& rows);

std::string format_score(double v);

}  // namespace avseci::eval
