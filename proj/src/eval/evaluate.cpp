// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "eval/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "common/error.hpp"
#include "common/files.hpp"
#include "common/parallel.hpp"

namespace avseci::eval {

std::string to_string(System s) {
  switch (s) {
    case System::kAce: return "ace";
    case System::kEcs: return "ecs";
    case System::kAseEcs: return "ase-ecs";
    case System::kAvseEcs: return "avse-ecs";
  }
  throw InternalError("unknown system");
}

System parse_system(const std::string& s) {
  if (s == "ace") return System::kAce;
  if (s == "ecs") return System::kEcs;
  if (s == "ase-ecs") return System::kAseEcs;
  if (s == "avse-ecs") return System::kAvseEcs;
  throw UsageError("unknown system '" + s + "' (expected ace, ecs, ase-ecs or avse-ecs)");
}

const ConditionMean& MetricReport::mean(const std::string& condition) const {
  for (const auto& m : means) {
    if (m.condition == condition) return m;
  }
  throw UsageError("report has no condition '" + condition + "'");
}

Scores MetricReport::mean_where(const std::function<bool(const MetricRow&)>& keep) const {
  Scores s;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (!keep(r)) continue;
    s.stoi += r.scores.stoi;
    s.estoi += r.scores.estoi;
    s.ncm += r.scores.ncm;
    ++n;
  }
  if (n == 0) throw DataError("mean over an empty row set");
  s.stoi /= static_cast<double>(n);
  s.estoi /= static_cast<double>(n);
  s.ncm /= static_cast<double>(n);
  return s;
}

namespace {

void check_models(System system, const SystemModels& models) {
  if (system == System::kAce) return;
  if (models.ecs == nullptr) throw UsageError(to_string(system) + ": an ECS model is required");
  if (system == System::kEcs) return;
  if (models.enhancer == nullptr) throw UsageError(to_string(system) + ": an enhancer model is required");
  const bool cross = models.enhancer->config().fusion == avse::FusionMode::kCross;
  if (system == System::kAseEcs && cross) throw UsageError("ase-ecs: enhancer uses cross (visual) fusion");
  if (system == System::kAvseEcs && !cross) throw UsageError("avse-ecs: enhancer uses self fusion");
}

}  // namespace

ace::Electrodogram run_system(System system, const SystemModels& models, const signal::Waveform& input,
                              const avse::VisualTrack* visual) {
  check_models(system, models);
  if (system == System::kAce) {
    std::optional<double> peak = models.ace_peak;
    if (!peak && models.ecs) peak = models.ecs->corpus_peak;
    return ace::ace_encode(input, peak);
  }
  if (system == System::kEcs) return ecs::ecs_encode(*models.ecs, input);
  const bool cross = models.enhancer->config().fusion == avse::FusionMode::kCross;
  const avse::EnhanceResult enh = avse::enhance(input, cross ? visual : nullptr, *models.enhancer);
  return ecs::ecs_encode(*models.ecs, enh.enhanced);
}

MetricReport evaluate_set(const data::Manifest& manifest, System system, const SystemModels& models,
                          const EvalOptions& opts) {
  validate(opts.vocoder);
  check_models(system, models);
  const auto entries = manifest.split(opts.split);
  if (entries.empty()) throw DataError("evaluate: split '" + opts.split + "' is empty");
  for (const auto& c : opts.conditions) {
    if (c != kClean && c != kNoisy) throw UsageError("evaluate: unknown condition '" + c + "'");
  }
  const bool needs_visual = system == System::kAvseEcs;

  struct Slot {
    std::optional<MetricRow> row;
    std::optional<Failure> failure;
  };
  const std::size_t nc = opts.conditions.size();
  std::vector<Slot> slots(entries.size() * nc);
  parallel_for(entries.size(), [&](std::size_t i) {
    const data::ManifestEntry& e = *entries[i];
    std::optional<signal::Waveform> clean;
    std::optional<avse::VisualTrack> visual;
    for (std::size_t c = 0; c < nc; ++c) {
      Slot& slot = slots[i * nc + c];
      const std::string& cond = opts.conditions[c];
      try {
        if (!clean) clean = data::load_clean_scaled(manifest, e);
        if (needs_visual && !visual) visual = data::load_visual(manifest, e);
        const signal::Waveform input = cond == kClean ? *clean : data::load_noisy(manifest, e);
        const ace::Electrodogram elec = run_system(system, models, input, visual ? &*visual : nullptr);
        const signal::Waveform voc = tone_vocode(elec, opts.vocoder);
        MetricRow row;
        row.id = e.id;
        row.condition = cond;
        if (cond == kNoisy) row.snr_db = e.snr_db;
        row.scores = all_metrics(*clean, voc);
        slot.row = std::move(row);
      } catch (const Error& err) {
        slot.failure = Failure{e.id, cond, err.what()};
      }
    }
  }, opts.threads);

  MetricReport report;
  report.system = to_string(system);
  for (auto& s : slots) {
    if (s.row) report.rows.push_back(std::move(*s.row));
    if (s.failure) report.failures.push_back(std::move(*s.failure));
  }
  for (const auto& cond : opts.conditions) {
    ConditionMean m;
    m.condition = cond;
    for (const auto& r : report.rows) {
      if (r.condition != cond) continue;
      m.mean.stoi += r.scores.stoi;
      m.mean.estoi += r.scores.estoi;
      m.mean.ncm += r.scores.ncm;
      ++m.count;
    }
    if (m.count == 0) throw DataError("evaluate: every utterance failed for condition '" + cond + "'");
    m.mean.stoi /= static_cast<double>(m.count);
    m.mean.estoi /= static_cast<double>(m.count);
    m.mean.ncm /= static_cast<double>(m.count);
    report.means.push_back(m);
  }
  return report;
}

std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string report_csv(const MetricReport& report) {
  std::ostringstream os;
  os << "id,condition,snr_db,stoi,estoi,ncm\n";
  char buf[160];
  for (const auto& r : report.rows) {
    std::string snr;
    if (r.snr_db) {
      std::snprintf(buf, sizeof buf, "%g", *r.snr_db);
      snr = buf;
    }
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f\n", r.scores.stoi, r.scores.estoi, r.scores.ncm);
    os << r.id << ',' << r.condition << ',' << snr << buf;
  }
  return os.str();
}

void write_report_csv(const MetricReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, report_csv(report));
}

std::string markdown_table(const std::string& first_header, const std::vector<std::pair<std::string, Scores>>& rows) {
  std::ostringstream os;
  os << "| " << first_header << " | STOI | ESTOI | NCM |\n";
  os << "|---|---|---|---|\n";
  for (const auto& [label, s] : rows) {
    os << "| " << label << " | " << format_score(s.stoi) << " | " << format_score(s.estoi) << " | "
       << format_score(s.ncm) << " |\n";
  }
  return os.str();
}

}  // namespace avseci::eval
