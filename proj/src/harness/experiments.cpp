// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "harness/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include "common/files.hpp"
#include "eval/evaluate.hpp"
#include "nn/checkpoint.hpp"

namespace avseci::harness {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const HarnessConfig& cfg) {
  return {{"seed", cfg.seed},
          {"ecs", ecs::to_json(cfg.ecs)},
          {"joint", training::to_json(cfg.joint)},
          {"betas", cfg.betas},
          {"joint_beta", cfg.joint_beta},
          {"threads", cfg.threads}};
}

HarnessConfig harness_config_from_json(const json& j) {
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  HarnessConfig cfg;
  try {
    cfg.seed = j.value("seed", cfg.seed);
    json e = j.value("ecs", json::object());
    if (!e.contains("seed")) e["seed"] = cfg.seed;
    cfg.ecs = ecs::ecs_train_config_from_json(e);
    json t = j.value("joint", json::object());
    if (!t.contains("seed")) t["seed"] = cfg.seed;
    cfg.joint = training::joint_config_from_json(t);
    cfg.betas = j.value("betas", cfg.betas);
    cfg.joint_beta = j.value("joint_beta", cfg.joint_beta);
    cfg.threads = j.value("threads", cfg.threads);
  } catch (const json::exception& ex) {
    throw UsageError(std::string("config: ") + ex.what());
  }
  if (cfg.betas.empty()) throw UsageError("config: betas is empty");
  for (double b : cfg.betas) {
    if (!(b > 0.0) || !std::isfinite(b)) throw UsageError("config: betas must be positive");
  }
  return cfg;
}

std::vector<signal::Waveform> load_clean_split(const data::Manifest& m, const std::string& split) {
  std::vector<signal::Waveform> out;
  for (const auto* e : m.split(split)) out.push_back(data::load_clean(m, *e));
  if (out.empty()) throw DataError("manifest has no '" + split + "' utterances");
  return out;
}

void require_visual(const data::Manifest& m, const std::string& split) {
  for (const auto* e : m.split(split)) {
    if (e->visual_path.empty() || !fs::exists(m.resolve(e->visual_path))) {
      throw DataError("missing visual features for utterance '" + e->id + "'");
    }
  }
}

std::vector<training::TrainUtterance> load_train_utterances(const data::Manifest& m, const std::string& split,
                                                           bool with_visual) {
  if (with_visual) require_visual(m, split);
  std::vector<training::TrainUtterance> out;
  for (const auto* e : m.split(split)) {
    training::TrainUtterance u{e->id, data::load_noisy(m, *e), data::load_clean_scaled(m, *e), std::nullopt};
    if (with_visual) u.visual = data::load_visual(m, *e);
    out.push_back(std::move(u));
  }
  if (out.empty()) throw DataError("manifest has no '" + split + "' utterances");
  return out;
}

namespace {

std::string beta_label(double beta) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", beta);
  return buf;
}

std::string rel(const fs::path& p, const fs::path& base) { return fs::relative(p, base).generic_string(); }

// Trains into <dir>.partial and renames, so an interrupted run never leaves
// a directory that looks complete.
template <typename Fn>
void build_atomically(const fs::path& dir, Fn&& fn) {
  fs::path tmp = dir;
  tmp += ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  fn(tmp);
  fs::rename(tmp, dir);
}

}  // namespace

Workspace::Workspace(const fs::path& manifest_path, const fs::path& root, HarnessConfig cfg, Log log)
    : manifest_(data::load_manifest(manifest_path)),
      manifest_hash_(sha256_file(manifest_path)),
      root_(root),
      cfg_(std::move(cfg)),
      log_(std::move(log)) {
  fs::create_directories(root_);
}

fs::path Workspace::cache_dir(const std::string& label, const json& key) const {
  return root_ / "cache" / (label + "-" + sha256_hex(key.dump()).substr(0, 16));
}

const TrainedModel& Workspace::ecs(const std::optional<fs::path>& given) {
  if (ecs_) return *ecs_;
  TrainedModel model;
  if (given) {
    model.checkpoint = *given;
    (void)ecs::EcsNetwork::from_checkpoint(nn::Checkpoint::load(*given));
    model.cached = true;
  } else {
    const json key = {{"kind", "ecs"}, {"manifest", manifest_hash_}, {"config", ecs::to_json(cfg_.ecs)}};
    model.checkpoint = cache_dir("ecs", key);
    model.cached = fs::exists(model.checkpoint);
    if (!model.cached) {
      log("training ECS (" + std::to_string(cfg_.ecs.epochs) + " epochs)");
      const auto corpus = load_clean_split(manifest_, "train");
      const nn::Checkpoint ck = ecs::ecs_pretrain(corpus, cfg_.ecs, [&](const ecs::EcsEpochStats& s) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "ecs epoch %d train %.5f val %.5f", s.epoch, s.train_loss, s.val_loss);
        log(buf);
      });
      build_atomically(model.checkpoint, [&](const fs::path& tmp) { ck.save(tmp); });
    } else {
      log("using cached ECS " + model.checkpoint.string());
    }
  }
  model.hash = nn::checkpoint_hash(model.checkpoint);
  ecs_ = model;
  return *ecs_;
}

TrainedModel Workspace::enhancer(avse::FusionMode fusion, double beta) {
  const TrainedModel& ecs_model = ecs();
  training::JointConfig jc = cfg_.joint;
  jc.network.fusion = fusion;
  jc.weights.beta = beta;
  const std::string label = (fusion == avse::FusionMode::kCross ? "avse" : "ase") + std::string("-beta") +
                            beta_label(beta);
  const json key = {{"kind", "enhancer"},
                    {"manifest", manifest_hash_},
                    {"ecs", ecs_model.hash},
                    {"config", training::to_json(jc)}};
  TrainedModel model;
  model.checkpoint = cache_dir(label, key);
  model.loss_csv = model.checkpoint / "loss.csv";
  model.cached = fs::exists(model.checkpoint);
  if (!model.cached) {
    log("training " + label + " (" + std::to_string(jc.epochs) + " epochs)");
    const bool visual = fusion == avse::FusionMode::kCross;
    const auto utts = load_train_utterances(manifest_, "train", visual);
    ecs::EcsNetwork net = ecs::EcsNetwork::from_checkpoint(nn::Checkpoint::load(ecs_model.checkpoint));
    const std::size_t steps_per_epoch = utts.size();
    const auto res = training::joint_train(utts, net, jc, [&](const training::StepLoss& s) {
      if (s.step % static_cast<long>(steps_per_epoch) != 0) return;
      char buf[128];
      std::snprintf(buf, sizeof buf, "%s epoch %ld L_Spec %.6g L_Elec %.6g", label.c_str(),
                    s.step / static_cast<long>(steps_per_epoch), s.spec, s.elec);
      log(buf);
    });
    build_atomically(model.checkpoint, [&](const fs::path& tmp) {
      res.checkpoint.save(tmp);
      training::write_loss_csv(res.history, tmp / "loss.csv");
    });
  } else {
    log("using cached " + label + " " + model.checkpoint.string());
  }
  model.hash = nn::checkpoint_hash(model.checkpoint);
  return model;
}

namespace {

struct Row {
  std::string label;
  eval::MetricReport report;
  std::string checkpoint_hash;  // empty for ACE
  std::string loss_csv;         // relative to the report directory
};

bool low_snr(const eval::MetricRow& r) { return r.snr_db && *r.snr_db <= -4.0; }

json scores_json(const eval::Scores& s) { return {{"stoi", s.stoi}, {"estoi", s.estoi}, {"ncm", s.ncm}}; }

std::vector<double> test_snrs(const eval::MetricReport& r) {
  std::vector<double> snrs;
  for (const auto& row : r.rows) {
    if (row.snr_db && std::find(snrs.begin(), snrs.end(), *row.snr_db) == snrs.end()) snrs.push_back(*row.snr_db);
  }
  std::sort(snrs.begin(), snrs.end(), std::greater<>());
  return snrs;
}

std::string file_stem(const std::string& label) {
  std::string s;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (c == '.') {
      s += 'p';
    } else if (!s.empty() && s.back() != '_') {
      s += '_';
    }
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

eval::EvalOptions eval_options(const Workspace& ws, std::vector<std::string> conditions = {eval::kNoisy}) {
  eval::EvalOptions opts;
  opts.conditions = std::move(conditions);
  opts.threads = ws.config().threads;
  return opts;
}

Row evaluate_row(Workspace& ws, const std::string& label, eval::System system, ecs::EcsNetwork& net,
                 const TrainedModel* enhancer, const fs::path& dir) {
  ws.log("evaluating " + label);
  eval::SystemModels models;
  models.ecs = &net;
  std::optional<avse::EnhancerNetwork> enh;
  Row row;
  row.label = label;
  if (enhancer) {
    enh.emplace(avse::EnhancerNetwork::from_checkpoint(nn::Checkpoint::load(enhancer->checkpoint)));
    models.enhancer = &*enh;
    row.checkpoint_hash = enhancer->hash;
    if (!enhancer->loss_csv.empty()) {
      const fs::path dst = dir / ("loss_" + file_stem(label) + ".csv");
      write_file_atomic(dst, read_file_text(enhancer->loss_csv));
      row.loss_csv = rel(dst, dir);
    }
  } else if (system == eval::System::kEcs) {
    row.checkpoint_hash = ws.ecs().hash;
  }
  row.report = eval::evaluate_set(ws.manifest(), system, models, eval_options(ws));
  eval::write_report_csv(row.report, dir / ("scores_" + file_stem(label) + ".csv"));
  return row;
}

json rows_json(const std::vector<Row>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json snr = json::object();
    for (double s : test_snrs(r.report)) {
      snr[beta_label(s)] = r.report.mean_where([&](const eval::MetricRow& m) { return m.snr_db == s; }).stoi;
    }
    json row = {{"system", r.label},
                {"count", r.report.rows.size()},
                {"failures", r.report.failures.size()},
                {"mean", scores_json(r.report.mean(eval::kNoisy).mean)},
                {"mean_snr_le_-4", scores_json(r.report.mean_where(low_snr))},
                {"stoi_by_snr", snr}};
    row["checkpoint"] = r.checkpoint_hash.empty() ? json(nullptr) : json(r.checkpoint_hash);
    if (!r.loss_csv.empty()) row["loss_csv"] = r.loss_csv;
    out.push_back(row);
  }
  return out;
}

std::string comparison_markdown(const std::vector<Row>& rows) {
  std::ostringstream os;
  std::vector<std::pair<std::string, eval::Scores>> overall, low;
  for (const auto& r : rows) {
    overall.emplace_back(r.label, r.report.mean(eval::kNoisy).mean);
    low.emplace_back(r.label, r.report.mean_where(low_snr));
  }
  os << "Noisy test set, all SNRs:\n\n" << eval::markdown_table("System", overall);
  os << "\nNoisy test set, SNR <= -4 dB:\n\n" << eval::markdown_table("System", low);
  const auto snrs = test_snrs(rows.front().report);
  os << "\nMean STOI per SNR:\n\n| System |";
  for (double s : snrs) os << ' ' << beta_label(s) << " dB |";
  os << "\n|---|";
  for (std::size_t i = 0; i < snrs.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& r : rows) {
    os << "| " << r.label << " |";
    for (double s : snrs) {
      os << ' ' << eval::format_score(r.report.mean_where([&](const eval::MetricRow& m) { return m.snr_db == s; }).stoi)
         << " |";
    }
    os << '\n';
  }
  os << "\nCheckpoints:\n\n";
  for (const auto& r : rows) {
    if (r.checkpoint_hash.empty()) continue;
    os << "- " << r.label << ": `" << r.checkpoint_hash << '`';
    if (!r.loss_csv.empty()) os << ", loss history `" << r.loss_csv << '`';
    os << '\n';
  }
  return os.str();
}

std::size_t failure_count(const std::vector<Row>& rows) {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.report.failures.size();
  return n;
}

ExperimentOutput finish(Workspace& ws, const std::string& name, const fs::path& dir, const std::string& markdown,
                        json summary) {
  ExperimentOutput out;
  out.name = name;
  out.dir = dir;
  out.markdown = dir / (name + ".md");
  write_file_atomic(out.markdown, markdown);
  summary["experiment"] = name;
  summary["config"] = to_json(ws.config());
  summary["ecs_checkpoint"] = ws.ecs().hash;
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
  out.summary = std::move(summary);
  ws.log("wrote " + out.markdown.string());
  return out;
}

fs::path report_dir(const Workspace& ws, const std::string& name) {
  const fs::path dir = ws.root() / name;
  fs::create_directories(dir);
  return dir;
}

ecs::EcsNetwork load_ecs(Workspace& ws) {
  return ecs::EcsNetwork::from_checkpoint(nn::Checkpoint::load(ws.ecs().checkpoint));
}

}  // namespace

ExperimentOutput experiment_table1(Workspace& ws) {
  const fs::path dir = report_dir(ws, "table1");
  ecs::EcsNetwork net = load_ecs(ws);
  ws.log("evaluating ECS on clean and noisy speech");
  const auto report = eval::evaluate_set(ws.manifest(), eval::System::kEcs, {&net, nullptr, std::nullopt},
                                         eval_options(ws, {eval::kClean, eval::kNoisy}));
  eval::write_report_csv(report, dir / "scores_ecs.csv");
  const auto& clean = report.mean(eval::kClean);
  const auto& noisy = report.mean(eval::kNoisy);
  std::ostringstream md;
  md << "# ECS with clean and noisy speech\n\n"
     << eval::markdown_table("Condition", {{"Clean", clean.mean}, {"Noisy", noisy.mean}});
  md << "\nUtterances: " << clean.count << " clean, " << noisy.count << " noisy; failures: "
     << report.failures.size() << ".\n";
  json summary = {{"rows",
                   {{{"condition", "clean"}, {"count", clean.count}, {"mean", scores_json(clean.mean)}},
                    {{"condition", "noisy"}, {"count", noisy.count}, {"mean", scores_json(noisy.mean)}}}},
                  {"failures", report.failures.size()}};
  return finish(ws, "table1", dir, md.str(), summary);
}

ExperimentOutput experiment_table2(Workspace& ws) {
  const fs::path dir = report_dir(ws, "table2");
  ecs::EcsNetwork net = load_ecs(ws);
  std::vector<Row> rows;
  rows.push_back(evaluate_row(ws, "ECS", eval::System::kEcs, net, nullptr, dir));
  const TrainedModel base = ws.enhancer(avse::FusionMode::kCross, 0.0);
  rows.push_back(evaluate_row(ws, "AVSE-ECS beta=0", eval::System::kAvseEcs, net, &base, dir));
  for (double beta : ws.config().betas) {
    const TrainedModel m = ws.enhancer(avse::FusionMode::kCross, beta);
    rows.push_back(evaluate_row(ws, "AVSE-ECS beta=" + beta_label(beta), eval::System::kAvseEcs, net, &m, dir));
  }
  std::ostringstream md;
  md << "# Joint training with different beta values\n\n" << comparison_markdown(rows);
  md << "\nFailures: " << failure_count(rows) << ".\n";
  return finish(ws, "table2", dir, md.str(), {{"rows", rows_json(rows)}, {"failures", failure_count(rows)}});
}

ExperimentOutput experiment_table3(Workspace& ws) {
  const fs::path dir = report_dir(ws, "table3");
  ecs::EcsNetwork net = load_ecs(ws);
  std::vector<Row> rows;
  rows.push_back(evaluate_row(ws, "ACE", eval::System::kAce, net, nullptr, dir));
  rows.push_back(evaluate_row(ws, "ECS", eval::System::kEcs, net, nullptr, dir));
  const TrainedModel ase = ws.enhancer(avse::FusionMode::kSelf, 0.0);
  rows.push_back(evaluate_row(ws, "ASE-ECS (pretrained)", eval::System::kAseEcs, net, &ase, dir));
  const TrainedModel avse = ws.enhancer(avse::FusionMode::kCross, 0.0);
  rows.push_back(evaluate_row(ws, "AVSE-ECS (pretrained)", eval::System::kAvseEcs, net, &avse, dir));
  const double beta = ws.config().joint_beta;
  const TrainedModel joint = ws.enhancer(avse::FusionMode::kCross, beta);
  rows.push_back(evaluate_row(ws, "AVSE-ECS (joint, beta=" + beta_label(beta) + ")", eval::System::kAvseEcs, net,
                              &joint, dir));
  std::ostringstream md;
  md << "# Comparison of ACE, ECS, ASE-ECS and AVSE-ECS\n\n" << comparison_markdown(rows);
  md << "\nFailures: " << failure_count(rows) << ".\n";
  return finish(ws, "table3", dir, md.str(), {{"rows", rows_json(rows)}, {"failures", failure_count(rows)}});
}

ExperimentOutput run_experiment(const std::string& name, Workspace& ws) {
  if (name == "table1") return experiment_table1(ws);
  if (name == "table2") return experiment_table2(ws);
  if (name == "table3") return experiment_table3(ws);
  throw UsageError("unknown experiment '" + name + "' (expected table1, table2 or table3)");
}

}  // namespace avseci::harness
