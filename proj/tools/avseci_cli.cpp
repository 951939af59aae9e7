// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// avseci command-line front end over the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "avseci/avseci.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kRootEnv = "AVSECI_OUTPUT_ROOT";

struct Failure {
  int code;
  std::string message;
};

void check(avseci_status s) {
  if (s != AVSECI_OK) throw Failure{static_cast<int>(s), avseci_last_error()};
}

void print_log(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

fs::path output_root() {
  const char* env = std::getenv(kRootEnv);
  return env && *env ? fs::path(env) : fs::path("avseci-out");
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Everything run.json records about one invocation.
struct Run {
  std::string command;
  std::vector<std::string> argv;
  json config = json::object();
  json inputs = json::object();
  json outputs = json::array();
  fs::path dir;

  void input(const std::string& role, const std::string& path) {
    if (path.empty()) return;
    json e = {{"path", path}};
    fs::path target = path;
    if (fs::is_directory(target)) target /= "manifest.json";
    char hex[65];
    if (fs::is_regular_file(target) && avseci_sha256_file(target.c_str(), hex) == AVSECI_OK) {
      e["sha256"] = hex;
    } else {
      e["sha256"] = nullptr;
    }
    inputs[role] = e;
  }
  void output(const fs::path& p) { outputs.push_back(p.string()); }

  void write(int code, const std::string& error) const {
    if (dir.empty()) return;
    json j = {{"command", command},
              {"argv", argv},
              {"version", avseci_version()},
              {"source_hash", avseci_source_hash()},
              {"config", config},
              {"inputs", inputs},
              {"outputs", outputs},
              {"exit_code", code},
              {"status", code == 0 ? "ok" : "error"}};
    if (!error.empty()) j["error"] = error;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(dir / "run.json");
    out << j.dump(2) << "\n";
    if (!out) std::fprintf(stderr, "warning: could not write %s\n", (dir / "run.json").c_str());
  }
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  if (!fs::is_regular_file(path)) throw Failure{2, "cannot read config " + path};
  try {
    json j = json::parse(read_text(path));
    if (!j.is_object()) throw Failure{1, "config " + path + " is not a JSON object"};
    return j;
  } catch (const json::exception& e) {
    throw Failure{1, "config " + path + ": " + e.what()};
  }
}

json section(const json& cfg, const char* key) { return cfg.contains(key) ? cfg.at(key) : json::object(); }

struct Options {
  std::string config_path;
  long long seed = -1;
  std::string out;
  std::string manifest, ecs, model, input, output, visual;
  std::string fusion = "cross";
  double alpha = 1.0, beta = 0.5;
  int epochs = 0;
  double lr = 0.0;
  double reference_peak = 0.0;
  int maxima = 8;
  std::string system, split = "test", conditions = "noisy";
  unsigned threads = 0;
};

std::string dashed(const std::string& cmd) {
  std::string s = cmd;
  for (char& c : s) {
    if (c == ' ') c = '-';
  }
  return s;
}

// Directory for run.json and directory-style outputs.
fs::path out_dir(const Options& o, const Run& run) {
  return o.out.empty() ? output_root() / dashed(run.command) : fs::path(o.out);
}

// Single-file outputs default to <out>/<input stem><ext>.
fs::path file_output(const Options& o, Run& run, const std::string& ext) {
  if (!o.output.empty()) {
    const fs::path p = o.output;
    run.dir = o.out.empty() ? (p.has_parent_path() ? p.parent_path() : fs::path(".")) : fs::path(o.out);
    return p;
  }
  run.dir = out_dir(o, run);
  return run.dir / (fs::path(o.input).stem().string() + ext);
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_elec(avseci_electrodogram* e, const fs::path& path, Run& run) {
  ensure_parent(path);
  const avseci_status s = avseci_electrodogram_write(e, path.c_str());
  avseci_electrodogram_free(e);
  check(s);
  run.output(path);
}

void cmd_corpus_build(const Options& o, const json& cfg, Run& run) {
  json c = section(cfg, "corpus");
  if (o.seed >= 0) c["seed"] = o.seed;
  run.config = c;
  run.dir = out_dir(o, run);
  check(avseci_corpus_build(c.dump().c_str(), run.dir.c_str()));
  run.output(run.dir / "manifest.json");
  std::cout << (run.dir / "manifest.json").string() << "\n";
}

void cmd_ace_encode(const Options& o, const json&, Run& run) {
  const fs::path out = file_output(o, run, ".elec");
  run.input("input", o.input);
  double peak = o.reference_peak;
  if (!o.ecs.empty()) {
    run.input("ecs", o.ecs);
    avseci_ecs* ecs = nullptr;
    check(avseci_ecs_load(o.ecs.c_str(), &ecs));
    const avseci_status s = avseci_ecs_corpus_peak(ecs, &peak);
    avseci_ecs_free(ecs);
    check(s);
  }
  run.config = {{"reference_peak", peak > 0.0 ? json(peak) : json("per-utterance")}, {"maxima", o.maxima}};
  avseci_electrodogram* e = nullptr;
  check(avseci_ace_encode(o.input.c_str(), peak, o.maxima, &e));
  write_elec(e, out, run);
}

void cmd_ecs_train(const Options& o, const json& cfg, Run& run) {
  json c = section(cfg, "ecs");
  if (!c.contains("seed")) c["seed"] = cfg.value("seed", 1LL);
  if (o.seed >= 0) c["seed"] = o.seed;
  if (o.epochs > 0) c["epochs"] = o.epochs;
  if (o.lr > 0.0) c["lr"] = o.lr;
  run.config = c;
  run.input("manifest", o.manifest);
  run.dir = out_dir(o, run);
  check(avseci_ecs_train(o.manifest.c_str(), c.dump().c_str(), run.dir.c_str(), print_log, nullptr));
  run.output(run.dir);
}

void cmd_ecs_encode(const Options& o, const json&, Run& run) {
  const fs::path out = file_output(o, run, ".elec");
  run.input("input", o.input);
  run.input("ecs", o.ecs);
  avseci_ecs* ecs = nullptr;
  check(avseci_ecs_load(o.ecs.c_str(), &ecs));
  avseci_electrodogram* e = nullptr;
  const avseci_status s = avseci_ecs_encode(ecs, o.input.c_str(), &e);
  avseci_ecs_free(ecs);
  check(s);
  write_elec(e, out, run);
}

void cmd_avse_train(const Options& o, const json& cfg, Run& run) {
  json c = section(cfg, "joint");
  if (!c.contains("seed")) c["seed"] = cfg.value("seed", 1LL);
  if (o.seed >= 0) c["seed"] = o.seed;
  if (o.epochs > 0) c["epochs"] = o.epochs;
  if (o.lr > 0.0) c["lr"] = o.lr;
  c["alpha"] = o.alpha;
  c["beta"] = o.beta;
  c["fusion"] = o.fusion;
  run.config = c;
  run.input("manifest", o.manifest);
  run.input("ecs", o.ecs);
  run.dir = out_dir(o, run);
  check(avseci_avse_train(o.manifest.c_str(), o.ecs.c_str(), o.fusion.c_str(), o.alpha, o.beta, c.dump().c_str(),
                          run.dir.c_str(), print_log, nullptr));
  run.output(run.dir);
  run.output(run.dir / "loss.csv");
}

void cmd_enhance(const Options& o, const json&, Run& run) {
  const fs::path out = file_output(o, run, ".wav");
  run.input("input", o.input);
  run.input("model", o.model);
  run.input("visual", o.visual);
  avseci_enhancer* enh = nullptr;
  check(avseci_enhancer_load(o.model.c_str(), &enh));
  ensure_parent(out);
  const avseci_status s =
      avseci_enhance(enh, o.input.c_str(), o.visual.empty() ? nullptr : o.visual.c_str(), out.c_str());
  avseci_enhancer_free(enh);
  check(s);
  run.output(out);
}

void cmd_vocode(const Options& o, const json&, Run& run) {
  const fs::path out = file_output(o, run, ".wav");
  run.input("input", o.input);
  avseci_electrodogram* e = nullptr;
  check(avseci_electrodogram_read(o.input.c_str(), &e));
  ensure_parent(out);
  const avseci_status s = avseci_vocode(e, out.c_str());
  avseci_electrodogram_free(e);
  check(s);
  run.output(out);
}

void cmd_eval(const Options& o, const json&, Run& run) {
  run.config = {{"system", o.system}, {"split", o.split}, {"conditions", o.conditions}};
  run.input("manifest", o.manifest);
  run.input("ecs", o.ecs);
  run.input("model", o.model);
  run.dir = out_dir(o, run);
  fs::create_directories(run.dir);
  const fs::path csv = run.dir / "scores.csv", means = run.dir / "means.json";
  check(avseci_eval(o.manifest.c_str(), o.system.c_str(), o.ecs.c_str(), o.model.empty() ? nullptr : o.model.c_str(),
                    o.split.c_str(), o.conditions.c_str(), csv.c_str(), means.c_str()));
  run.output(csv);
  run.output(means);
  std::cout << read_text(means);
}

void cmd_experiment(const std::string& name, const Options& o, const json& cfg, Run& run) {
  json c = cfg;
  c.erase("corpus");
  if (o.seed >= 0) c["seed"] = o.seed;
  if (o.threads > 0) c["threads"] = o.threads;
  run.config = c;
  run.input("manifest", o.manifest);
  run.input("ecs", o.ecs);
  const fs::path root = o.out.empty() ? output_root() : fs::path(o.out);
  run.dir = root / name;
  char report[4096];
  check(avseci_experiment(name.c_str(), o.manifest.c_str(), o.ecs.empty() ? nullptr : o.ecs.c_str(),
                          c.dump().c_str(), root.c_str(), print_log, nullptr, report, sizeof report));
  run.output(report);
  std::cout << read_text(report);
}

void cmd_plot(const Options& o, const json&, Run& run) {
  fs::path prefix;
  if (!o.output.empty()) {
    prefix = o.output;
    run.dir = o.out.empty() ? (prefix.has_parent_path() ? prefix.parent_path() : fs::path(".")) : fs::path(o.out);
  } else {
    run.dir = out_dir(o, run);
    prefix = run.dir / fs::path(o.input).stem();
  }
  run.input("input", o.input);
  check(avseci_plot_electrodogram(o.input.c_str(), prefix.c_str()));
  run.output(prefix.string() + ".pgm");
  run.output(prefix.string() + ".csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"avseci: cochlear-implant coding with audio-visual speech enhancement"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config_path, "JSON config file");
  app.add_option("--seed", o.seed, "global seed");
  app.add_option("--out", o.out, std::string("output directory (default under $") + kRootEnv + ")");

  auto need_file = [](CLI::App* cmd, const char* flag, std::string& var, const char* help) {
    cmd->add_option(flag, var, help)->required();
  };

  auto* corpus = app.add_subcommand("corpus", "desk corpus")->require_subcommand(1);
  auto* corpus_build = corpus->add_subcommand("build", "synthesize the corpus and its manifest");

  auto* ace = app.add_subcommand("ace", "ACE strategy")->require_subcommand(1);
  auto* ace_encode = ace->add_subcommand("encode", "encode a WAV file");
  need_file(ace_encode, "-i,--input", o.input, "16 kHz WAV");
  ace_encode->add_option("-o,--output", o.output, "ELEC file");
  ace_encode->add_option("--reference-peak", o.reference_peak, "envelope normalization (default: per utterance)");
  ace_encode->add_option("--ecs", o.ecs, "take the reference peak from this ECS checkpoint");
  ace_encode->add_option("--maxima", o.maxima, "channels selected per frame")->check(CLI::Range(1, 22));

  auto* ecs = app.add_subcommand("ecs", "ElectrodeNet-CS")->require_subcommand(1);
  auto* ecs_train = ecs->add_subcommand("train", "pretrain on the clean train split");
  need_file(ecs_train, "--manifest", o.manifest, "corpus manifest");
  ecs_train->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  ecs_train->add_option("--lr", o.lr)->check(CLI::PositiveNumber);
  auto* ecs_encode = ecs->add_subcommand("encode", "encode a WAV file");
  need_file(ecs_encode, "--ecs", o.ecs, "ECS checkpoint directory");
  need_file(ecs_encode, "-i,--input", o.input, "16 kHz WAV");
  ecs_encode->add_option("-o,--output", o.output, "ELEC file");

  auto* avse = app.add_subcommand("avse", "speech enhancement front end")->require_subcommand(1);
  auto* avse_train = avse->add_subcommand("train", "train the enhancer through the frozen ECS");
  need_file(avse_train, "--manifest", o.manifest, "corpus manifest");
  need_file(avse_train, "--ecs", o.ecs, "ECS checkpoint directory");
  avse_train->add_option("--fusion", o.fusion, "cross (audio-visual) or self (audio only)")
      ->check(CLI::IsMember({"cross", "self"}));
  avse_train->add_option("--alpha", o.alpha, "spectrogram loss weight");
  avse_train->add_option("--beta", o.beta, "electrodogram loss weight");
  avse_train->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  avse_train->add_option("--lr", o.lr)->check(CLI::PositiveNumber);

  auto* enhance = app.add_subcommand("enhance", "enhance a noisy WAV file");
  need_file(enhance, "--model", o.model, "enhancer checkpoint directory");
  need_file(enhance, "-i,--input", o.input, "noisy 16 kHz WAV");
  enhance->add_option("--visual", o.visual, "VISF track (cross fusion)");
  enhance->add_option("-o,--output", o.output, "enhanced WAV");

  auto* vocode = app.add_subcommand("vocode", "tone-vocode an electrodogram");
  need_file(vocode, "-i,--input", o.input, "ELEC file");
  vocode->add_option("-o,--output", o.output, "WAV file");

  auto* evaluate = app.add_subcommand("eval", "STOI, ESTOI and NCM of a system on a manifest split");
  need_file(evaluate, "--manifest", o.manifest, "corpus manifest");
  evaluate->add_option("--system", o.system, "ace, ecs, ase-ecs or avse-ecs")
      ->required()
      ->check(CLI::IsMember({"ace", "ecs", "ase-ecs", "avse-ecs"}));
  need_file(evaluate, "--ecs", o.ecs, "ECS checkpoint directory");
  evaluate->add_option("--model", o.model, "enhancer checkpoint (ase-ecs, avse-ecs)");
  evaluate->add_option("--split", o.split);
  evaluate->add_option("--conditions", o.conditions, "comma-separated: clean,noisy");
  evaluate->add_option("--threads", o.threads);

  auto* experiment = app.add_subcommand("experiment", "experiment tables")->require_subcommand(1);
  std::vector<CLI::App*> tables;
  for (const char* name : {"table1", "table2", "table3"}) {
    auto* t = experiment->add_subcommand(name);
    need_file(t, "--manifest", o.manifest, "corpus manifest");
    t->add_option("--ecs", o.ecs, "pretrained ECS (trained and cached when absent)");
    t->add_option("--threads", o.threads);
    tables.push_back(t);
  }
  tables[0]->description("ECS on clean and noisy speech");
  tables[1]->description("joint training at several beta values");
  tables[2]->description("ACE, ECS, ASE-ECS and AVSE-ECS");

  auto* plot = app.add_subcommand("plot", "figures")->require_subcommand(1);
  auto* plot_elec = plot->add_subcommand("electrodogram", "PGM image and CSV of an ELEC file");
  need_file(plot_elec, "-i,--input", o.input, "ELEC file");
  plot_elec->add_option("-o,--output", o.output, "output prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  Run run;
  run.argv.assign(argv, argv + argc);
  std::function<void(const json&)> action;
  const std::vector<std::pair<CLI::App*, std::function<void(const json&)>>> leaves = {
      {corpus_build, [&](const json& c) { cmd_corpus_build(o, c, run); }},
      {ace_encode, [&](const json& c) { cmd_ace_encode(o, c, run); }},
      {ecs_train, [&](const json& c) { cmd_ecs_train(o, c, run); }},
      {ecs_encode, [&](const json& c) { cmd_ecs_encode(o, c, run); }},
      {avse_train, [&](const json& c) { cmd_avse_train(o, c, run); }},
      {enhance, [&](const json& c) { cmd_enhance(o, c, run); }},
      {vocode, [&](const json& c) { cmd_vocode(o, c, run); }},
      {evaluate, [&](const json& c) { cmd_eval(o, c, run); }},
      {tables[0], [&](const json& c) { cmd_experiment("table1", o, c, run); }},
      {tables[1], [&](const json& c) { cmd_experiment("table2", o, c, run); }},
      {tables[2], [&](const json& c) { cmd_experiment("table3", o, c, run); }},
      {plot_elec, [&](const json& c) { cmd_plot(o, c, run); }},
  };
  for (const auto& [cmd, fn] : leaves) {
    if (cmd->parsed()) {
      run.command = cmd->get_parent() == &app ? cmd->get_name() : cmd->get_parent()->get_name() + " " + cmd->get_name();
      action = fn;
    }
  }
  if (!action) {
    std::cerr << app.help();
    return 1;
  }

  int code = 0;
  std::string error;
  try {
    run.dir = out_dir(o, run);
    const json cfg = load_config(o.config_path);
    if (!o.config_path.empty()) run.input("config", o.config_path);
    action(cfg);
  } catch (const Failure& f) {
    code = f.code;
    error = f.message;
  } catch (const std::exception& e) {
    code = 4;
    error = e.what();
  }
  run.write(code, error);
  if (code != 0) std::cerr << "error: " << error << "\n";
  return code;
}
