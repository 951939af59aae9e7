// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avseci/avseci.h"

#include <cstring>
#include <exception>
#include <filesystem>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ace/ace.hpp"
#include "ace/elec_io.hpp"
#include "avse/enhancer.hpp"
#include "common/error.hpp"
#include "common/files.hpp"
#include "data/manifest.hpp"
#include "ecs/ecs.hpp"
#include "eval/evaluate.hpp"
#include "harness/experiments.hpp"
#include "harness/plot.hpp"
#include "nn/checkpoint.hpp"
#include "signal/waveform.hpp"
#include "training/joint.hpp"

struct avseci_electrodogram {
  avseci::ace::Electrodogram value;
};

struct avseci_ecs {
  avseci::ecs::EcsNetwork net;
};

struct avseci_enhancer {
  avseci::avse::EnhancerNetwork net;
};

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace avseci;

thread_local std::string g_last_error;

avseci_status fail(avseci_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

template <typename Fn>
avseci_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return AVSECI_OK;
  } catch (const Error& e) {
    return fail(static_cast<avseci_status>(e.kind()), e.what());
  } catch (const json::exception& e) {
    return fail(AVSECI_ERR_USAGE, std::string("invalid JSON: ") + e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(AVSECI_ERR_DATA, e.what());
  } catch (const std::bad_alloc&) {
    return fail(AVSECI_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(AVSECI_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(AVSECI_ERR_INTERNAL, "unknown exception");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw UsageError(std::string(what) + " must not be NULL");
}

json parse_config(const char* text) {
  if (!text || !*text) return json::object();
  json j = json::parse(text);
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  return j;
}

harness::Log logger(avseci_log_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& line) { fn(line.c_str(), user); };
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

extern "C" {

const char* avseci_version(void) { return AVSECI_VERSION; }

const char* avseci_source_hash(void) { return AVSECI_SOURCE_HASH; }

const char* avseci_last_error(void) { return g_last_error.c_str(); }

avseci_status avseci_sha256_file(const char* path, char* out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    const std::string h = sha256_file(path);
    std::memcpy(out, h.c_str(), h.size() + 1);
  });
}

avseci_status avseci_corpus_build(const char* config_json, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "out_dir");
    data::build_corpus(data::corpus_config_from_json(parse_config(config_json)), out_dir);
  });
}

avseci_status avseci_electrodogram_read(const char* path, avseci_electrodogram** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new avseci_electrodogram{ace::read_electrodogram(path)};
  });
}

avseci_status avseci_electrodogram_write(const avseci_electrodogram* e, const char* path) {
  return guarded([&] {
    require(e, "electrodogram");
    require(path, "path");
    ace::write_electrodogram(e->value, path);
  });
}

void avseci_electrodogram_free(avseci_electrodogram* e) { delete e; }

avseci_status avseci_electrodogram_shape(const avseci_electrodogram* e, int* channels, int* frames) {
  return guarded([&] {
    require(e, "electrodogram");
    if (channels) *channels = e->value.channels();
    if (frames) *frames = e->value.frames();
  });
}

avseci_status avseci_electrodogram_copy(const avseci_electrodogram* e, double* values, size_t count) {
  return guarded([&] {
    require(e, "electrodogram");
    require(values, "values");
    const auto& d = e->value.data;
    if (count != static_cast<size_t>(d.size())) {
      throw UsageError("electrodogram_copy: buffer holds " + std::to_string(count) + " values, need " +
                       std::to_string(d.size()));
    }
    const int T = e->value.frames();
    for (int c = 0; c < e->value.channels(); ++c) {
      for (int t = 0; t < T; ++t) values[static_cast<size_t>(c) * static_cast<size_t>(T) + static_cast<size_t>(t)] = d(c, t);
    }
  });
}

avseci_status avseci_ace_encode(const char* wav_path, double reference_peak, int maxima,
                                avseci_electrodogram** out) {
  return guarded([&] {
    require(wav_path, "wav_path");
    require(out, "out");
    const signal::Waveform w = signal::read_wav(wav_path);
    if (w.sample_rate_hz != signal::kPipelineRate) throw DataError("ace encode: input must be 16 kHz");
    std::optional<double> peak;
    if (reference_peak > 0.0) peak = reference_peak;
    *out = new avseci_electrodogram{ace::ace_encode(w, peak, maxima)};
  });
}

avseci_status avseci_ecs_train(const char* manifest_path, const char* config_json, const char* checkpoint_dir,
                               avseci_log_fn log, void* user) {
  return guarded([&] {
    require(manifest_path, "manifest_path");
    require(checkpoint_dir, "checkpoint_dir");
    const auto cfg = ecs::ecs_train_config_from_json(parse_config(config_json));
    const auto m = data::load_manifest(manifest_path);
    const auto emit = logger(log, user);
    const nn::Checkpoint ck = ecs::ecs_pretrain(harness::load_clean_split(m, "train"), cfg,
                                                [&](const ecs::EcsEpochStats& s) {
                                                  if (!emit) return;
                                                  char buf[96];
                                                  std::snprintf(buf, sizeof buf, "epoch %d train %.5f val %.5f",
                                                                s.epoch, s.train_loss, s.val_loss);
                                                  emit(buf);
                                                });
    ck.save(checkpoint_dir);
  });
}

avseci_status avseci_ecs_load(const char* checkpoint_dir, avseci_ecs** out) {
  return guarded([&] {
    require(checkpoint_dir, "checkpoint_dir");
    require(out, "out");
    *out = new avseci_ecs{ecs::EcsNetwork::from_checkpoint(nn::Checkpoint::load(checkpoint_dir))};
  });
}

void avseci_ecs_free(avseci_ecs* ecs) { delete ecs; }

avseci_status avseci_ecs_corpus_peak(const avseci_ecs* ecs, double* peak) {
  return guarded([&] {
    require(ecs, "ecs");
    require(peak, "peak");
    *peak = ecs->net.corpus_peak;
  });
}

avseci_status avseci_ecs_encode(avseci_ecs* ecs, const char* wav_path, avseci_electrodogram** out) {
  return guarded([&] {
    require(ecs, "ecs");
    require(wav_path, "wav_path");
    require(out, "out");
    *out = new avseci_electrodogram{ecs::ecs_encode(ecs->net, signal::read_wav(wav_path))};
  });
}

avseci_status avseci_avse_train(const char* manifest_path, const char* ecs_checkpoint, const char* fusion,
                                double alpha, double beta, const char* config_json, const char* checkpoint_dir,
                                avseci_log_fn log, void* user) {
  return guarded([&] {
    require(manifest_path, "manifest_path");
    require(ecs_checkpoint, "ecs_checkpoint");
    require(fusion, "fusion");
    require(checkpoint_dir, "checkpoint_dir");
    training::JointConfig cfg = training::joint_config_from_json(parse_config(config_json));
    cfg.network.fusion = avse::parse_fusion(fusion);
    cfg.weights.alpha = alpha;
    cfg.weights.beta = beta;
    training::validate(cfg.weights);
    const auto m = data::load_manifest(manifest_path);
    const auto utts = harness::load_train_utterances(m, "train", cfg.network.fusion == avse::FusionMode::kCross);
    ecs::EcsNetwork net = ecs::EcsNetwork::from_checkpoint(nn::Checkpoint::load(ecs_checkpoint));
    const auto emit = logger(log, user);
    const long per_epoch = static_cast<long>(utts.size());
    const auto res = training::joint_train(utts, net, cfg, [&](const training::StepLoss& s) {
      if (!emit || s.step % per_epoch != 0) return;
      char buf[128];
      std::snprintf(buf, sizeof buf, "epoch %ld L_Spec %.6g L_Elec %.6g L_Total %.6g", s.step / per_epoch, s.spec,
                    s.elec, s.total);
      emit(buf);
    });
    res.checkpoint.save(checkpoint_dir);
    training::write_loss_csv(res.history, fs::path(checkpoint_dir) / "loss.csv");
  });
}

avseci_status avseci_enhancer_load(const char* checkpoint_dir, avseci_enhancer** out) {
  return guarded([&] {
    require(checkpoint_dir, "checkpoint_dir");
    require(out, "out");
    *out = new avseci_enhancer{avse::EnhancerNetwork::from_checkpoint(nn::Checkpoint::load(checkpoint_dir))};
  });
}

void avseci_enhancer_free(avseci_enhancer* enh) { delete enh; }

avseci_status avseci_enhance(avseci_enhancer* enh, const char* wav_path, const char* visual_path,
                             const char* out_wav) {
  return guarded([&] {
    require(enh, "enhancer");
    require(wav_path, "wav_path");
    require(out_wav, "out_wav");
    std::optional<avse::VisualTrack> vis;
    if (enh->net.config().fusion == avse::FusionMode::kCross) {
      if (!visual_path) throw UsageError("cross fusion needs visual features");
      if (!fs::exists(visual_path)) throw DataError(std::string("missing visual features: ") + visual_path);
      vis = avse::read_visual(visual_path);
    }
    const auto res = avse::enhance(signal::read_wav(wav_path), vis ? &*vis : nullptr, enh->net);
    signal::write_wav(res.enhanced, out_wav);
  });
}

avseci_status avseci_vocode(const avseci_electrodogram* e, const char* out_wav) {
  return guarded([&] {
    require(e, "electrodogram");
    require(out_wav, "out_wav");
    signal::write_wav(eval::tone_vocode(e->value, eval::default_vocoder()), out_wav);
  });
}

avseci_status avseci_eval(const char* manifest_path, const char* system, const char* ecs_checkpoint,
                          const char* enhancer_checkpoint, const char* split, const char* conditions,
                          const char* out_csv, const char* mean_json) {
  return guarded([&] {
    require(manifest_path, "manifest_path");
    require(system, "system");
    require(ecs_checkpoint, "ecs_checkpoint");
    require(out_csv, "out_csv");
    const eval::System sys = eval::parse_system(system);
    const auto m = data::load_manifest(manifest_path);
    ecs::EcsNetwork net = ecs::EcsNetwork::from_checkpoint(nn::Checkpoint::load(ecs_checkpoint));
    std::optional<avse::EnhancerNetwork> enh;
    if (sys == eval::System::kAseEcs || sys == eval::System::kAvseEcs) {
      if (!enhancer_checkpoint) throw UsageError(std::string(system) + " needs an enhancer checkpoint");
      enh.emplace(avse::EnhancerNetwork::from_checkpoint(nn::Checkpoint::load(enhancer_checkpoint)));
      if (sys == eval::System::kAvseEcs) harness::require_visual(m, split ? split : "test");
    }
    eval::EvalOptions opts;
    if (split) opts.split = split;
    if (conditions) opts.conditions = split_csv(conditions);
    const auto report = eval::evaluate_set(m, sys, {&net, enh ? &*enh : nullptr, std::nullopt}, opts);
    eval::write_report_csv(report, out_csv);
    if (mean_json) {
      json j = {{"system", report.system}, {"failures", report.failures.size()}};
      for (const auto& c : report.means) {
        j["means"][c.condition] = {{"count", c.count},
                                   {"stoi", c.mean.stoi},
                                   {"estoi", c.mean.estoi},
                                   {"ncm", c.mean.ncm}};
      }
      write_file_atomic(mean_json, j.dump(2) + "\n");
    }
  });
}

avseci_status avseci_experiment(const char* name, const char* manifest_path, const char* ecs_checkpoint,
                                const char* config_json, const char* root, avseci_log_fn log, void* user,
                                char* report_path, size_t report_cap) {
  return guarded([&] {
    require(name, "name");
    require(manifest_path, "manifest_path");
    require(root, "root");
    const std::string n = name;
    if (n != "table1" && n != "table2" && n != "table3") {
      throw UsageError("unknown experiment '" + n + "' (expected table1, table2 or table3)");
    }
    harness::Workspace ws(manifest_path, root, harness::harness_config_from_json(parse_config(config_json)),
                          logger(log, user));
    std::optional<fs::path> given;
    if (ecs_checkpoint) given = fs::path(ecs_checkpoint);
    ws.ecs(given);
    const auto out = harness::run_experiment(n, ws);
    if (report_path && report_cap) {
      const std::string p = out.markdown.string();
      const size_t len = std::min(p.size(), report_cap - 1);
      std::memcpy(report_path, p.data(), len);
      report_path[len] = '\0';
    }
  });
}

avseci_status avseci_plot_electrodogram(const char* elec_path, const char* out) {
  return guarded([&] {
    require(elec_path, "elec_path");
    require(out, "out");
    harness::plot_electrodogram(elec_path, out);
  });
}

}  // extern "C"
