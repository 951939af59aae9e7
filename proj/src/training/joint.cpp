// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "training/joint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "common/error.hpp"
#include "common/files.hpp"
#include "nn/adam.hpp"
#include "nn/ops.hpp"
#include "signal/stft.hpp"
#include "training/bridge.hpp"

namespace avseci::training {

nlohmann::json to_json(const JointConfig& cfg) {
  return {{"alpha", cfg.weights.alpha},
          {"beta", cfg.weights.beta},
          {"lr", cfg.lr},
          {"epochs", cfg.epochs},
          {"crop_frames", cfg.crop_frames},
          {"seed", cfg.seed},
          {"ace_window", cfg.ace_stft.window_len},
          {"ace_hop", cfg.ace_stft.hop},
          {"spec_scale", cfg.spec_scale},
          {"network", avse::to_json(cfg.network)},
          {"batch_utterances", 1},
          {"freeze_ecs", true}};
}

JointConfig joint_config_from_json(const nlohmann::json& j) {
  JointConfig cfg;
  try {
    cfg.weights.alpha = j.value("alpha", cfg.weights.alpha);
    cfg.weights.beta = j.value("beta", cfg.weights.beta);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.crop_frames = j.value("crop_frames", cfg.crop_frames);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.ace_stft.window_len = j.value("ace_window", cfg.ace_stft.window_len);
    cfg.ace_stft.hop = j.value("ace_hop", cfg.ace_stft.hop);
    cfg.spec_scale = j.value("spec_scale", cfg.spec_scale);
    if (j.contains("network")) {
      nlohmann::json net = avse::to_json(cfg.network);
      net.update(j.at("network"));
      cfg.network = avse::enhancer_config_from_json(net);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("training config: ") + e.what());
  }
  return cfg;
}

namespace {

struct Prepared {
  const TrainUtterance* utt = nullptr;
  Eigen::MatrixXd noisy_re, noisy_im, clean_mag;  // F x T over the padded signal
  std::size_t valid_frames = 0;
  Eigen::MatrixXd clean_elec;  // M x T_e over the padded clean signal
  std::size_t valid_ace_frames = 0;
};

nn::Tensor to_tensor(const Eigen::MatrixXd& m) {
  nn::Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  Eigen::Map<signal::RowMatrix>(t.values.data(), m.rows(), m.cols()) = m;
  return t;
}

std::uint64_t fingerprint(const std::vector<nn::Parameter*>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto* p : params) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.values.data());
    for (std::size_t i = 0; i < p->value.values.size() * sizeof(double); ++i) {
      h = (h ^ bytes[i]) * 1099511628211ULL;
    }
  }
  return h;
}

class Trainer {
 public:
  Trainer(const std::vector<TrainUtterance>& utts, ecs::EcsNetwork* ecs, const JointConfig& cfg)
      : utts_(utts), ecs_(ecs), cfg_(cfg), net_(cfg.network, cfg.seed) {
    validate(cfg.weights);
    if (utts.empty()) throw DataError("training: no utterances");
    if (cfg.crop_frames < 4 || cfg.epochs < 1 || !(cfg.lr > 0.0)) throw UsageError("training: invalid crop/epochs/lr");
    if (!(cfg.spec_scale > 0.0)) throw UsageError("training: spec_scale must be positive");
    const auto& st = cfg.network.stft;
    if (st.hop % cfg.ace_stft.hop != 0) throw UsageError("training: STFT hop must be a multiple of the ACE hop");
    ratio_ = static_cast<std::size_t>(st.hop / cfg.ace_stft.hop);
    crop_len_ = (cfg.crop_frames - 1) * static_cast<std::size_t>(st.hop) + static_cast<std::size_t>(st.window_len);
    scale_ = cfg.spec_scale;
    prepare();
  }

  TrainResult run(const StepCallback& on_step) {
    nn::Adam opt(net_.parameters(), {cfg_.lr});
    std::mt19937_64 rng(derive_seed(cfg_.seed, "joint.sampler"));
    std::vector<std::size_t> order(prepared_.size());
    TrainResult result;
    long step = 0;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t idx : order) {
        const Prepared& p = prepared_[idx];
        const std::size_t span = static_cast<std::size_t>(p.noisy_re.cols()) - cfg_.crop_frames;
        std::uniform_int_distribution<std::size_t> pick(0, span);
        const std::size_t start = pick(rng);
        StepLoss loss;
        try {
          loss = train_step(p, start);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " [step " + std::to_string(step + 1) + ", utterance '" +
                             p.utt->id + "', crop frame " + std::to_string(start) + "]");
        }
        opt.step();
        loss.step = ++step;
        if (on_step) on_step(loss);
        result.history.push_back(loss);
      }
    }
    result.checkpoint = net_.to_checkpoint();
    result.checkpoint.seed = cfg_.seed;
    result.checkpoint.config["train"] = to_json(cfg_);
    result.checkpoint.config["train"]["objective"] = ecs_ ? "joint" : "spec_only";
    if (ecs_) result.checkpoint.corpus_peak = ecs_->corpus_peak;
    const auto& last = result.history.back();
    result.checkpoint.history = {{"steps", step},
                                 {"final_spec", last.spec},
                                 {"final_total", last.total},
                                 {"adam_steps", opt.steps()}};
    if (ecs_) result.checkpoint.history["final_elec"] = last.elec;
    result.checkpoint.add_optimizer(opt);
    return result;
  }

 private:
  void prepare() {
    const auto& st = cfg_.network.stft;
    prepared_.reserve(utts_.size());
    for (const auto& u : utts_) {
      if (u.noisy.size() != u.clean.size()) {
        throw DataError("training: utterance '" + u.id + "' has mismatched noisy/clean lengths");
      }
      if (u.noisy.sample_rate_hz != signal::kPipelineRate || u.clean.sample_rate_hz != signal::kPipelineRate) {
        throw DataError("training: utterance '" + u.id + "' is not at 16 kHz");
      }
      if (cfg_.network.fusion == avse::FusionMode::kCross && !u.visual) {
        throw DataError("training: utterance '" + u.id + "' has no visual features (cross fusion)");
      }
      Prepared p;
      p.utt = &u;
      const std::size_t padded = std::max(u.noisy.size(), crop_len_);
      signal::Waveform noisy = u.noisy, clean = u.clean;
      noisy.samples.resize(padded, 0.0);
      clean.samples.resize(padded, 0.0);
      const signal::ComplexSpectrogram sn = signal::stft(noisy, st);
      p.noisy_re = sn.data.real();
      p.noisy_im = sn.data.imag();
      p.clean_mag = signal::stft(clean, st).data.cwiseAbs();
      p.valid_frames = std::max<std::size_t>(
          1, signal::frame_count(std::max(u.noisy.size(), static_cast<std::size_t>(st.window_len)), st.window_len, st.hop));
      if (ecs_) {
        Eigen::MatrixXd amag = signal::magnitude(signal::stft(clean, cfg_.ace_stft));
        if (ecs_->corpus_peak > 0.0) amag /= ecs_->corpus_peak;
        p.clean_elec = ecs::ecs_forward(*ecs_, amag).elec.data;
        p.valid_ace_frames = signal::frame_count(std::max(u.noisy.size(), static_cast<std::size_t>(cfg_.ace_stft.window_len)),
                                                 cfg_.ace_stft.window_len, cfg_.ace_stft.hop);
      }
      prepared_.push_back(std::move(p));
    }
  }

  StepLoss train_step(const Prepared& p, std::size_t start) {
    const auto c = static_cast<Eigen::Index>(start);
    const auto n = static_cast<Eigen::Index>(cfg_.crop_frames);
    const Eigen::MatrixXd re = p.noisy_re.middleCols(c, n);
    const Eigen::MatrixXd im = p.noisy_im.middleCols(c, n);
    const Eigen::MatrixXd mag = (re.array().square() + im.array().square()).sqrt().matrix();

    Eigen::MatrixXd vis;
    if (cfg_.network.fusion == avse::FusionMode::kCross) {
      vis = net_.bottleneck_visual(*p.utt->visual, cfg_.crop_frames, start);
    }
    nn::Tape tape;
    const nn::Var mask = net_.forward(tape, avse::log_magnitude(mag), vis.size() ? &vis : nullptr, true);

    nn::Tensor valid({static_cast<std::size_t>(mag.rows()), cfg_.crop_frames}, 0.0);
    const std::size_t live = std::min(cfg_.crop_frames, p.valid_frames - std::min(p.valid_frames, start));
    for (std::size_t i = 0; i < static_cast<std::size_t>(mag.rows()); ++i) {
      for (std::size_t t = 0; t < live; ++t) valid[i * cfg_.crop_frames + t] = 1.0;
    }
    const nn::Var enh = nn::mul(mask, tape.constant(to_tensor(mag * scale_)));
    const nn::Var spec = spec_loss(enh, tape.constant(to_tensor(p.clean_mag.middleCols(c, n) * scale_)), &valid);

    StepLoss out;
    out.id = p.utt->id;
    out.spec = spec.item();
    nn::Var total;
    if (ecs_ == nullptr) {
      total = nn::scale(spec, cfg_.weights.alpha);
      out.elec = std::numeric_limits<double>::quiet_NaN();
    } else {
      // With beta = 0 the bridge sees the mask as a constant: L_Elec is
      // logged but contributes no gradient.
      const nn::Var m = cfg_.weights.beta > 0.0 ? mask : tape.constant(nn::Tensor(mask.shape(), mask.value()));
      const nn::Var enh_re = nn::mul(m, tape.constant(to_tensor(re)));
      const nn::Var enh_im = nn::mul(m, tape.constant(to_tensor(im)));
      BridgeSpec bs{cfg_.network.stft, cfg_.ace_stft, crop_len_};
      const nn::Var elec = electrodogram_bridge(enh_re, enh_im, bs, *ecs_);
      const std::size_t te = elec.shape()[0];
      const std::size_t m_ch = elec.shape()[1];
      const std::size_t first = start * ratio_;
      const Eigen::MatrixXd target = p.clean_elec.middleCols(static_cast<Eigen::Index>(first),
                                                             static_cast<Eigen::Index>(te)).transpose();
      nn::Tensor evalid({te, m_ch}, 0.0);
      const std::size_t elive = std::min(te, p.valid_ace_frames - std::min(p.valid_ace_frames, first));
      std::fill(evalid.values.begin(), evalid.values.begin() + static_cast<std::ptrdiff_t>(elive * m_ch), 1.0);
      const nn::Var el = elec_loss(elec, tape.constant(to_tensor(target)), &evalid);
      out.elec = el.item();
      total = total_loss(spec, el, cfg_.weights);
    }
    out.total = total.item();
    tape.backward(total);
    return out;
  }

  const std::vector<TrainUtterance>& utts_;
  ecs::EcsNetwork* ecs_;
  JointConfig cfg_;
  avse::EnhancerNetwork net_;
  std::vector<Prepared> prepared_;
  std::size_t ratio_ = 4;
  std::size_t crop_len_ = 0;
  double scale_ = 1.0;
};

}  // namespace

TrainResult joint_train(const std::vector<TrainUtterance>& utts, ecs::EcsNetwork& ecs, const JointConfig& cfg,
                        const StepCallback& on_step) {
  ecs.set_frozen(true);
  const auto params = ecs.parameters();
  const std::uint64_t before = fingerprint(params);
  Trainer trainer(utts, &ecs, cfg);
  TrainResult r = trainer.run(on_step);
  if (fingerprint(params) != before) throw InternalError("joint_train: frozen ECS parameters changed");
  for (const auto* p : params) {
    for (double g : p->grad) {
      if (g != 0.0) throw InternalError("joint_train: gradient reached frozen ECS parameter " + p->name);
    }
  }
  r.checkpoint.config["ecs_corpus_peak"] = ecs.corpus_peak;
  return r;
}

TrainResult spec_only_train(const std::vector<TrainUtterance>& utts, const JointConfig& cfg,
                            const StepCallback& on_step) {
  Trainer trainer(utts, nullptr, cfg);
  return trainer.run(on_step);
}

void write_loss_csv(const std::vector<StepLoss>& history, const std::filesystem::path& path) {
  std::string text = "step,L_Spec,L_Elec,L_Total\n";
  char line[160];
  for (const auto& h : history) {
    std::snprintf(line, sizeof(line), "%ld,%.10g,%.10g,%.10g\n", h.step, h.spec, h.elec, h.total);
    text += line;
  }
  write_file_atomic(path, text);
}

}  // namespace avseci::training
