// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "ecs/ecs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "common/error.hpp"
#include "common/files.hpp"
#include "nn/adam.hpp"
#include "nn/init.hpp"
#include "nn/ops.hpp"

namespace avseci::ecs {

EcsNetwork::EcsNetwork(std::uint64_t seed, std::size_t in_dim, std::array<std::size_t, 4> widths, int k)
    : in_dim_(in_dim), widths_(widths), k_(k), seed_(seed) {
  std::size_t fan_in = in_dim;
  for (std::size_t l = 0; l < 4; ++l) {
    const std::string base = "ecs.dense" + std::to_string(l + 1);
    weights_[l] = nn::Parameter(base + ".weight", {fan_in, widths[l]});
    biases_[l] = nn::Parameter(base + ".bias", {widths[l]});
    nn::glorot_uniform(weights_[l], fan_in, widths[l], seed);
    fan_in = widths[l];
  }
}

nn::Var EcsNetwork::forward(nn::Tape& tape, nn::Var frames, bool track_params) {
  if (frames.shape().size() != 2 || frames.shape()[1] != in_dim_) {
    throw ShapeError("ecs: expected [N x " + std::to_string(in_dim_) + "] input, got " +
                     nn::shape_str(frames.shape()));
  }
  auto p = [&](nn::Parameter& prm) { return track_params ? tape.param(prm) : tape.constant(prm.value); };
  nn::Var h = input_gain == 1.0 ? frames : nn::scale(frames, input_gain);
  for (std::size_t l = 0; l < 4; ++l) {
    h = nn::dense(h, p(weights_[l]), p(biases_[l]));
    h = l + 1 < 4 ? nn::relu(h) : nn::sigmoid(h);
  }
  return h;
}

nn::Var EcsNetwork::encode(nn::Tape& tape, nn::Var frames, bool track_params) {
  return nn::topk_mask(forward(tape, frames, track_params), k_);
}

std::vector<nn::Parameter*> EcsNetwork::parameters() {
  std::vector<nn::Parameter*> out;
  for (std::size_t l = 0; l < 4; ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

void EcsNetwork::set_frozen(bool frozen) {
  for (auto* p : parameters()) p->frozen = frozen;
}

nn::Checkpoint EcsNetwork::to_checkpoint() const {
  nn::Checkpoint ck;
  ck.kind = "ecs";
  ck.seed = seed_;
  ck.corpus_peak = corpus_peak;
  ck.config = {{"in_dim", in_dim_}, {"widths", widths_}, {"k", k_}, {"input_gain", input_gain}};
  for (std::size_t l = 0; l < 4; ++l) {
    ck.tensors.push_back({weights_[l].name, weights_[l].value.shape, weights_[l].value.values});
    ck.tensors.push_back({biases_[l].name, biases_[l].value.shape, biases_[l].value.values});
  }
  return ck;
}

EcsNetwork EcsNetwork::from_checkpoint(const nn::Checkpoint& ck) {
  if (ck.kind != "ecs") throw DataError("checkpoint kind '" + ck.kind + "' is not an ECS model");
  const nlohmann::json& c = ck.config.contains("network") ? ck.config["network"] : ck.config;
  EcsNetwork net(ck.seed, c.at("in_dim").get<std::size_t>(), c.at("widths").get<std::array<std::size_t, 4>>(),
                 c.at("k").get<int>());
  ck.restore(net.parameters());
  net.corpus_peak = ck.corpus_peak;
  net.input_gain = c.value("input_gain", 1.0);
  return net;
}

namespace {

nn::Tensor frames_tensor(const Eigen::MatrixXd& cols) {
  // 65 x T column-major is the same memory as T x 65 row-major.
  nn::Tensor t({static_cast<std::size_t>(cols.cols()), static_cast<std::size_t>(cols.rows())});
  std::copy(cols.data(), cols.data() + cols.size(), t.values.begin());
  return t;
}

Eigen::MatrixXd to_columns(const nn::Buffer& rows, std::size_t n, std::size_t dim) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
  std::copy(rows.begin(), rows.end(), m.data());
  return m;
}

}  // namespace

EcsOutput ecs_forward(EcsNetwork& net, const Eigen::MatrixXd& mag65) {
  if (static_cast<std::size_t>(mag65.rows()) != net.in_dim()) {
    throw ShapeError("ecs_forward: expected " + std::to_string(net.in_dim()) + " rows, got " +
                     std::to_string(mag65.rows()));
  }
  nn::Tape tape;
  const nn::Var x = tape.constant(frames_tensor(mag65));
  const nn::Var env = net.forward(tape, x, false);
  const nn::Var sel = nn::topk_mask(env, net.k());
  const auto n = static_cast<std::size_t>(mag65.cols());
  EcsOutput out;
  out.env_pre = to_columns(env.value(), n, net.out_dim());
  out.elec.data = to_columns(sel.value(), n, net.out_dim());
  out.elec.n_active = net.k();
  out.elec.frame_rate = ace::kFrameRate;
  return out;
}

ace::Electrodogram ecs_encode(EcsNetwork& net, const signal::Waveform& w) {
  if (w.sample_rate_hz != signal::kPipelineRate) {
    throw DataError("ecs_encode: input must be at 16 kHz");
  }
  Eigen::MatrixXd mag = ace::analysis_magnitudes(w);
  if (net.corpus_peak > 0.0) mag /= net.corpus_peak;
  return ecs_forward(net, mag).elec;
}

nlohmann::json to_json(const EcsTrainConfig& cfg) {
  return {{"lr", cfg.lr},
          {"epochs", cfg.epochs},
          {"batch_frames", cfg.batch_frames},
          {"seed", cfg.seed},
          {"val_fraction", cfg.val_fraction},
          {"input_gain", cfg.input_gain},
          {"loss", "mae_all_channels"}};
}

EcsTrainConfig ecs_train_config_from_json(const nlohmann::json& j) {
  EcsTrainConfig cfg;
  try {
    cfg.lr = j.value("lr", cfg.lr);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_frames = j.value("batch_frames", cfg.batch_frames);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
    cfg.input_gain = j.value("input_gain", cfg.input_gain);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("ecs config: ") + e.what());
  }
  return cfg;
}

nn::Checkpoint ecs_pretrain(const std::vector<signal::Waveform>& corpus, const EcsTrainConfig& cfg,
                            const EcsProgress& progress) {
  if (corpus.empty()) throw DataError("ecs_pretrain: empty corpus");
  if (cfg.epochs < 1 || cfg.batch_frames < 1) throw UsageError("ecs_pretrain: epochs and batch must be positive");
  const ace::ChannelMap map = ace::build_channel_map();
  const double peak = ace::corpus_peak(corpus, map);
  if (!(peak > 0.0)) throw DataError("ecs_pretrain: corpus is silent");

  // Gather (input, target) frame pairs.
  std::vector<double> inputs, targets;
  std::size_t total = 0;
  for (const auto& w : corpus) {
    const ace::Analysis a = ace::analyze_envelopes(w, map, peak);
    inputs.insert(inputs.end(), a.mag65.data(), a.mag65.data() + a.mag65.size());
    targets.insert(targets.end(), a.envelopes.data.data(), a.envelopes.data.data() + a.envelopes.data.size());
    total += static_cast<std::size_t>(a.mag65.cols());
  }
  const std::size_t in_dim = ace::kBins, out_dim = ace::kChannels;

  std::mt19937_64 rng(derive_seed(cfg.seed, "ecs.split"));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(total)));
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  if (train.empty()) throw DataError("ecs_pretrain: no training frames after the validation split");

  auto gather = [&](const std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, nn::Tensor& x,
                    nn::Tensor& y) {
    const std::size_t n = hi - lo;
    x = nn::Tensor({n, in_dim});
    y = nn::Tensor({n, out_dim});
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t f = idx[lo + i];
      std::copy_n(inputs.begin() + static_cast<std::ptrdiff_t>(f * in_dim), in_dim, x.values.begin() + static_cast<std::ptrdiff_t>(i * in_dim));
      std::copy_n(targets.begin() + static_cast<std::ptrdiff_t>(f * out_dim), out_dim, y.values.begin() + static_cast<std::ptrdiff_t>(i * out_dim));
    }
  };

  EcsNetwork net(cfg.seed);
  net.corpus_peak = peak;
  if (cfg.input_gain > 0.0) {
    net.input_gain = cfg.input_gain;
  } else {
    double ss = 0.0;
    for (std::size_t f : train) {
      for (std::size_t k = 0; k < in_dim; ++k) ss += inputs[f * in_dim + k] * inputs[f * in_dim + k];
    }
    const double rms = std::sqrt(ss / static_cast<double>(train.size() * in_dim));
    net.input_gain = rms > 0.0 ? 1.0 / rms : 1.0;
  }
  // Start the output layer at the per-channel mean target.
  {
    auto& b = net.output_bias().value.values;
    for (std::size_t c = 0; c < out_dim; ++c) {
      double mean = 0.0;
      for (std::size_t f : train) mean += targets[f * out_dim + c];
      mean = std::clamp(mean / static_cast<double>(train.size()), 1e-4, 1.0 - 1e-4);
      b[c] = std::log(mean / (1.0 - mean));
    }
  }
  nn::Adam opt(net.parameters(), {cfg.lr});
  nlohmann::json hist_train = nlohmann::json::array(), hist_val = nlohmann::json::array();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t lo = 0; lo < train.size(); lo += cfg.batch_frames) {
      const std::size_t hi = std::min(train.size(), lo + cfg.batch_frames);
      nn::Tensor x, y;
      gather(train, lo, hi, x, y);
      nn::Tape tape;
      const nn::Var env = net.forward(tape, tape.constant(std::move(x)));
      const nn::Var loss = nn::mae(env, tape.constant(std::move(y)));
      if (!std::isfinite(loss.item())) {
        throw NumericError("ecs_pretrain: non-finite loss at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      opt.step();
      loss_sum += loss.item();
      ++batches;
    }
    EcsEpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(batches);
    if (!val.empty()) {
      double vsum = 0.0;
      for (std::size_t lo = 0; lo < val.size(); lo += 4096) {
        const std::size_t hi = std::min(val.size(), lo + 4096);
        nn::Tensor x, y;
        gather(val, lo, hi, x, y);
        nn::Tape tape;
        const nn::Var env = net.forward(tape, tape.constant(std::move(x)), false);
        vsum += nn::mae(env, tape.constant(std::move(y))).item() * static_cast<double>(hi - lo);
      }
      st.val_loss = vsum / static_cast<double>(val.size());
    }
    hist_train.push_back(st.train_loss);
    hist_val.push_back(st.val_loss);
    if (progress) progress(st);
  }

  nn::Checkpoint ck = net.to_checkpoint();
  ck.config = {{"network", ck.config}, {"train", to_json(cfg)}};
  ck.history = {{"train_loss", hist_train}, {"val_loss", hist_val}, {"frames", total}};
  ck.add_optimizer(opt);
  return ck;
}

}  // namespace avseci::ecs
