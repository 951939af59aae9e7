// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "training/bridge.hpp"

#include <algorithm>
#include <memory>
#include <string>

#include "common/error.hpp"
#include "nn/ops.hpp"

namespace avseci::training {

namespace {

using signal::RowMatrix;
using CMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

CMap cmat(const nn::Buffer& v, std::size_t r, std::size_t c) {
  return CMap(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
Map mat(nn::Buffer& v, std::size_t r, std::size_t c) {
  return Map(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

}  // namespace

nn::Var istft_op(nn::Var re, nn::Var im, const signal::StftBasis& basis, std::size_t len) {
  const auto f = static_cast<std::size_t>(basis.config().bins());
  if (re.shape().size() != 2 || re.shape()[0] != f || re.shape() != im.shape()) {
    throw ShapeError("istft_op: expected [" + std::to_string(f) + " x T] real/imag parts, got " +
                     nn::shape_str(re.shape()) + " / " + nn::shape_str(im.shape()));
  }
  const std::size_t t = re.shape()[1];
  const auto n = static_cast<std::size_t>(basis.config().window_len);
  const auto hop = static_cast<std::size_t>(basis.config().hop);
  auto norm = std::make_shared<std::vector<double>>(basis.dual_normalizer(t));
  const std::size_t m = std::min(len, norm->size());

  const RowMatrix frames = cmat(re.value(), f, t).transpose() * basis.synthesis_re() +
                           cmat(im.value(), f, t).transpose() * basis.synthesis_im();
  const auto& win = basis.window();
  nn::Buffer y(norm->size(), 0.0);
  for (std::size_t k = 0; k < t; ++k) {
    const double* row = frames.row(static_cast<Eigen::Index>(k)).data();
    for (std::size_t j = 0; j < n; ++j) y[k * hop + j] += win[j] * row[j];
  }
  nn::Buffer out(len, 0.0);
  for (std::size_t i = 0; i < m; ++i) out[i] = y[i] * (*norm)[i];

  const signal::StftBasis* b = &basis;
  return re.tape().record(
      "istft", {len}, std::move(out), {re, im}, [re, im, b, norm, f, t, n, hop, m](nn::Tape& tape, const nn::Buffer& g) {
        const auto& win = b->window();
        RowMatrix gframes(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < t; ++k) {
          double* row = gframes.row(static_cast<Eigen::Index>(k)).data();
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t i = k * hop + j;
            row[j] = i < m ? win[j] * g[i] * (*norm)[i] : 0.0;
          }
        }
        if (re.requires_grad()) {
          mat(tape.grad_buffer(re), f, t).noalias() += (gframes * b->synthesis_re().transpose()).transpose();
        }
        if (im.requires_grad()) {
          mat(tape.grad_buffer(im), f, t).noalias() += (gframes * b->synthesis_im().transpose()).transpose();
        }
      });
}

nn::Var framed_dft_op(nn::Var x, const signal::StftBasis& basis, bool imag) {
  if (x.shape().size() != 1) throw ShapeError("framed_dft_op: expected a 1-D waveform, got " + nn::shape_str(x.shape()));
  const auto n = static_cast<std::size_t>(basis.config().window_len);
  const auto hop = static_cast<std::size_t>(basis.config().hop);
  const auto f = static_cast<std::size_t>(basis.config().bins());
  const std::size_t len = x.shape()[0];
  const std::size_t t = signal::frame_count(len, static_cast<int>(n), static_cast<int>(hop));
  if (t == 0) throw LengthError("framed_dft_op: waveform shorter than one frame");
  const RowMatrix frames = signal::frame_signal(x.value(), static_cast<int>(n), static_cast<int>(hop));
  const RowMatrix& w = imag ? basis.analysis_im() : basis.analysis_re();
  nn::Buffer out(t * f);
  mat(out, t, f).noalias() = frames * w;
  const RowMatrix* wp = &w;
  return x.tape().record(imag ? "dft_im" : "dft_re", {t, f}, std::move(out), {x},
                         [x, wp, n, hop, f, t](nn::Tape& tape, const nn::Buffer& g) {
                           const RowMatrix gframes = cmat(g, t, f) * wp->transpose();
                           auto& gx = tape.grad_buffer(x);
                           for (std::size_t k = 0; k < t; ++k) {
                             const double* row = gframes.row(static_cast<Eigen::Index>(k)).data();
                             for (std::size_t j = 0; j < n; ++j) gx[k * hop + j] += row[j];
                           }
                         });
}

nn::Var electrodogram_bridge(nn::Var re, nn::Var im, const BridgeSpec& spec, ecs::EcsNetwork& ecs) {
  const signal::StftBasis& syn = signal::stft_basis(spec.enhancer_stft);
  const signal::StftBasis& ana = signal::stft_basis(spec.ace_stft);
  if (static_cast<std::size_t>(ana.config().bins()) != ecs.in_dim()) {
    throw ShapeError("bridge: ACE analysis has " + std::to_string(ana.config().bins()) + " bins, ECS expects " +
                     std::to_string(ecs.in_dim()));
  }
  const nn::Var wave = istft_op(re, im, syn, spec.length);
  const nn::Var mag = nn::magnitude(framed_dft_op(wave, ana, false), framed_dft_op(wave, ana, true));
  const double peak = ecs.corpus_peak > 0.0 ? ecs.corpus_peak : 1.0;
  return ecs.encode(re.tape(), nn::scale(mag, 1.0 / peak), false);
}

}  // namespace avseci::training
