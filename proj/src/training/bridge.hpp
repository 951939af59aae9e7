// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Differentiable path from an enhanced spectrogram back to an electrodogram:
// inverse STFT, ACE re-framing and DFT, magnitude, frozen ECS, top-k.

#pragma once

#include "ecs/ecs.hpp"
#include "nn/tape.hpp"
#include "signal/stft.hpp"

namespace avseci::training {

// re, im [F x T] -> waveform [len]; least-squares overlap-add inverse.
nn::Var istft_op(nn::Var re, nn::Var im, const signal::StftBasis& basis, std::size_t len);

// waveform [L] -> [T x F] real or imaginary part of the framed, windowed DFT.
nn::Var framed_dft_op(nn::Var x, const signal::StftBasis& basis, bool imag);

struct BridgeSpec {
  signal::StftConfig enhancer_stft;
  signal::StftConfig ace_stft{128, 32};
  std::size_t length = 0;  // samples resynthesized from the spectrogram
};

// Returns the ECS electrodogram [T_e x M] of the resynthesized waveform.
// ECS weights enter as constants; nothing flows into them.
nn::Var electrodogram_bridge(nn::Var re, nn::Var im, const BridgeSpec& spec, ecs::EcsNetwork& ecs);

}  // namespace avseci::training
