// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <optional>

#include "nn/tape.hpp"

namespace avseci::nn {

// Elementwise, equal shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var relu(Var x);
Var sigmoid(Var x);

Var reshape(Var x, Shape shape);
Var transpose(Var x);  // 2-D

// x [N x in] * W [in x out] + b [out]
Var dense(Var x, Var W, Var b);

// softmax(Q K^T / sqrt(d_k) + bias) V, row-wise max subtraction.
// bias, if given, is a constant [T_q x T_k] score offset.
Var attention(Var Q, Var K, Var V, const Tensor* bias = nullptr);

// Per row of x [N x C], keep the k largest entries (ties to the lower
// index) and zero the rest. Backward passes the upstream gradient through
// kept entries only.
Var topk_mask(Var x, int k);

// Cross-correlation. x [C_in x H x W], w [C_out x C_in x kh x kw],
// b [C_out]; same stride and zero padding on both spatial axes.
Var conv2d(Var x, Var w, Var b, int stride, int padding);

// Nearest-neighbour x2 on both spatial axes of [C x H x W].
Var upsample2x(Var x);

// Keeps the first `n` columns of a 2-D tensor.
Var crop_cols(Var x, std::size_t n);
// [C x H x W] -> [C x h x w], anchored at (0, 0): zero fill or truncate.
Var pad_or_crop(Var x, std::size_t h, std::size_t w);

// sqrt(re^2 + im^2); the derivative denominator is floored at eps.
Var magnitude(Var re, Var im, double eps = 1e-9);

// Weighted mean squared error: sum w (a - b)^2 / sum w. Without weights
// this is the plain mean over all entries.
Var mse(Var a, Var b, const Tensor* weights = nullptr);

// Mean absolute error over all entries.
Var mae(Var a, Var b);

}  // namespace avseci::nn
