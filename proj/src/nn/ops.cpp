// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nn/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "common/error.hpp"
#include "common/topk.hpp"

namespace avseci::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<RowMatrix>;
using CMapR = Eigen::Map<const RowMatrix>;

CMapR cmat(const Buffer& v, std::size_t rows, std::size_t cols) {
  return CMapR(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MapR mat(Buffer& v, std::size_t rows, std::size_t cols) {
  return MapR(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_same(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

void require_rank(const char* op, Var x, std::size_t rank) {
  if (x.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(x.shape()));
  }
}

// Adds src into the grad buffer of v when v requires grad.
void accumulate(Tape& t, Var v, const Buffer& src, double factor = 1.0) {
  if (!v.requires_grad()) return;
  auto& g = t.grad_buffer(v);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * src[i];
}

}  // namespace

Var add(Var a, Var b) {
  require_same("add", a, b);
  Buffer out(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape().record("add", a.shape(), std::move(out), {a, b},
                         [a, b](Tape& t, const Buffer& g) {
                           accumulate(t, a, g);
                           accumulate(t, b, g);
                         });
}

Var sub(Var a, Var b) {
  require_same("sub", a, b);
  Buffer out(a.value());
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape().record("sub", a.shape(), std::move(out), {a, b},
                         [a, b](Tape& t, const Buffer& g) {
                           accumulate(t, a, g);
                           accumulate(t, b, g, -1.0);
                         });
}

Var mul(Var a, Var b) {
  require_same("mul", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  Buffer out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape().record("mul", a.shape(), std::move(out), {a, b},
                         [a, b](Tape& t, const Buffer& g) {
                           const auto& av = a.value();
                           const auto& bv = b.value();
                           if (a.requires_grad()) {
                             auto& ga = t.grad_buffer(a);
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                           }
                           if (b.requires_grad()) {
                             auto& gb = t.grad_buffer(b);
                             for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                           }
                         });
}

Var scale(Var a, double c) {
  Buffer out(a.value());
  for (double& v : out) v *= c;
  return a.tape().record("scale", a.shape(), std::move(out), {a},
                         [a, c](Tape& t, const Buffer& g) { accumulate(t, a, g, c); });
}

Var relu(Var x) {
  Buffer out(x.value());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return x.tape().record("relu", x.shape(), std::move(out), {x},
                         [x](Tape& t, const Buffer& g) {
                           const auto& xv = x.value();
                           auto& gx = t.grad_buffer(x);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             if (xv[i] > 0.0) gx[i] += g[i];
                           }
                         });
}

Var sigmoid(Var x) {
  const auto& xv = x.value();
  auto out = std::make_shared<Buffer>(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double v = xv[i];
    // Evaluated on the side where exp() cannot overflow.
    (*out)[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  Buffer value(*out);
  return x.tape().record("sigmoid", x.shape(), std::move(value), {x},
                         [x, out](Tape& t, const Buffer& g) {
                           const auto& s = *out;
                           auto& gx = t.grad_buffer(x);
                           for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s[i] * (1.0 - s[i]);
                         });
}

Var reshape(Var x, Shape shape) {
  if (numel(shape) != x.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  Buffer out(x.value());
  return x.tape().record("reshape", std::move(shape), std::move(out), {x},
                         [x](Tape& t, const Buffer& g) { accumulate(t, x, g); });
}

Var transpose(Var x) {
  require_rank("transpose", x, 2);
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  Buffer out(r * c);
  mat(out, c, r) = cmat(x.value(), r, c).transpose();
  return x.tape().record("transpose", {c, r}, std::move(out), {x},
                         [x, r, c](Tape& t, const Buffer& g) {
                           auto& gx = t.grad_buffer(x);
                           mat(gx, r, c) += cmat(g, c, r).transpose();
                         });
}

Var dense(Var x, Var W, Var b) {
  require_rank("dense", x, 2);
  require_rank("dense", W, 2);
  const std::size_t n = x.shape()[0], in = x.shape()[1], out_dim = W.shape()[1];
  if (W.shape()[0] != in || b.size() != out_dim) {
    throw ShapeError("dense: x " + shape_str(x.shape()) + ", W " + shape_str(W.shape()) + ", b " +
                     shape_str(b.shape()));
  }
  Buffer out(n * out_dim);
  auto y = mat(out, n, out_dim);
  y.noalias() = cmat(x.value(), n, in) * cmat(W.value(), in, out_dim);
  const Eigen::Map<const Eigen::RowVectorXd> bias(b.value().data(), static_cast<Eigen::Index>(out_dim));
  y.rowwise() += bias;
  return x.tape().record(
      "dense", {n, out_dim}, std::move(out), {x, W, b},
      [x, W, b, n, in, out_dim](Tape& t, const Buffer& g) {
        const auto gy = cmat(g, n, out_dim);
        if (x.requires_grad()) {
          mat(t.grad_buffer(x), n, in).noalias() += gy * cmat(W.value(), in, out_dim).transpose();
        }
        if (W.requires_grad()) {
          mat(t.grad_buffer(W), in, out_dim).noalias() += cmat(x.value(), n, in).transpose() * gy;
        }
        if (b.requires_grad()) {
          auto& gb = t.grad_buffer(b);
          Eigen::Map<Eigen::RowVectorXd>(gb.data(), static_cast<Eigen::Index>(out_dim)) +=
              gy.colwise().sum();
        }
      });
}

Var attention(Var Q, Var K, Var V, const Tensor* bias) {
  require_rank("attention", Q, 2);
  require_rank("attention", K, 2);
  require_rank("attention", V, 2);
  const std::size_t tq = Q.shape()[0], dk = Q.shape()[1], tk = K.shape()[0], dv = V.shape()[1];
  if (K.shape()[1] != dk || V.shape()[0] != tk) {
    throw ShapeError("attention: Q " + shape_str(Q.shape()) + ", K " + shape_str(K.shape()) +
                     ", V " + shape_str(V.shape()));
  }
  if (bias != nullptr && bias->shape != Shape{tq, tk}) {
    throw ShapeError("attention: bias shape " + shape_str(bias->shape));
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  auto probs = std::make_shared<RowMatrix>(cmat(Q.value(), tq, dk) *
                                           cmat(K.value(), tk, dk).transpose() * inv_sqrt);
  RowMatrix& P = *probs;
  if (bias != nullptr) P += cmat(bias->values, tq, tk);
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    auto row = P.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp();
    row /= row.sum();
  }
  Buffer out(tq * dv);
  mat(out, tq, dv).noalias() = P * cmat(V.value(), tk, dv);
  return Q.tape().record(
      "attention", {tq, dv}, std::move(out), {Q, K, V},
      [Q, K, V, probs, tq, dk, tk, dv, inv_sqrt](Tape& t, const Buffer& g) {
        const RowMatrix& P = *probs;
        const auto gO = cmat(g, tq, dv);
        if (V.requires_grad()) mat(t.grad_buffer(V), tk, dv).noalias() += P.transpose() * gO;
        if (!Q.requires_grad() && !K.requires_grad()) return;
        const RowMatrix dP = gO * cmat(V.value(), tk, dv).transpose();
        RowMatrix dS = P.cwiseProduct(dP);
        const Eigen::VectorXd rowdot = dS.rowwise().sum();
        dS -= P.cwiseProduct(rowdot.replicate(1, static_cast<Eigen::Index>(tk)));
        dS *= inv_sqrt;
        if (Q.requires_grad()) mat(t.grad_buffer(Q), tq, dk).noalias() += dS * cmat(K.value(), tk, dk);
        if (K.requires_grad()) {
          mat(t.grad_buffer(K), tk, dk).noalias() += dS.transpose() * cmat(Q.value(), tq, dk);
        }
      });
}

Var topk_mask(Var x, int k) {
  require_rank("topk_mask", x, 2);
  const std::size_t n = x.shape()[0], c = x.shape()[1];
  if (k < 1 || static_cast<std::size_t>(k) > c) {
    throw UsageError("topk_mask: k must be in [1, " + std::to_string(c) + "]");
  }
  auto keep = std::make_shared<std::vector<char>>(n * c, 0);
  Buffer out(n * c, 0.0);
  std::unique_ptr<bool[]> row_keep(new bool[c]);
  const auto& xv = x.value();
  for (std::size_t i = 0; i < n; ++i) {
    select_topk(xv.data() + i * c, c, static_cast<std::size_t>(k), row_keep.get());
    for (std::size_t j = 0; j < c; ++j) {
      if (row_keep[j]) {
        (*keep)[i * c + j] = 1;
        out[i * c + j] = xv[i * c + j];
      }
    }
  }
  return x.tape().record("topk_mask", x.shape(), std::move(out), {x},
                         [x, keep](Tape& t, const Buffer& g) {
                           auto& gx = t.grad_buffer(x);
                           for (std::size_t i = 0; i < g.size(); ++i) {
                             if ((*keep)[i]) gx[i] += g[i];
                           }
                         });
}

namespace {

struct ConvGeometry {
  std::size_t cin, h, w, cout, kh, kw, ho, wo;
  int stride, pad;
};

// cols [(cin*kh*kw) x (ho*wo)]
void im2col(const Buffer& x, const ConvGeometry& g, RowMatrix& cols) {
  cols.setZero(static_cast<Eigen::Index>(g.cin * g.kh * g.kw), static_cast<Eigen::Index>(g.ho * g.wo));
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const auto row = static_cast<Eigen::Index>((c * g.kh + ki) * g.kw + kj);
        double* dst = cols.row(row).data();
        for (std::size_t oi = 0; oi < g.ho; ++oi) {
          const long ii = static_cast<long>(oi) * g.stride - g.pad + static_cast<long>(ki);
          if (ii < 0 || ii >= static_cast<long>(g.h)) continue;
          const double* src = x.data() + (c * g.h + static_cast<std::size_t>(ii)) * g.w;
          for (std::size_t oj = 0; oj < g.wo; ++oj) {
            const long jj = static_cast<long>(oj) * g.stride - g.pad + static_cast<long>(kj);
            if (jj < 0 || jj >= static_cast<long>(g.w)) continue;
            dst[oi * g.wo + oj] = src[jj];
          }
        }
      }
    }
  }
}

void col2im(const RowMatrix& cols, const ConvGeometry& g, Buffer& dx) {
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const auto row = static_cast<Eigen::Index>((c * g.kh + ki) * g.kw + kj);
        const double* src = cols.row(row).data();
        for (std::size_t oi = 0; oi < g.ho; ++oi) {
          const long ii = static_cast<long>(oi) * g.stride - g.pad + static_cast<long>(ki);
          if (ii < 0 || ii >= static_cast<long>(g.h)) continue;
          double* dst = dx.data() + (c * g.h + static_cast<std::size_t>(ii)) * g.w;
          for (std::size_t oj = 0; oj < g.wo; ++oj) {
            const long jj = static_cast<long>(oj) * g.stride - g.pad + static_cast<long>(kj);
            if (jj < 0 || jj >= static_cast<long>(g.w)) continue;
            dst[jj] += src[oi * g.wo + oj];
          }
        }
      }
    }
  }
}

// Unit-stride path without an im2col buffer. The input is zero-padded once
// into rows of Hp*Wp (+kw slack) per channel; the output is computed on the
// padded width, so every kernel tap is a contiguous shifted window of the
// padded input and each tap is one [cout x cin] GEMM.
Var conv2d_unit_stride(Var x, Var w, Var b, const ConvGeometry& g) {
  const std::size_t hp = g.h + 2 * static_cast<std::size_t>(g.pad);
  const std::size_t wp = g.w + 2 * static_cast<std::size_t>(g.pad);
  const std::size_t span = hp * wp + g.kw;
  const std::size_t len = g.ho * wp;
  const auto pad = static_cast<std::size_t>(g.pad);
  auto padded = std::make_shared<RowMatrix>(RowMatrix::Zero(static_cast<Eigen::Index>(g.cin), static_cast<Eigen::Index>(span)));
  const auto& xv = x.value();
  for (std::size_t c = 0; c < g.cin; ++c) {
    double* row = padded->row(static_cast<Eigen::Index>(c)).data();
    for (std::size_t i = 0; i < g.h; ++i) {
      std::copy_n(xv.data() + (c * g.h + i) * g.w, g.w, row + (i + pad) * wp + pad);
    }
  }
  const std::size_t taps = g.kh * g.kw;
  auto kernels = std::make_shared<std::vector<RowMatrix>>(taps);
  const auto& wv = w.value();
  for (std::size_t k = 0; k < taps; ++k) {
    RowMatrix& m = (*kernels)[k];
    m.resize(static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.cin));
    for (std::size_t o = 0; o < g.cout; ++o) {
      for (std::size_t c = 0; c < g.cin; ++c) m(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(c)) = wv[(o * g.cin + c) * taps + k];
    }
  }
  RowMatrix acc = RowMatrix::Zero(static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(len));
  for (std::size_t k = 0; k < taps; ++k) {
    const auto off = static_cast<Eigen::Index>((k / g.kw) * wp + k % g.kw);
    acc.noalias() += (*kernels)[k] * padded->middleCols(off, static_cast<Eigen::Index>(len));
  }
  Buffer out(g.cout * g.ho * g.wo);
  for (std::size_t o = 0; o < g.cout; ++o) {
    const double* src = acc.row(static_cast<Eigen::Index>(o)).data();
    const double bias = b.value()[o];
    for (std::size_t i = 0; i < g.ho; ++i) {
      double* dst = out.data() + (o * g.ho + i) * g.wo;
      for (std::size_t j = 0; j < g.wo; ++j) dst[j] = src[i * wp + j] + bias;
    }
  }
  return x.tape().record(
      "conv2d", {g.cout, g.ho, g.wo}, std::move(out), {x, w, b},
      [x, w, b, g, padded, kernels, hp, wp, span, len, pad, taps](Tape& t, const Buffer& gy) {
        RowMatrix gacc = RowMatrix::Zero(static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(len));
        for (std::size_t o = 0; o < g.cout; ++o) {
          double* dst = gacc.row(static_cast<Eigen::Index>(o)).data();
          for (std::size_t i = 0; i < g.ho; ++i) {
            std::copy_n(gy.data() + (o * g.ho + i) * g.wo, g.wo, dst + i * wp);
          }
        }
        if (b.requires_grad()) {
          auto& gb = t.grad_buffer(b);
          for (std::size_t o = 0; o < g.cout; ++o) gb[o] += gacc.row(static_cast<Eigen::Index>(o)).sum();
        }
        if (w.requires_grad()) {
          auto& gw = t.grad_buffer(w);
          for (std::size_t k = 0; k < taps; ++k) {
            const auto off = static_cast<Eigen::Index>((k / g.kw) * wp + k % g.kw);
            const RowMatrix dk = gacc * padded->middleCols(off, static_cast<Eigen::Index>(len)).transpose();
            for (std::size_t o = 0; o < g.cout; ++o) {
              for (std::size_t c = 0; c < g.cin; ++c) {
                gw[(o * g.cin + c) * taps + k] += dk(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(c));
              }
            }
          }
        }
        if (x.requires_grad()) {
          RowMatrix dp = RowMatrix::Zero(static_cast<Eigen::Index>(g.cin), static_cast<Eigen::Index>(span));
          for (std::size_t k = 0; k < taps; ++k) {
            const auto off = static_cast<Eigen::Index>((k / g.kw) * wp + k % g.kw);
            dp.middleCols(off, static_cast<Eigen::Index>(len)).noalias() += (*kernels)[k].transpose() * gacc;
          }
          auto& gx = t.grad_buffer(x);
          for (std::size_t c = 0; c < g.cin; ++c) {
            const double* row = dp.row(static_cast<Eigen::Index>(c)).data();
            for (std::size_t i = 0; i < g.h; ++i) {
              double* dst = gx.data() + (c * g.h + i) * g.w;
              const double* src = row + (i + pad) * wp + pad;
              for (std::size_t j = 0; j < g.w; ++j) dst[j] += src[j];
            }
          }
        }
        (void)hp;
      });
}

}  // namespace

Var conv2d(Var x, Var w, Var b, int stride, int padding) {
  require_rank("conv2d", x, 3);
  require_rank("conv2d", w, 4);
  if (stride < 1 || padding < 0) throw UsageError("conv2d: invalid stride/padding");
  ConvGeometry geo{};
  geo.cin = x.shape()[0];
  geo.h = x.shape()[1];
  geo.w = x.shape()[2];
  geo.cout = w.shape()[0];
  geo.kh = w.shape()[2];
  geo.kw = w.shape()[3];
  geo.stride = stride;
  geo.pad = padding;
  if (w.shape()[1] != geo.cin || b.size() != geo.cout) {
    throw ShapeError("conv2d: x " + shape_str(x.shape()) + ", w " + shape_str(w.shape()) + ", b " +
                     shape_str(b.shape()));
  }
  const long hp = static_cast<long>(geo.h) + 2 * padding - static_cast<long>(geo.kh);
  const long wp = static_cast<long>(geo.w) + 2 * padding - static_cast<long>(geo.kw);
  if (hp < 0 || wp < 0) throw ShapeError("conv2d: kernel larger than padded input");
  geo.ho = static_cast<std::size_t>(hp / stride + 1);
  geo.wo = static_cast<std::size_t>(wp / stride + 1);
  if (stride == 1) return conv2d_unit_stride(x, w, b, geo);

  auto cols = std::make_shared<RowMatrix>();
  im2col(x.value(), geo, *cols);
  const std::size_t kdim = geo.cin * geo.kh * geo.kw;
  const std::size_t spatial = geo.ho * geo.wo;
  Buffer out(geo.cout * spatial);
  auto y = mat(out, geo.cout, spatial);
  y.noalias() = cmat(w.value(), geo.cout, kdim) * (*cols);
  for (std::size_t o = 0; o < geo.cout; ++o) y.row(static_cast<Eigen::Index>(o)).array() += b.value()[o];

  return x.tape().record(
      "conv2d", {geo.cout, geo.ho, geo.wo}, std::move(out), {x, w, b},
      [x, w, b, geo, cols, kdim, spatial](Tape& t, const Buffer& g) {
        const auto gy = cmat(g, geo.cout, spatial);
        if (w.requires_grad()) {
          mat(t.grad_buffer(w), geo.cout, kdim).noalias() += gy * cols->transpose();
        }
        if (b.requires_grad()) {
          auto& gb = t.grad_buffer(b);
          for (std::size_t o = 0; o < geo.cout; ++o) gb[o] += gy.row(static_cast<Eigen::Index>(o)).sum();
        }
        if (x.requires_grad()) {
          const RowMatrix dcols = cmat(w.value(), geo.cout, kdim).transpose() * gy;
          col2im(dcols, geo, t.grad_buffer(x));
        }
      });
}

Var upsample2x(Var x) {
  require_rank("upsample2x", x, 3);
  const std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const std::size_t h2 = 2 * h, w2 = 2 * w;
  Buffer out(c * h2 * w2);
  const auto& xv = x.value();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < h2; ++i) {
      const double* src = xv.data() + (ch * h + i / 2) * w;
      double* dst = out.data() + (ch * h2 + i) * w2;
      for (std::size_t j = 0; j < w2; ++j) dst[j] = src[j / 2];
    }
  }
  return x.tape().record("upsample2x", {c, h2, w2}, std::move(out), {x},
                         [x, c, h, w, h2, w2](Tape& t, const Buffer& g) {
                           auto& gx = t.grad_buffer(x);
                           for (std::size_t ch = 0; ch < c; ++ch) {
                             for (std::size_t i = 0; i < h2; ++i) {
                               const double* src = g.data() + (ch * h2 + i) * w2;
                               double* dst = gx.data() + (ch * h + i / 2) * w;
                               for (std::size_t j = 0; j < w2; ++j) dst[j / 2] += src[j];
                             }
                           }
                         });
}

Var crop_cols(Var x, std::size_t n) {
  require_rank("crop_cols", x, 2);
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  if (n > c) throw ShapeError("crop_cols: " + std::to_string(n) + " > " + std::to_string(c));
  Buffer out(r * n);
  mat(out, r, n) = cmat(x.value(), r, c).leftCols(static_cast<Eigen::Index>(n));
  return x.tape().record("crop_cols", {r, n}, std::move(out), {x},
                         [x, r, c, n](Tape& t, const Buffer& g) {
                           mat(t.grad_buffer(x), r, c).leftCols(static_cast<Eigen::Index>(n)) +=
                               cmat(g, r, n);
                         });
}

Var pad_or_crop(Var x, std::size_t h, std::size_t w) {
  require_rank("pad_or_crop", x, 3);
  const std::size_t c = x.shape()[0], hi = x.shape()[1], wi = x.shape()[2];
  const std::size_t hc = std::min(h, hi), wc = std::min(w, wi);
  Buffer out(c * h * w, 0.0);
  const auto& xv = x.value();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < hc; ++i) {
      const double* src = xv.data() + (ch * hi + i) * wi;
      std::copy(src, src + wc, out.data() + (ch * h + i) * w);
    }
  }
  return x.tape().record("pad_or_crop", {c, h, w}, std::move(out), {x},
                         [x, c, h, w, hi, wi, hc, wc](Tape& t, const Buffer& g) {
                           auto& gx = t.grad_buffer(x);
                           for (std::size_t ch = 0; ch < c; ++ch) {
                             for (std::size_t i = 0; i < hc; ++i) {
                               const double* src = g.data() + (ch * h + i) * w;
                               double* dst = gx.data() + (ch * hi + i) * wi;
                               for (std::size_t j = 0; j < wc; ++j) dst[j] += src[j];
                             }
                           }
                         });
}

Var magnitude(Var re, Var im, double eps) {
  require_same("magnitude", re, im);
  const auto& rv = re.value();
  const auto& iv = im.value();
  Buffer out(rv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(rv[i] * rv[i] + iv[i] * iv[i]);
  auto mags = std::make_shared<Buffer>(out);
  return re.tape().record("magnitude", re.shape(), std::move(out), {re, im},
                          [re, im, mags, eps](Tape& t, const Buffer& g) {
                            const auto& rv = re.value();
                            const auto& iv = im.value();
                            Buffer* gr = re.requires_grad() ? &t.grad_buffer(re) : nullptr;
                            Buffer* gi = im.requires_grad() ? &t.grad_buffer(im) : nullptr;
                            for (std::size_t i = 0; i < g.size(); ++i) {
                              const double d = g[i] / std::max((*mags)[i], eps);
                              if (gr) (*gr)[i] += d * rv[i];
                              if (gi) (*gi)[i] += d * iv[i];
                            }
                          });
}

Var mse(Var a, Var b, const Tensor* weights) {
  require_same("mse", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (weights != nullptr && weights->values.size() != av.size()) {
    throw ShapeError("mse: weight shape " + shape_str(weights->shape) + " vs " + shape_str(a.shape()));
  }
  double wsum = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double w = weights ? weights->values[i] : 1.0;
    const double d = av[i] - bv[i];
    acc += w * d * d;
    wsum += w;
  }
  if (!(wsum > 0.0)) throw DataError("mse: no weighted entries");
  Buffer wcopy = weights ? weights->values : Buffer{};
  return a.tape().record(
      "mse", {1}, {acc / wsum}, {a, b},
      [a, b, wsum, wcopy = std::move(wcopy)](Tape& t, const Buffer& g) {
        const auto& av = a.value();
        const auto& bv = b.value();
        const double s = 2.0 * g[0] / wsum;
        Buffer* ga = a.requires_grad() ? &t.grad_buffer(a) : nullptr;
        Buffer* gb = b.requires_grad() ? &t.grad_buffer(b) : nullptr;
        for (std::size_t i = 0; i < av.size(); ++i) {
          const double w = wcopy.empty() ? 1.0 : wcopy[i];
          const double d = s * w * (av[i] - bv[i]);
          if (ga) (*ga)[i] += d;
          if (gb) (*gb)[i] -= d;
        }
      });
}

Var mae(Var a, Var b) {
  require_same("mae", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) acc += std::abs(av[i] - bv[i]);
  const double n = static_cast<double>(av.size());
  return a.tape().record("mae", {1}, {acc / n}, {a, b},
                         [a, b, n](Tape& t, const Buffer& g) {
                           const auto& av = a.value();
                           const auto& bv = b.value();
                           Buffer* ga = a.requires_grad() ? &t.grad_buffer(a) : nullptr;
                           Buffer* gb = b.requires_grad() ? &t.grad_buffer(b) : nullptr;
                           for (std::size_t i = 0; i < av.size(); ++i) {
                             const double d = av[i] - bv[i];
                             const double s = g[0] / n * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
                             if (ga) (*ga)[i] += s;
                             if (gb) (*gb)[i] -= s;
                           }
                         });
}

}  // namespace avseci::nn
