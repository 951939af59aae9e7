// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "training/losses.hpp"

#include <cmath>
#include <string>

#include "common/error.hpp"
#include "nn/ops.hpp"

namespace avseci::training {

void validate(const LossWeights& w) {
  if (!(w.alpha >= 0.0) || !(w.beta >= 0.0) || !std::isfinite(w.alpha) || !std::isfinite(w.beta)) {
    throw UsageError("loss weights must be finite and non-negative");
  }
  if (w.alpha == 0.0 && w.beta == 0.0) throw UsageError("alpha and beta cannot both be zero");
}

nn::Var spec_loss(nn::Var enhanced_mag, nn::Var clean_mag, const nn::Tensor* valid) {
  return nn::mse(enhanced_mag, clean_mag, valid);
}

nn::Var elec_loss(nn::Var enhanced, nn::Var clean, const nn::Tensor* valid) {
  return nn::mse(enhanced, clean, valid);
}

nn::Var total_loss(nn::Var spec, nn::Var elec, const LossWeights& w) {
  return nn::add(nn::scale(spec, w.alpha), nn::scale(elec, w.beta));
}

namespace {

double matrix_mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (a.size() == 0) throw DataError(std::string(what) + ": empty input");
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace

double spec_loss(const Eigen::MatrixXd& enhanced_mag, const Eigen::MatrixXd& clean_mag) {
  return matrix_mse(enhanced_mag, clean_mag, "spec_loss");
}

double elec_loss(const Eigen::MatrixXd& enhanced, const Eigen::MatrixXd& clean) {
  return matrix_mse(enhanced, clean, "elec_loss");
}

double total_loss(double spec, double elec, const LossWeights& w) { return w.alpha * spec + w.beta * elec; }

}  // namespace avseci::training
