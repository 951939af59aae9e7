// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include "nn/tape.hpp"

namespace avseci::training {

struct LossWeights {
  double alpha = 1.0;
  double beta = 0.5;
};

void validate(const LossWeights& w);

// Mean squared error over all entries; `valid` optionally masks padded
// entries out of the mean.
nn::Var spec_loss(nn::Var enhanced_mag, nn::Var clean_mag, const nn::Tensor* valid = nullptr);
nn::Var elec_loss(nn::Var enhanced, nn::Var clean, const nn::Tensor* valid = nullptr);
nn::Var total_loss(nn::Var spec, nn::Var elec, const LossWeights& w);

double spec_loss(const Eigen::MatrixXd& enhanced_mag, const Eigen::MatrixXd& clean_mag);
double elec_loss(const Eigen::MatrixXd& enhanced, const Eigen::MatrixXd& clean);
double total_loss(double spec, double elec, const LossWeights& w);

}  // namespace avseci::training
