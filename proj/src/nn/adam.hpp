// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <vector>

#include "nn/tensor.hpp"

namespace avseci::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Frozen parameters are
// skipped.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg);

  // Applies one update from Parameter::grad, then zeroes the gradients.
  // A non-finite gradient aborts with the parameter name.
  void step();

  long steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<Parameter*>& params() const { return params_; }
  const std::vector<Buffer>& first_moments() const { return m_; }
  const std::vector<Buffer>& second_moments() const { return v_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<Buffer> m_, v_;
  long step_ = 0;
};

}  // namespace avseci::nn
