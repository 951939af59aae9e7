// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nn/adam.hpp"

#include <cmath>
#include <string>

#include "common/error.hpp"

namespace avseci::nn {

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.size(), 0.0);
    v_.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::step() {
  for (Parameter* p : params_) {
    if (p->frozen) continue;
    if (p->grad.size() != p->value.size()) p->grad.assign(p->value.size(), 0.0);
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      if (!std::isfinite(p->grad[i])) {
        throw NumericError("adam: non-finite gradient in " + p->name + " at index " +
                           std::to_string(i) + " (step " + std::to_string(step_ + 1) + ")");
      }
    }
  }
  ++step_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter* p = params_[k];
    if (p->frozen) continue;
    auto& m = m_[k];
    auto& v = v_[k];
    auto& w = p->value.values;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = p->grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p->zero_grad();
  }
}

}  // namespace avseci::nn
