// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nn/tensor.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace avseci::nn {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(numel(shape), fill) {}

Tensor::Tensor(Shape s, const std::vector<double>& v) : Tensor(std::move(s), Buffer(v.begin(), v.end())) {}

Tensor::Tensor(Shape s, std::initializer_list<double> v) : Tensor(std::move(s), Buffer(v)) {}

Tensor::Tensor(Shape s, Buffer v) : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != numel(shape)) {
    throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " +
                     shape_str(shape));
  }
}

Parameter::Parameter(std::string n, Shape shape)
    : name(std::move(n)), value(std::move(shape)), grad(value.size(), 0.0) {}

void Parameter::zero_grad() {
  grad.assign(value.size(), 0.0);
}

}  // namespace avseci::nn
