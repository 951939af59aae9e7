// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "nn/tape.hpp"

#include <cmath>

#include "common/error.hpp"

namespace avseci::nn {

const Shape& Var::shape() const { return tape_->shape(id_); }
const Buffer& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

double Var::item() const {
  const auto& v = value();
  if (v.size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return v[0];
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Tensor t) {
  Node n;
  n.op = "constant";
  n.shape = std::move(t.shape);
  n.value = std::move(t.values);
  return push(std::move(n));
}

Var Tape::leaf(Tensor t) {
  Node n;
  n.op = "leaf";
  n.shape = std::move(t.shape);
  n.value = std::move(t.values);
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::param(Parameter& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
  Node n;
  n.op = "param";
  n.shape = p.value.shape;
  n.value = p.value.values;
  n.requires_grad = !p.frozen;
  n.param = &p;
  Var v = push(std::move(n));
  param_ids_[&p] = v.id();
  return v;
}

Var Tape::record(const char* op, Shape shape, Buffer value,
                 std::initializer_list<Var> inputs, BackwardFn fn) {
  if (value.size() != numel(shape)) {
    throw ShapeError(std::string(op) + ": value count does not match shape " + shape_str(shape));
  }
  for (std::size_t i = 0; i < value.size(); ++i) {
    if (!std::isfinite(value[i])) {
      throw NumericError(std::string(op) + ": non-finite value at index " + std::to_string(i) +
                         " of " + shape_str(shape));
    }
  }
  Node n;
  n.op = op;
  n.shape = std::move(shape);
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw Error(ErrorKind::kInternal, std::string(op) + ": input from another tape");
    n.requires_grad = n.requires_grad || requires_grad(in.id_);
  }
  if (n.requires_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

Buffer& Tape::grad_buffer(Var v) {
  Node& n = nodes_[static_cast<std::size_t>(v.id_)];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

Buffer Tape::grad(Var v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id_)];
  if (n.grad.empty()) return Buffer(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var scalar) {
  if (scalar.tape_ != this) throw Error(ErrorKind::kInternal, "backward: foreign variable");
  Node& root = nodes_[static_cast<std::size_t>(scalar.id_)];
  if (root.value.size() != 1) throw ShapeError("backward: loss must be a scalar");
  if (!root.requires_grad) return;
  for (Node& n : nodes_) n.grad.clear();
  root.grad.assign(1, 1.0);
  for (auto i = static_cast<std::ptrdiff_t>(scalar.id_); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, n.grad);
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr || !n.requires_grad || n.grad.empty()) continue;
    auto& dst = n.param->grad;
    if (dst.size() != n.grad.size()) dst.assign(n.grad.size(), 0.0);
    for (std::size_t j = 0; j < dst.size(); ++j) {
      if (!std::isfinite(n.grad[j])) {
        throw NumericError("backward: non-finite gradient for parameter " + n.param->name);
      }
      dst[j] += n.grad[j];
    }
  }
}

}  // namespace avseci::nn
