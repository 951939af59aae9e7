// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <functional>
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <vector>

#include "nn/tensor.hpp"

namespace avseci::nn {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;

  const Shape& shape() const;
  const Buffer& value() const;
  bool requires_grad() const;
  double item() const;
  std::size_t size() const { return value().size(); }
  int id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode recorder. Ops append records in evaluation order; backward()
// replays them in exact reverse order, then adds each parameter leaf's
// gradient into Parameter::grad once.
class Tape {
 public:
  // Receives the gradient of the op output and accumulates into inputs.
  using BackwardFn = std::function<void(Tape&, const Buffer& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor t);
  Var leaf(Tensor t);  // differentiable input
  // One leaf per parameter per tape; reuse accumulates into the same node.
  Var param(Parameter& p);

  // Records an op result. The node requires grad iff any input does; `fn`
  // is dropped otherwise. Values must be finite.
  Var record(const char* op, Shape shape, Buffer value,
             std::initializer_list<Var> inputs, BackwardFn fn);

  void backward(Var scalar);

  const Shape& shape(int id) const { return nodes_[static_cast<std::size_t>(id)].shape; }
  const Buffer& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  // Gradient of a node after backward(); zeros when nothing flowed into it.
  Buffer grad(Var v) const;

  // Accumulator for an input during backward; allocated on first use.
  Buffer& grad_buffer(Var v);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    const char* op = "";
    Shape shape;
    Buffer value;
    Buffer grad;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, int> param_ids_;
};

}  // namespace avseci::nn
