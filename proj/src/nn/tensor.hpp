// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <string>
#include <vector>

namespace avseci::nn {

// Cache-line aligned storage. Eigen peels unaligned heads off vectorized
// reductions, so buffer alignment must not vary between runs or the
// summation order (and the last bits of every result) would.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major buffer.
struct Tensor {
  Shape shape;
  Buffer values;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, Buffer v);
  Tensor(Shape s, const std::vector<double>& v);
  Tensor(Shape s, std::initializer_list<double> v);

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

// Named trainable tensor with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Buffer grad;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Shape shape);
  void zero_grad();
};

}  // namespace avseci::nn
