// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "signal/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "common/error.hpp"

namespace avseci::signal {

namespace {

// FFTW planning is not thread-safe. Buffers come from fftw_malloc so the
// chosen codelets do not depend on caller alignment.
std::mutex& plan_mutex() {
  static std::mutex mu;
  return mu;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (ptr == nullptr) throw Error(ErrorKind::kInternal, "fftw_malloc failed");
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

}  // namespace

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t bins = n / 2 + 1;
  FftwBuffer in(sizeof(double) * n), out(sizeof(fftw_complex) * bins);
  auto* src = static_cast<double*>(in.ptr);
  auto* dst = static_cast<fftw_complex*>(out.ptr);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), src, dst, FFTW_ESTIMATE);
  }
  std::copy(x.begin(), x.end(), src);
  fftw_execute(plan);
  std::vector<std::complex<double>> result(bins);
  for (std::size_t k = 0; k < bins; ++k) result[k] = {dst[k][0], dst[k][1]};
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  return result;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n) {
  if (n == 0) return {};
  const std::size_t bins = n / 2 + 1;
  if (spec.size() != bins) throw ShapeError("irfft: bin count does not match length");
  FftwBuffer in(sizeof(fftw_complex) * bins), out(sizeof(double) * n);
  auto* src = static_cast<fftw_complex*>(in.ptr);
  auto* dst = static_cast<double*>(out.ptr);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), src, dst, FFTW_ESTIMATE);
  }
  for (std::size_t k = 0; k < bins; ++k) {
    src[k][0] = spec[k].real();
    src[k][1] = spec[k].imag();
  }
  fftw_execute(plan);
  std::vector<double> result(dst, dst + n);
  for (double& v : result) v /= static_cast<double>(n);
  {
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(plan);
  }
  return result;
}

}  // namespace avseci::signal
