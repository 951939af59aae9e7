// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <vector>

namespace avseci::signal {

// Real FFT of arbitrary length via FFTW; returns n/2 + 1 bins.
std::vector<std::complex<double>> rfft(const std::vector<double>& x);

// Inverse of rfft for a signal of length n (scaled so irfft(rfft(x)) == x).
std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n);

}  // namespace avseci::signal
