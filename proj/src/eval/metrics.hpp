// Copyright 2026 The avseci Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>

#include <vector>

#include "signal/waveform.hpp"

namespace avseci::eval {

// STOI front-end constants.
inline constexpr int kStoiRate = 10000;
inline constexpr int kStoiFrame = 256;
inline constexpr int kStoiFft = 512;
inline constexpr int kStoiBands = 15;
inline constexpr double kStoiMinFreq = 150.0;
inline constexpr int kStoiSegment = 30;
inline constexpr double kStoiBeta = -15.0;
inline constexpr double kStoiDynRange = 40.0;

// NCM constants.
inline constexpr int kNcmBands = 20;
inline constexpr double kNcmLowHz = 150.0;
inline constexpr double kNcmHighHz = 8000.0;
inline constexpr double kNcmEnvCutoffHz = 25.0;
inline constexpr int kNcmEnvRate = 100;

// Both inputs are trimmed to the shorter length. All-silent input, or too
// little speech for one 30-frame segment, raises UndefinedMetricError.
double stoi(const signal::Waveform& clean, const signal::Waveform& proc);
double estoi(const signal::Waveform& clean, const signal::Waveform& proc);
double ncm(const signal::Waveform& clean, const signal::Waveform& proc);

struct Scores {
  double stoi = 0.0;
  double estoi = 0.0;
  double ncm = 0.0;
};

// Shares the STOI front-end between stoi and estoi.
Scores all_metrics(const signal::Waveform& clean, const signal::Waveform& proc);

namespace detail {

// One-third-octave band matrix [bands x (nfft/2 + 1)].
Eigen::MatrixXd third_octave_matrix(int fs, int nfft, int bands, double min_freq);

// Drops frames more than dyn_range dB below the loudest clean frame and
// overlap-adds the survivors.
void remove_silent_frames(std::vector<double>& x, std::vector<double>& y, double dyn_range, int frame, int hop);

// Band envelopes [bands x frames] of a 10 kHz signal.
Eigen::MatrixXd band_envelopes(const std::vector<double>& x, const Eigen::MatrixXd& obm);

// ERB-spaced centre frequencies, edges spanning [lo, hi].
std::vector<double> erb_centres(int bands, double lo, double hi);

}  // namespace detail

}  // namespace avseci::eval
