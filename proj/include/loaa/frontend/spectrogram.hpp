// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "loaa/core/tensor.hpp"
#include "loaa/frontend/synth.hpp"

namespace loaa {

inline constexpr double kLogFloor = 1e-10;

struct StftConfig {
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  // Pad or truncate to this many frames; 0 keeps the natural count.
  std::size_t target_frames = 0;
};

struct StftFrames {
  std::size_t n_frames = 0;
  std::size_t n_fft = 0;
  std::size_t frame_length = 0;
  std::size_t frame_shift = 0;
  // Frames that came from the waveform; the rest are zero padding.
  std::size_t natural_frames = 0;
  // Row-major [n_frames x (n_fft/2 + 1)].
  std::vector<std::complex<double>> bins;
  std::size_t n_bins() const { return n_fft / 2 + 1; }
  const std::complex<double>* frame(std::size_t t) const { return bins.data() + t * n_bins(); }
};

// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

StftFrames stft(const WaveBuffer& w, const StftConfig& cfg = {});

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// [n_mels x n_bins] triangular filters with unit peaks, centers uniform on
// the mel scale between f_min and f_max.
Tensor<double> mel_filterbank(std::size_t n_bins, std::uint32_t sample_rate, std::size_t n_mels = 128,
                              double f_min = 0.0, double f_max = 8000.0);

struct MelSpectrogram {
  // [n_mels x n_frames], frequency rows and time columns.
  Tensor<float> values;
  // Value a silent frame takes in this spectrogram's scale.
  float floor_value = 0.0f;
  std::size_t n_mels() const { return values.dim(0); }
  std::size_t n_frames() const { return values.dim(1); }
};

// Log mel energies log(max(fb * |X|^2, floor)), optionally normalized to
// mean 0 and standard deviation 0.5 per utterance.
MelSpectrogram log_mel(const StftFrames& frames, const Tensor<double>& filterbank, bool normalize = true);

struct FrontendConfig {
  StftConfig stft{};
  std::size_t n_mels = 128;
  double f_min = 0.0;
  double f_max = 8000.0;
  bool normalize = true;
};

MelSpectrogram compute_log_mel(const WaveBuffer& w, const FrontendConfig& cfg);

}  // namespace loaa
