// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/frontend/spectrogram.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "loaa/core/error.hpp"
#include "loaa/frontend/fft.hpp"

namespace loaa {

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

StftFrames stft(const WaveBuffer& w, const StftConfig& cfg) {
  if (w.samples.empty()) throw ValidationError("stft: empty waveform");
  if (w.sample_rate == 0) throw ValidationError("stft: sample rate must be positive");
  const auto samples_for = [&](double ms) { return static_cast<std::size_t>(std::llround(ms * w.sample_rate / 1000.0)); };
  StftFrames out;
  out.frame_length = samples_for(cfg.frame_length_ms);
  out.frame_shift = samples_for(cfg.frame_shift_ms);
  if (out.frame_length == 0 || out.frame_shift == 0) throw ValidationError("stft: frame length and shift must be positive");
  if (w.samples.size() < out.frame_length) {
    throw ValidationError("stft: waveform of " + std::to_string(w.samples.size()) + " samples is shorter than one " +
                          std::to_string(out.frame_length) + "-sample frame");
  }
  out.n_fft = next_power_of_two(out.frame_length);
  const std::size_t natural = 1 + (w.samples.size() - out.frame_length) / out.frame_shift;
  out.n_frames = cfg.target_frames ? cfg.target_frames : natural;
  out.natural_frames = std::min(natural, out.n_frames);
  const std::size_t nb = out.n_bins();
  out.bins.assign(out.n_frames * nb, {0.0, 0.0});

  const auto window = hann_window(out.frame_length);
  std::vector<std::complex<double>> buf(out.n_fft);
  for (std::size_t t = 0; t < out.natural_frames; ++t) {
    std::fill(buf.begin(), buf.end(), std::complex<double>{});
    const float* src = w.samples.data() + t * out.frame_shift;
    for (std::size_t i = 0; i < out.frame_length; ++i) buf[i] = src[i] * window[i];
    fft_inplace(buf);
    std::copy(buf.begin(), buf.begin() + static_cast<long>(nb), out.bins.begin() + static_cast<long>(t * nb));
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Tensor<double> mel_filterbank(std::size_t n_bins, std::uint32_t sample_rate, std::size_t n_mels, double f_min,
                              double f_max) {
  const double nyquist = sample_rate / 2.0;
  if (n_mels < 2) throw ValidationError("mel_filterbank: need at least 2 filters");
  if (n_bins < 2) throw ValidationError("mel_filterbank: need at least 2 FFT bins");
  if (f_max > nyquist) {
    throw ValidationError("mel_filterbank: f_max " + std::to_string(f_max) + " Hz exceeds Nyquist " +
                          std::to_string(nyquist) + " Hz");
  }
  if (f_min < 0.0 || f_min >= f_max) throw ValidationError("mel_filterbank: need 0 <= f_min < f_max");

  const double m_lo = hz_to_mel(f_min), m_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  const double bin_hz = nyquist / static_cast<double>(n_bins - 1);
  Tensor<double> fb({n_mels, n_bins});
  auto v = fb.mutable_values();
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double wgt = 0.0;
      if (f > lo && f <= mid) wgt = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) wgt = (hi - f) / (hi - mid);
      v[m * n_bins + k] = wgt;
    }
  }
  return fb;
}

MelSpectrogram log_mel(const StftFrames& frames, const Tensor<double>& fb, bool normalize) {
  const std::size_t nb = frames.n_bins();
  if (fb.rank() != 2 || fb.dim(1) != nb) {
    throw DimensionError("log_mel: filterbank " + shape_str(fb.shape()) + " vs " + std::to_string(nb) + " bins");
  }
  const std::size_t n_mels = fb.dim(0), T = frames.n_frames;
  std::vector<double> out(n_mels * T);
  std::vector<double> power(nb);
  const auto fbv = fb.values();
  for (std::size_t t = 0; t < T; ++t) {
    const auto* fr = frames.frame(t);
    for (std::size_t k = 0; k < nb; ++k) power[k] = std::norm(fr[k]);
    for (std::size_t m = 0; m < n_mels; ++m) {
      double e = 0.0;
      const double* row = fbv.data() + m * nb;
      for (std::size_t k = 0; k < nb; ++k) e += row[k] * power[k];
      out[m * T + t] = std::log(std::max(e, kLogFloor));
    }
  }
  double floor_value = std::log(kLogFloor);
  if (normalize) {
    double mean = 0.0;
    for (double x : out) mean += x;
    mean /= static_cast<double>(out.size());
    double var = 0.0;
    for (double x : out) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(out.size()));
    // A constant spectrogram has sd at rounding level; it maps to zeros.
    const double gain = sd > 1e-9 * std::max(1.0, std::abs(mean)) ? 0.5 / sd : 0.0;
    for (double& x : out) x = (x - mean) * gain;
    floor_value = (floor_value - mean) * gain;
  }
  MelSpectrogram mel;
  mel.values = Tensor<float>({n_mels, T});
  auto mv = mel.values.mutable_values();
  for (std::size_t i = 0; i < out.size(); ++i) mv[i] = static_cast<float>(out[i]);
  mel.floor_value = static_cast<float>(floor_value);
  return mel;
}

MelSpectrogram compute_log_mel(const WaveBuffer& w, const FrontendConfig& cfg) {
  auto frames = stft(w, cfg.stft);
  auto fb = mel_filterbank(frames.n_bins(), w.sample_rate, cfg.n_mels, cfg.f_min, cfg.f_max);
  return log_mel(frames, fb, cfg.normalize);
}

}  // namespace loaa
