// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "loaa/frontend/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "loaa/core/error.hpp"
#include "loaa/core/rng.hpp"

namespace loaa {

namespace {

constexpr std::array<std::string_view, 5> kPatternNames = {"steady-tone", "up-chirp", "down-chirp", "pulse-train",
                                                           "band-noise"};
constexpr std::size_t kNoiseComponents = 48;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError("synth: " + msg);
}

}  // namespace

std::string_view pattern_name(PatternKind kind) { return kPatternNames[static_cast<std::size_t>(kind)]; }

PatternKind parse_pattern(std::string_view text) {
  for (std::size_t i = 0; i < kPatternNames.size(); ++i)
    if (kPatternNames[i] == text) return static_cast<PatternKind>(i);
  throw ValidationError("synth: unknown pattern kind '" + std::string(text) + "'");
}

void SynthSpec::validate() const {
  const double nyquist = sample_rate / 2.0;
  require(sample_rate > 0, "sample rate must be positive");
  require(duration > 0.0 && std::isfinite(duration), "duration must be positive");
  require(amplitude >= 0.0 && amplitude <= 1.0, "amplitude must lie in [0, 1]");
  require(noise >= 0.0 && std::isfinite(noise), "noise must be non-negative");
  require(freq > 0.0, "frequency must be positive");
  require(freq < nyquist, "frequency " + std::to_string(freq) + " Hz must be below Nyquist " +
                              std::to_string(nyquist) + " Hz");
  const bool uses_end = kind == PatternKind::up_chirp || kind == PatternKind::down_chirp ||
                        kind == PatternKind::band_noise;
  if (uses_end) {
    require(freq_end > 0.0, "end frequency must be positive");
    require(freq_end < nyquist, "end frequency " + std::to_string(freq_end) + " Hz must be below Nyquist " +
                                    std::to_string(nyquist) + " Hz");
  }
  if (kind == PatternKind::up_chirp) require(freq_end > freq, "up-chirp must end above its start");
  if (kind == PatternKind::down_chirp) require(freq_end < freq, "down-chirp must end below its start");
  if (kind == PatternKind::band_noise) require(freq_end > freq, "band upper edge must exceed lower edge");
  if (kind == PatternKind::pulse_train) {
    require(pulse_rate > 0.0 && pulse_rate < nyquist, "pulse rate must lie in (0, Nyquist)");
    require(duty > 0.0 && duty < 1.0, "duty must lie in (0, 1)");
  }
  require(n_samples() > 0, "clip is shorter than one sample");
}

std::size_t SynthSpec::n_samples() const { return static_cast<std::size_t>(std::llround(duration * sample_rate)); }

WaveBuffer synth_signal(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_samples();
  const double sr = spec.sample_rate;
  WaveBuffer w;
  w.sample_rate = spec.sample_rate;
  w.samples.resize(n);
  std::vector<double> x(n, 0.0);

  switch (spec.kind) {
    case PatternKind::steady_tone:
      for (std::size_t i = 0; i < n; ++i) x[i] = spec.amplitude * std::sin(kTwoPi * spec.freq * (i / sr));
      break;
    case PatternKind::up_chirp:
    case PatternKind::down_chirp: {
      // Linear sweep; the phase is the integral of the instantaneous frequency.
      const double sweep = (spec.freq_end - spec.freq) / spec.duration;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = i / sr;
        x[i] = spec.amplitude * std::sin(kTwoPi * (spec.freq * t + 0.5 * sweep * t * t));
      }
      break;
    }
    case PatternKind::pulse_train: {
      const double period = 1.0 / spec.pulse_rate;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = i / sr;
        const double phase = std::fmod(t, period) / period;
        if (phase < spec.duty) x[i] = spec.amplitude * std::sin(kTwoPi * spec.freq * t);
      }
      break;
    }
    case PatternKind::band_noise: {
      Rng rng(derive_seed(spec.seed, 1));
      std::vector<double> f(kNoiseComponents), ph(kNoiseComponents);
      for (std::size_t k = 0; k < kNoiseComponents; ++k) {
        f[k] = rng.uniform(spec.freq, spec.freq_end);
        ph[k] = rng.uniform(0.0, kTwoPi);
      }
      double peak = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = i / sr;
        double v = 0.0;
        for (std::size_t k = 0; k < kNoiseComponents; ++k) v += std::sin(kTwoPi * f[k] * t + ph[k]);
        x[i] = v;
        peak = std::max(peak, std::abs(v));
      }
      if (peak > 0.0)
        for (double& v : x) v *= spec.amplitude / peak;
      break;
    }
  }

  if (spec.noise > 0.0) {
    Rng rng(derive_seed(spec.seed, 2));
    for (double& v : x) v += spec.noise * rng.normal();
  }
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = static_cast<float>(std::clamp(x[i], -1.0, 1.0));
  return w;
}

}  // namespace loaa
