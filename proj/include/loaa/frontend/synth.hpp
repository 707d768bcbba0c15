// Copyright 2026 The LoAA Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace loaa {

enum class PatternKind { steady_tone, up_chirp, down_chirp, pulse_train, band_noise };

std::string_view pattern_name(PatternKind kind);
PatternKind parse_pattern(std::string_view text);

struct SynthSpec {
  PatternKind kind = PatternKind::steady_tone;
  // Tone and carrier frequency; chirp start; lower band edge.
  double freq = 440.0;
  // Chirp end frequency; upper band edge. Unused by tones and pulses.
  double freq_end = 0.0;
  // Bursts per second for pulse trains.
  double pulse_rate = 8.0;
  // Fraction of each pulse period that is on.
  double duty = 0.25;
  double duration = 1.0;
  double amplitude = 0.8;
  // Standard deviation of additive white noise.
  double noise = 0.0;
  std::uint32_t sample_rate = 16000;
  std::uint64_t seed = 0;

  // Throws ValidationError on unusable parameters.
  void validate() const;
  std::size_t n_samples() const;
};

struct WaveBuffer {
  std::vector<float> samples;
  std::uint32_t sample_rate = 16000;
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

WaveBuffer synth_signal(const SynthSpec& spec);

}  // namespace loaa
