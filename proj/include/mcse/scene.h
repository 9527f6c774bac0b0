#ifndef MCSE_SCENE_H_
#define MCSE_SCENE_H_

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "mcse/signal.h"

namespace mcse {

enum class NoiseKind { kWhite, kDiffuse, kBabble };

NoiseKind parse_noise_kind(std::string_view name);
const char* noise_kind_name(NoiseKind kind);

struct SceneConfig {
  std::uint64_t seed = 0;
  int channels = 6;
  // Per-channel delay of the speech source in samples (may be fractional).
  // Empty selects default_delays(seed, channels).
  std::vector<double> delays;
  double snr_db = 0.0;  // +inf gives a noise-free scene
  double duration_s = 5.0;
  NoiseKind noise = NoiseKind::kDiffuse;
  int sample_rate = 16000;
  double tau_max = 16.0;
};

// noisy[c] = speech_image[c] + noise[c], evaluated in float exactly as
// stored, so the components reconstruct the mixture bitwise.
struct Scene {
  Waveform clean;         // speech image at channel 0 (single channel)
  Waveform speech_image;  // delayed source per channel
  Waveform noise;         // scaled noise per channel
  Waveform noisy;
  std::vector<double> delays;
  double snr_db = 0.0;
  NoiseKind noise_kind = NoiseKind::kDiffuse;
  std::uint64_t seed = 0;
};

// Channel 0 at zero delay, others on a half-sample grid within +-6 samples.
std::vector<double> default_delays(std::uint64_t seed, int channels);

Scene synth_scene(const SceneConfig& cfg);

// Deterministic speech-like source: voiced syllables with a gliding pitch
// and formant envelope, fricative bursts, and silent gaps.
std::vector<float> synth_speech(std::uint64_t seed, std::size_t length,
                                int sample_rate);

// Close-talking reference: clean source plus independent white noise at
// `snr_db` below it.
Waveform close_mic(const Scene& scene, std::uint64_t seed, double snr_db = 20.0);

// Band-limited (windowed-sinc) delay of `x` by `delay` samples; integer
// delays are exact shifts. Samples outside `x` are treated as zero.
std::vector<float> fractional_delay(std::span<const float> x, double delay);

}  // namespace mcse

#endif  // MCSE_SCENE_H_
