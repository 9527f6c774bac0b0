#include "mcse/scene.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "mcse/error.h"

namespace mcse {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kSincHalfLength = 32;
// Extra source samples on each side so delayed images have no edge zeros.
constexpr std::size_t kMargin = 64;

// Portable generator: standardized engine plus explicit transforms.
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Seeds for independent streams derived from one scene seed.
std::uint64_t substream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double raised_cosine_envelope(std::size_t n, std::size_t length,
                              std::size_t ramp) {
  ramp = std::min(ramp, length / 2);
  if (ramp == 0) return 1.0;
  if (n < ramp) return 0.5 - 0.5 * std::cos(kPi * n / ramp);
  if (n + ramp >= length) {
    return 0.5 - 0.5 * std::cos(kPi * (length - 1 - n) / ramp);
  }
  return 1.0;
}

void add_voiced(std::vector<double>& out, std::size_t start, std::size_t len,
                int rate, SceneRng& rng) {
  const double f0_start = rng.uniform(100.0, 220.0);
  const double f0_end = f0_start * rng.uniform(0.8, 1.2);
  const double formants[3] = {rng.uniform(300.0, 900.0),
                              rng.uniform(900.0, 2500.0),
                              rng.uniform(2300.0, 3300.0)};
  const double widths[3] = {rng.uniform(60.0, 120.0), rng.uniform(80.0, 150.0),
                            rng.uniform(100.0, 200.0)};
  const double gains[3] = {1.0, rng.uniform(0.3, 0.8), rng.uniform(0.1, 0.4)};
  const double level = std::pow(10.0, rng.uniform(-6.0, 6.0) / 20.0);
  const std::size_t ramp = static_cast<std::size_t>(0.02 * rate);

  const int max_harmonic =
      static_cast<int>(std::min(7000.0, 0.45 * rate) / std::min(f0_start, f0_end));
  std::vector<double> amp(max_harmonic + 1, 0.0);
  double phase = rng.uniform(0.0, 2.0 * kPi);
  for (std::size_t n = 0; n < len && start + n < out.size(); ++n) {
    const double progress = static_cast<double>(n) / len;
    const double f0 = f0_start + (f0_end - f0_start) * progress;
    phase += 2.0 * kPi * f0 / rate;
    double v = 0.0;
    for (int k = 1; k <= max_harmonic; ++k) {
      const double fk = k * f0;
      if (fk >= 0.45 * rate) break;
      double env = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double d = (fk - formants[i]) / widths[i];
        env += gains[i] / (1.0 + d * d);
      }
      v += env * std::sin(k * phase);
    }
    out[start + n] += level * raised_cosine_envelope(n, len, ramp) * v;
  }
}

void add_fricative(std::vector<double>& out, std::size_t start,
                   std::size_t len, int rate, SceneRng& rng) {
  const double level = 0.15 * std::pow(10.0, rng.uniform(-6.0, 3.0) / 20.0);
  const std::size_t ramp = static_cast<std::size_t>(0.01 * rate);
  double prev = 0.0;
  for (std::size_t n = 0; n < len && start + n < out.size(); ++n) {
    const double x = rng.gaussian();
    out[start + n] += level * raised_cosine_envelope(n, len, ramp) * (x - prev);
    prev = x;
  }
}

std::vector<double> white(std::size_t length, SceneRng& rng) {
  std::vector<double> x(length);
  for (double& v : x) v = rng.gaussian();
  return x;
}

// Common coloring for the diffuse field: gentle low-pass tilt.
std::vector<double> shaped(std::size_t length, SceneRng& rng) {
  std::vector<double> x = white(length, rng);
  double state = 0.0;
  for (double& v : x) {
    state = 0.6 * state + v;
    v = state;
  }
  return x;
}

struct BabbleStream {
  double center;
  double bandwidth;
  double mod_rate;
  double mod_phase;
};

// Sum of amplitude-modulated resonator-filtered noise streams. Stream
// parameters are shared across channels; excitations are independent.
std::vector<double> babble(std::size_t length, int rate,
                           const std::vector<BabbleStream>& streams,
                           SceneRng& rng) {
  std::vector<double> out(length, 0.0);
  for (const BabbleStream& s : streams) {
    const double r = std::exp(-kPi * s.bandwidth / rate);
    const double a1 = 2.0 * r * std::cos(2.0 * kPi * s.center / rate);
    const double a2 = -r * r;
    double y1 = 0.0, y2 = 0.0;
    for (std::size_t n = 0; n < length; ++n) {
      const double y = rng.gaussian() + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      const double mod =
          0.5 + 0.5 * std::sin(2.0 * kPi * s.mod_rate * n / rate + s.mod_phase);
      out[n] += mod * y;
    }
  }
  return out;
}

double energy(std::span<const float> x) {
  double e = 0.0;
  for (float v : x) e += static_cast<double>(v) * v;
  return e;
}

}  // namespace

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "white") return NoiseKind::kWhite;
  if (name == "diffuse") return NoiseKind::kDiffuse;
  if (name == "babble" || name == "babble-like") return NoiseKind::kBabble;
  throw Error(Errc::kInvalidArgument,
              "unknown noise kind '" + std::string(name) +
                  "' (expected white|diffuse|babble)");
}

const char* noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kWhite:
      return "white";
    case NoiseKind::kDiffuse:
      return "diffuse";
    case NoiseKind::kBabble:
      return "babble";
  }
  return "unknown";
}

std::vector<double> default_delays(std::uint64_t seed, int channels) {
  SceneRng rng(substream(seed, 100));
  std::vector<double> delays(channels, 0.0);
  for (int c = 1; c < channels; ++c) {
    delays[c] = std::round(rng.uniform(-6.0, 6.0) * 2.0) / 2.0;
  }
  return delays;
}

std::vector<float> fractional_delay(std::span<const float> x, double delay) {
  const std::size_t n = x.size();
  std::vector<float> out(n, 0.0f);
  const double whole = std::floor(delay);
  const double frac = delay - whole;
  const auto shift = static_cast<long long>(whole);
  auto at = [&](long long i) -> double {
    return (i >= 0 && i < static_cast<long long>(n)) ? x[i] : 0.0;
  };
  if (frac == 0.0) {
    for (std::size_t k = 0; k < n; ++k) {
      out[k] = static_cast<float>(at(static_cast<long long>(k) - shift));
    }
    return out;
  }
  // y[k] = sum_i x[k - shift - i] * sinc(i - frac), Blackman-windowed.
  std::vector<double> taps(2 * kSincHalfLength);
  for (int j = 0; j < 2 * kSincHalfLength; ++j) {
    const double pos = (j - kSincHalfLength + 1) - frac;
    const double arg = kPi * pos;
    const double sinc = std::sin(arg) / arg;  // pos is never 0 here
    const double u = (pos + kSincHalfLength) / (2.0 * kSincHalfLength);
    const double w = 0.42 - 0.5 * std::cos(2.0 * kPi * u) +
                     0.08 * std::cos(4.0 * kPi * u);
    taps[j] = sinc * w;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const long long base = static_cast<long long>(k) - shift;
    double acc = 0.0;
    for (int j = 0; j < 2 * kSincHalfLength; ++j) {
      acc += taps[j] * at(base - (j - kSincHalfLength + 1));
    }
    out[k] = static_cast<float>(acc);
  }
  return out;
}

std::vector<float> synth_speech(std::uint64_t seed, std::size_t length,
                                int sample_rate) {
  SceneRng rng(substream(seed, 1));
  std::vector<double> x(length, 0.0);
  auto samples = [&](double seconds) {
    return static_cast<std::size_t>(seconds * sample_rate);
  };
  std::size_t pos = samples(rng.uniform(0.2, 0.4));
  while (pos < length) {
    const std::size_t voiced = samples(rng.uniform(0.12, 0.35));
    add_voiced(x, pos, voiced, sample_rate, rng);
    pos += voiced;
    if (rng.uniform() < 0.3) {
      const std::size_t fric = samples(rng.uniform(0.05, 0.12));
      add_fricative(x, pos, fric, sample_rate, rng);
      pos += fric;
    }
    pos += rng.uniform() < 0.15 ? samples(rng.uniform(0.3, 0.6))
                                : samples(rng.uniform(0.03, 0.25));
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  std::vector<float> out(length, 0.0f);
  if (peak > 0.0) {
    for (std::size_t n = 0; n < length; ++n) {
      out[n] = static_cast<float>(0.5 * x[n] / peak);
    }
  }
  return out;
}

Scene synth_scene(const SceneConfig& cfg) {
  if (cfg.channels < 1) {
    throw Error(Errc::kInvalidArgument, "scene needs at least one channel");
  }
  if (!(cfg.duration_s >= 1.0)) {
    throw Error(Errc::kInvalidArgument, "scene duration must be >= 1 s");
  }
  if (cfg.sample_rate <= 0) {
    throw Error(Errc::kInvalidArgument, "sample rate must be positive");
  }
  if (std::isnan(cfg.snr_db) || cfg.snr_db == -HUGE_VAL) {
    throw Error(Errc::kInvalidArgument, "SNR must be finite or +inf");
  }
  const std::vector<double> delays =
      cfg.delays.empty() ? default_delays(cfg.seed, cfg.channels) : cfg.delays;
  if (static_cast<int>(delays.size()) != cfg.channels) {
    throw Error(Errc::kInvalidArgument,
                "expected " + std::to_string(cfg.channels) + " delays, got " +
                    std::to_string(delays.size()));
  }
  for (double d : delays) {
    if (!(std::abs(d) <= cfg.tau_max)) {
      throw Error(Errc::kInvalidArgument,
                  "delay " + std::to_string(d) + " exceeds tau_max " +
                      std::to_string(cfg.tau_max));
    }
  }

  const auto length = static_cast<std::size_t>(
      std::llround(cfg.duration_s * cfg.sample_rate));
  const std::vector<float> source =
      synth_speech(cfg.seed, length + 2 * kMargin, cfg.sample_rate);

  Scene scene;
  scene.delays = delays;
  scene.snr_db = cfg.snr_db;
  scene.noise_kind = cfg.noise;
  scene.seed = cfg.seed;
  scene.speech_image = Waveform(cfg.channels, length, cfg.sample_rate);
  scene.noise = Waveform(cfg.channels, length, cfg.sample_rate);
  scene.noisy = Waveform(cfg.channels, length, cfg.sample_rate);

  for (int c = 0; c < cfg.channels; ++c) {
    const auto delayed = fractional_delay(source, delays[c]);
    std::copy_n(delayed.begin() + kMargin, length,
                scene.speech_image.channel(c).begin());
  }
  scene.clean = scene.speech_image.extract_channel(0);

  if (!std::isinf(cfg.snr_db)) {
    std::vector<BabbleStream> streams;
    SceneRng param_rng(substream(cfg.seed, 2));
    for (int i = 0; i < 8; ++i) {
      streams.push_back({param_rng.uniform(250.0, 3000.0),
                         param_rng.uniform(150.0, 600.0),
                         param_rng.uniform(2.0, 6.0),
                         param_rng.uniform(0.0, 2.0 * kPi)});
    }
    std::vector<std::vector<double>> raw(cfg.channels);
    double speech_energy = 0.0, noise_energy = 0.0;
    for (int c = 0; c < cfg.channels; ++c) {
      SceneRng rng(substream(cfg.seed, 10 + c));
      switch (cfg.noise) {
        case NoiseKind::kWhite:
          raw[c] = white(length, rng);
          break;
        case NoiseKind::kDiffuse:
          raw[c] = shaped(length, rng);
          break;
        case NoiseKind::kBabble:
          raw[c] = babble(length, cfg.sample_rate, streams, rng);
          break;
      }
      speech_energy += energy(scene.speech_image.channel(c));
      for (double v : raw[c]) noise_energy += v * v;
    }
    const double gain =
        noise_energy > 0.0
            ? std::sqrt(speech_energy /
                        (noise_energy * std::pow(10.0, cfg.snr_db / 10.0)))
            : 0.0;
    for (int c = 0; c < cfg.channels; ++c) {
      auto dst = scene.noise.channel(c);
      for (std::size_t n = 0; n < length; ++n) {
        dst[n] = static_cast<float>(gain * raw[c][n]);
      }
    }
  }
  for (int c = 0; c < cfg.channels; ++c) {
    const auto s = scene.speech_image.channel(c);
    const auto v = scene.noise.channel(c);
    auto y = scene.noisy.channel(c);
    for (std::size_t n = 0; n < length; ++n) y[n] = s[n] + v[n];
  }
  return scene;
}

Waveform close_mic(const Scene& scene, std::uint64_t seed, double snr_db) {
  Waveform out = scene.clean;
  SceneRng rng(substream(seed, 500));
  const double e = energy(scene.clean.channel(0));
  const double sigma =
      std::sqrt(e / scene.clean.length() / std::pow(10.0, snr_db / 10.0));
  for (float& v : out.channel(0)) {
    v = static_cast<float>(v + sigma * rng.gaussian());
  }
  return out;
}

}  // namespace mcse
