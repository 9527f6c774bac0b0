#include <cmath>
#include <random>

#include "doctest.h"
#include "mcse/error.h"
#include "mcse/noise_tracking.h"
#include "mcse/scene.h"
#include "test_util.h"

namespace mcse {
namespace {

// Periodogram of circular complex Gaussian noise: exponential with mean
// `psd` per bin.
PowerMatrix exponential_power(std::uint64_t seed, int bins, int frames,
                              double psd) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> e(1.0 / psd);
  PowerMatrix p(bins, frames);
  for (int f = 0; f < bins; ++f) {
    for (int t = 0; t < frames; ++t) p(f, t) = e(rng);
  }
  return p;
}

double mean_after(std::span<const double> x, int warmup) {
  double acc = 0.0;
  for (std::size_t t = warmup; t < x.size(); ++t) acc += x[t];
  return acc / (x.size() - warmup);
}

Waveform white_noise(std::uint64_t seed, int channels, std::size_t length,
                     double sigma) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  Waveform w(channels, length, 16000);
  for (int c = 0; c < channels; ++c) {
    for (auto& s : w.channel(c)) s = static_cast<float>(g(rng));
  }
  return w;
}

}  // namespace

TEST_SUITE("noise_baselines") {

TEST_CASE("minima tracking of a constant power") {
  const PowerMatrix p(3, 200, 2.5);
  const NoiseTrack tr = minima_track(p, 96);
  CHECK_FALSE(tr.window_clamped);
  for (int f = 0; f < 3; ++f) {
    for (int t = 0; t < 200; ++t) {
      REQUIRE(tr.lambda_n(f, t) == doctest::Approx(1.66 * 2.5).epsilon(1e-12));
      REQUIRE(tr.p_speech(f, t) == 0.0);
    }
  }
}

TEST_CASE("minima tracking ignores bursts shorter than the window") {
  const double psd = 3.0;
  PowerMatrix p = exponential_power(1, 8, 1000, psd);
  for (int f = 0; f < 8; ++f) {
    for (int start = 50; start < 1000; start += 150) {
      for (int t = start; t < start + 40; ++t) p(f, t) += 400.0 * psd;
    }
  }
  const NoiseTrack tr = minima_track(p, 96);
  for (int f = 0; f < 8; ++f) {
    const double est = mean_after(tr.lambda_n.row(f), 96);
    CHECK(std::abs(10.0 * std::log10(est / psd)) <= 3.0);
    for (int t = 96; t < 1000; ++t) REQUIRE(tr.lambda_n(f, t) < 10.0 * psd);
  }
}

TEST_CASE("minima tracking of zero input is zero") {
  const NoiseTrack tr = minima_track(PowerMatrix(4, 50), 10);
  for (double v : tr.lambda_n.values()) REQUIRE(v == 0.0);
}

TEST_CASE("minima window longer than the signal is clamped and flagged") {
  const PowerMatrix p = exponential_power(2, 2, 30, 1.0);
  const NoiseTrack tr = minima_track(p, 96);
  CHECK(tr.window_clamped);
  CHECK(tr.lambda_n.frames() == 30);
  CHECK_THROWS_AS(minima_track(p, 0), Error);
}

TEST_CASE("minima output is non-increasing for non-increasing input") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PowerMatrix p(5, 300);
  for (int f = 0; f < 5; ++f) {
    double v = 100.0;
    for (int t = 0; t < 300; ++t) {
      v *= u(rng) < 0.5 ? 1.0 : u(rng);
      p(f, t) = v;
    }
  }
  for (int window : {1, 7, 96}) {
    const NoiseTrack tr = minima_track(p, window);
    for (int f = 0; f < 5; ++f) {
      for (int t = 1; t < 300; ++t) REQUIRE(tr.lambda_n(f, t) <= tr.lambda_n(f, t - 1));
    }
  }
}

TEST_CASE("recursive update freezes when speech is present") {
  const PowerMatrix p = exponential_power(4, 3, 100, 1.0);
  const PowerMatrix ones(3, 100, 1.0);
  const PowerMatrix frozen = recursive_noise_update(p, ones, 0.95);
  for (int f = 0; f < 3; ++f) {
    for (int t = 0; t < 100; ++t) REQUIRE(frozen(f, t) == p(f, 0));
  }
}

TEST_CASE("recursive update without speech is exponential averaging") {
  const PowerMatrix p = exponential_power(5, 3, 100, 1.0);
  const PowerMatrix zeros(3, 100, 0.0);
  const PowerMatrix avg = recursive_noise_update(p, zeros, 0.9);
  for (int f = 0; f < 3; ++f) {
    double state = p(f, 0);
    for (int t = 0; t < 100; ++t) {
      state = 0.9 * state + 0.1 * p(f, t);
      REQUIRE(avg(f, t) == doctest::Approx(state).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(recursive_noise_update(p, zeros, 1.0), Error);
  CHECK_THROWS_AS(recursive_noise_update(p, PowerMatrix(3, 99), 0.9), Error);
}

TEST_CASE("MCRA tracks white noise within 2 dB after 100 frames") {
  const double psd = 0.7;
  const PowerMatrix p = exponential_power(6, 16, 600, psd);
  const NoiseTrack tr = mcra_track(p);
  for (int f = 0; f < 16; ++f) {
    const double est = mean_after(tr.lambda_n.row(f), 100);
    CHECK(std::abs(10.0 * std::log10(est / psd)) <= 2.0);
  }
}

TEST_CASE("MCRA frames with full presence leave the estimate unchanged") {
  PowerMatrix p = exponential_power(7, 6, 800, 1.0);
  for (int f = 0; f < 6; ++f) {
    for (int t = 300; t < 360; ++t) p(f, t) *= 1000.0;
  }
  const NoiseTrack tr = mcra_track(p);
  int frozen = 0;
  for (int f = 0; f < 6; ++f) {
    for (int t = 1; t < 800; ++t) {
      REQUIRE(tr.p_speech(f, t) >= 0.0);
      REQUIRE(tr.p_speech(f, t) <= 1.0);
      if (tr.p_speech(f, t) == 1.0) {
        ++frozen;
        REQUIRE(tr.lambda_n(f, t) == tr.lambda_n(f, t - 1));
      }
    }
  }
  CHECK(frozen > 0);
}

TEST_CASE("trackers reject invalid parameters") {
  const PowerMatrix p = exponential_power(8, 2, 20, 1.0);
  McraParams bad;
  bad.alpha_d = 0.0;
  CHECK_THROWS_AS(mcra_track(p, bad), Error);
  bad = {};
  bad.delta = -1.0;
  CHECK_THROWS_AS(mcra_track(p, bad), Error);
  MinimaParams mp;
  mp.alpha_s = 1.5;
  CHECK_THROWS_AS(minima_track(p, mp), Error);
}

TEST_CASE("noise estimates are never negative") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    PowerMatrix p = exponential_power(10 + seed, 4, 200, 1.0 + seed);
    p(0, 5) = 0.0;
    for (const NoiseTrack& tr : {minima_track(p, 20), mcra_track(p)}) {
      for (double v : tr.lambda_n.values()) REQUIRE(v >= 0.0);
    }
  }
}

TEST_CASE("wiener mask") {
  PowerMatrix p(1, 3), l(1, 3);
  p(0, 0) = 4.0;
  l(0, 0) = 1.0;
  p(0, 1) = 1.0;
  l(0, 1) = 2.0;
  p(0, 2) = 0.0;
  const Mask m = wiener_mask(p, l);
  CHECK(m(0, 0) == 0.75f);
  CHECK(m(0, 1) == 0.0f);
  CHECK(m(0, 2) == 0.0f);
}

TEST_CASE("MC-SPP presence stays low on stationary noise") {
  const Waveform noise = white_noise(12, 4, 16000 * 8, 0.1);
  const auto spec = stft(noise);
  const McsppResult r = mcspp_enhance(spec);
  double mean_q = 0.0;
  for (float q : r.presence.values()) mean_q += q;
  mean_q /= r.presence.values().size();
  MESSAGE("mean presence on noise " << mean_q);
  CHECK(mean_q <= 0.1);
}

TEST_CASE("MC-SPP noise covariance converges to the sample covariance") {
  SceneConfig cfg;
  cfg.seed = 13;
  cfg.channels = 3;
  cfg.delays = {0.0, 0.0, 0.0};
  cfg.snr_db = 0.0;
  cfg.duration_s = 30.0;
  cfg.noise = NoiseKind::kDiffuse;
  const Scene scene = synth_scene(cfg);
  const auto spec = stft(scene.noise);
  for (int bin : {40, 200, 400}) {
    const auto traj = mcspp_noise_trajectory(spec, bin);
    ComplexMatrix sample = ComplexMatrix::Zero(3, 3);
    for (int t = 200; t < spec.frames(); ++t) {
      Eigen::VectorXcd y(3);
      for (int c = 0; c < 3; ++c) y[c] = std::complex<double>(spec(c, bin, t));
      sample += y * y.adjoint();
    }
    sample /= spec.frames() - 200;
    ComplexMatrix tracked = ComplexMatrix::Zero(3, 3);
    for (std::size_t t = 200; t < traj.size(); ++t) tracked += traj[t];
    tracked /= static_cast<double>(traj.size() - 200);
    const double rel = (tracked - sample).norm() / sample.norm();
    MESSAGE("bin " << bin << " relative Frobenius error " << rel << " trace ratio "
                   << tracked.trace().real() / sample.trace().real());
    CHECK(rel <= 0.05);
  }
}

TEST_CASE("MC-SPP presence is high on clean speech") {
  SceneConfig cfg;
  cfg.seed = 14;
  cfg.channels = 4;
  cfg.snr_db = std::numeric_limits<double>::infinity();
  cfg.duration_s = 5.0;
  const Scene scene = synth_scene(cfg);
  const auto spec = stft(scene.noisy);
  const McsppResult r = mcspp_enhance(spec);
  const PowerMatrix power = power_spectrum(stft(scene.speech_image), 0);
  std::vector<double> frame_energy(spec.frames(), 0.0);
  double mean_energy = 0.0;
  for (int t = 0; t < spec.frames(); ++t) {
    for (int f = 0; f < spec.bins(); ++f) frame_energy[t] += power(f, t);
    mean_energy += frame_energy[t] / spec.frames();
  }
  int high = 0, detected = 0;
  for (int t = 0; t < spec.frames(); ++t) {
    if (frame_energy[t] < 0.1 * mean_energy) continue;
    double peak = 0.0;
    for (int f = 0; f < spec.bins(); ++f) peak = std::max(peak, power(f, t));
    for (int f = 0; f < spec.bins(); ++f) {
      if (power(f, t) < 0.01 * peak) continue;
      ++high;
      if (r.presence(f, t) > 0.5f) ++detected;
    }
  }
  REQUIRE(high > 0);
  MESSAGE("detected " << detected << " of " << high);
  CHECK(double(detected) / high >= 0.8);
}

TEST_CASE("MC-SPP with one channel falls back to MCRA gating") {
  const auto spec = stft(white_noise(15, 1, 16000 * 3, 0.1));
  const McsppResult r = mcspp_enhance(spec);
  const PowerMatrix power = power_spectrum(spec, 0);
  const NoiseTrack tr = mcra_track(power);
  const Mask gain = wiener_mask(power, tr.lambda_n);
  for (int f = 0; f < spec.bins(); f += 37) {
    for (int t = 0; t < spec.frames(); ++t) {
      REQUIRE(r.presence(f, t) == static_cast<float>(tr.p_speech(f, t)));
      const cfloat y = spec(0, f, t);
      const float g = gain(f, t);
      REQUIRE(r.enhanced(0, f, t) == cfloat(y.real() * g, y.imag() * g));
    }
  }
  CHECK_THROWS_AS(mcspp_noise_trajectory(spec, 3), Error);
}

TEST_CASE("MC-SPP output is one channel with presence in range") {
  SceneConfig cfg;
  cfg.seed = 16;
  cfg.channels = 6;
  cfg.snr_db = 0.0;
  cfg.duration_s = 4.0;
  const Scene scene = synth_scene(cfg);
  const auto spec = stft(scene.noisy);
  const McsppResult r = mcspp_enhance(spec);
  CHECK(r.presence.is_valid());
  CHECK(r.enhanced.channels() == 1);
}

}  // TEST_SUITE

}  // namespace mcse
