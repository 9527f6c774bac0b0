#include "mcse/noise_tracking.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "mcse/error.h"

namespace mcse {
namespace {

// First-order recursive smoothing seeded with the first value.
std::vector<double> smooth(std::span<const double> x, double alpha) {
  std::vector<double> out(x.size());
  double state = x.empty() ? 0.0 : x[0];
  for (std::size_t t = 0; t < x.size(); ++t) {
    state = alpha * state + (1.0 - alpha) * x[t];
    out[t] = state;
  }
  return out;
}

// Minimum over the trailing `window` samples (fewer during warm-up).
std::vector<double> sliding_min(std::span<const double> x, int window) {
  std::vector<double> out(x.size());
  std::deque<std::size_t> idx;
  for (std::size_t t = 0; t < x.size(); ++t) {
    while (!idx.empty() && x[idx.back()] >= x[t]) idx.pop_back();
    idx.push_back(t);
    if (idx.front() + window <= t) idx.pop_front();
    out[t] = x[idx.front()];
  }
  return out;
}

int clamp_window(int window, int frames, bool* clamped) {
  if (window < 1) {
    throw Error(Errc::kInvalidArgument, "minimum-search window must be >= 1");
  }
  *clamped = window > frames;
  return std::min(window, std::max(frames, 1));
}

void check_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw Error(Errc::kInvalidArgument,
                std::string(name) + " must lie in (0, 1)");
  }
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Noise covariance ready for inversion: loaded by kNoiseLoading * trace / C
// plus an absolute floor so silent stretches stay invertible.
ComplexMatrix loaded(const ComplexMatrix& n) {
  const int C = static_cast<int>(n.rows());
  ComplexMatrix out = n;
  const double load =
      std::max(kNoiseLoading * n.trace().real() / C, 1e-12);
  out.diagonal().array() += load;
  return out;
}

struct BinTracker {
  ComplexMatrix noise;
  ComplexMatrix speech_acc;
  double speech_mass = 0.0;
  ComplexMatrix observed;  // forgetting-factor average of y y^H
  ComplexMatrix recent;    // short average of y y^H driving presence
};

BinTracker start_bin(const MultichannelSpectrogram& spec, int f,
                     const McsppParams& params) {
  const int C = spec.channels();
  const int n_init = std::clamp(params.init_frames, 1, spec.frames());
  BinTracker s;
  s.noise = ComplexMatrix::Zero(C, C);
  Eigen::VectorXcd y(C);
  for (int t = 0; t < n_init; ++t) {
    for (int c = 0; c < C; ++c) y[c] = std::complex<double>(spec(c, f, t));
    s.noise += y * y.adjoint();
  }
  s.noise /= static_cast<double>(n_init);
  s.speech_acc = ComplexMatrix::Zero(C, C);
  s.observed = s.noise;
  s.recent = s.noise;
  return s;
}

// Presence under the current noise estimate.
double presence(const ComplexMatrix& recent, const ComplexMatrix& noise,
                const McsppParams& params) {
  const int C = static_cast<int>(recent.rows());
  const double psi = std::max(
      loaded(noise).ldlt().solve(recent).trace().real() / C, 1e-30);
  return logistic(params.slope * (10.0 * std::log10(psi) - params.offset_db));
}

// Advances the trackers by one frame and returns its presence.
double track_frame(BinTracker& s, const Eigen::VectorXcd& y,
                   const McsppParams& params) {
  const ComplexMatrix outer = y * y.adjoint();
  s.recent += (1.0 - params.snr_smoothing) * (outer - s.recent);
  const double q = presence(s.recent, s.noise, params);
  s.noise += (1.0 - params.alpha_d) * (1.0 - q) * (outer - s.noise);
  s.speech_acc = params.speech_forget * s.speech_acc + q * outer;
  s.speech_mass = params.speech_forget * s.speech_mass + q;
  s.observed = params.speech_forget * s.observed +
               (1.0 - params.speech_forget) * outer;
  return q;
}

McsppResult single_channel_fallback(const MultichannelSpectrogram& spec,
                                    const McsppParams& params) {
  const PowerMatrix power = power_spectrum(spec, 0);
  const NoiseTrack track = mcra_track(power, params.single_channel);
  const Mask gain = wiener_mask(power, track.lambda_n);
  McsppResult result{apply_postfilter(spec, gain), Mask(spec.bins(), spec.frames())};
  for (int f = 0; f < spec.bins(); ++f) {
    for (int t = 0; t < spec.frames(); ++t) {
      result.presence(f, t) = static_cast<float>(track.p_speech(f, t));
    }
  }
  return result;
}

}  // namespace

PowerMatrix power_spectrum(const MultichannelSpectrogram& spec, int channel) {
  if (channel < 0 || channel >= spec.channels()) {
    throw Error(Errc::kShape,
                "channel " + std::to_string(channel) + " out of range");
  }
  PowerMatrix p(spec.bins(), spec.frames());
  for (int f = 0; f < spec.bins(); ++f) {
    const auto row = spec.row(channel, f);
    for (int t = 0; t < spec.frames(); ++t) {
      p(f, t) = std::norm(std::complex<double>(row[t]));
    }
  }
  return p;
}

NoiseTrack minima_track(const PowerMatrix& power, const MinimaParams& params) {
  check_unit(params.alpha_s, "alpha_s");
  NoiseTrack out;
  const int window =
      clamp_window(params.window_frames, power.frames(), &out.window_clamped);
  out.lambda_n = PowerMatrix(power.bins(), power.frames());
  out.p_speech = PowerMatrix(power.bins(), power.frames());
  for (int f = 0; f < power.bins(); ++f) {
    const auto minima = sliding_min(smooth(power.row(f), params.alpha_s), window);
    auto dst = out.lambda_n.row(f);
    for (int t = 0; t < power.frames(); ++t) dst[t] = params.bias * minima[t];
  }
  return out;
}

NoiseTrack minima_track(const PowerMatrix& power, int window_frames) {
  MinimaParams params;
  params.window_frames = window_frames;
  return minima_track(power, params);
}

PowerMatrix recursive_noise_update(const PowerMatrix& power,
                                   const PowerMatrix& p_speech,
                                   double alpha_d) {
  check_unit(alpha_d, "alpha_d");
  if (power.bins() != p_speech.bins() || power.frames() != p_speech.frames()) {
    throw Error(Errc::kShape, "presence and power matrices differ in shape");
  }
  PowerMatrix lambda(power.bins(), power.frames());
  for (int f = 0; f < power.bins(); ++f) {
    const auto x = power.row(f);
    const auto p = p_speech.row(f);
    auto dst = lambda.row(f);
    double state = x.empty() ? 0.0 : x[0];
    for (int t = 0; t < power.frames(); ++t) {
      state += (1.0 - alpha_d) * (1.0 - p[t]) * (x[t] - state);
      dst[t] = state;
    }
  }
  return lambda;
}

NoiseTrack mcra_track(const PowerMatrix& power, const McraParams& params) {
  check_unit(params.alpha_d, "alpha_d");
  check_unit(params.alpha_s, "alpha_s");
  if (!(params.alpha_p >= 0.0 && params.alpha_p < 1.0)) {
    throw Error(Errc::kInvalidArgument, "alpha_p must lie in [0, 1)");
  }
  if (!(params.delta > 0.0)) {
    throw Error(Errc::kInvalidArgument, "delta must be positive");
  }
  NoiseTrack out;
  const int window =
      clamp_window(params.window_frames, power.frames(), &out.window_clamped);
  out.p_speech = PowerMatrix(power.bins(), power.frames());
  for (int f = 0; f < power.bins(); ++f) {
    const auto smoothed = smooth(power.row(f), params.alpha_s);
    const auto minima = sliding_min(smoothed, window);
    auto p = out.p_speech.row(f);
    double state = 0.0;
    for (int t = 0; t < power.frames(); ++t) {
      const bool present = smoothed[t] > params.delta * minima[t];
      state = params.alpha_p * state + (1.0 - params.alpha_p) * (present ? 1.0 : 0.0);
      p[t] = std::min(state, 1.0);
    }
  }
  out.lambda_n = recursive_noise_update(power, out.p_speech, params.alpha_d);
  return out;
}

Mask wiener_mask(const PowerMatrix& power, const PowerMatrix& lambda_n) {
  if (power.bins() != lambda_n.bins() || power.frames() != lambda_n.frames()) {
    throw Error(Errc::kShape, "noise estimate and power differ in shape");
  }
  Mask m(power.bins(), power.frames());
  for (int f = 0; f < power.bins(); ++f) {
    for (int t = 0; t < power.frames(); ++t) {
      const double p = power(f, t);
      m(f, t) = p > 0.0 ? static_cast<float>(
                              std::clamp(1.0 - lambda_n(f, t) / p, 0.0, 1.0))
                        : 0.0f;
    }
  }
  return m;
}

McsppResult mcspp_enhance(const MultichannelSpectrogram& spec,
                          const McsppParams& params) {
  check_unit(params.alpha_d, "alpha_d");
  check_unit(params.speech_forget, "speech_forget");
  if (!(params.snr_smoothing >= 0.0 && params.snr_smoothing < 1.0)) {
    throw Error(Errc::kInvalidArgument, "snr_smoothing must lie in [0, 1)");
  }
  if (params.block_frames < 1) {
    throw Error(Errc::kInvalidArgument, "block_frames must be >= 1");
  }
  if (spec.channels() == 1) return single_channel_fallback(spec, params);
  const int C = spec.channels();
  if (params.ref_channel < 0 || params.ref_channel >= C) {
    throw Error(Errc::kInvalidArgument, "reference channel out of range");
  }

  McsppResult result{
      MultichannelSpectrogram(1, spec.frames(), spec.config(), spec.sample_rate()),
      Mask(spec.bins(), spec.frames())};
  Eigen::VectorXcd y(C);
  for (int f = 0; f < spec.bins(); ++f) {
    BinTracker s = start_bin(spec, f, params);
    for (int start = 0; start < spec.frames(); start += params.block_frames) {
      const int stop = std::min(start + params.block_frames, spec.frames());
      for (int t = start; t < stop; ++t) {
        for (int c = 0; c < C; ++c) y[c] = std::complex<double>(spec(c, f, t));
        result.presence(f, t) = static_cast<float>(track_frame(s, y, params));
      }

      CovariancePair cov;
      cov.speech.push_back(s.speech_mass > 1e-6 ? ComplexMatrix(s.speech_acc / s.speech_mass)
                                                : s.observed);
      cov.noise.push_back(loaded(s.noise));
      Eigen::RowVectorXcd w = Eigen::RowVectorXcd::Zero(C);
      try {
        w = mvdr_weights(cov, params.ref_channel).row(0);
      } catch (const Error&) {
        // Silent block: pass the reference channel through.
        w[params.ref_channel] = 1.0;
      }
      auto dst = result.enhanced.row(0, f);
      for (int t = start; t < stop; ++t) {
        std::complex<double> acc = 0.0;
        for (int c = 0; c < C; ++c) {
          acc += std::conj(w[c]) * std::complex<double>(spec(c, f, t));
        }
        dst[t] = cfloat(static_cast<float>(acc.real()),
                        static_cast<float>(acc.imag()));
      }
    }
  }
  return result;
}

std::vector<ComplexMatrix> mcspp_noise_trajectory(
    const MultichannelSpectrogram& spec, int bin, const McsppParams& params) {
  if (spec.channels() < 2) {
    throw Error(Errc::kShape, "noise covariance tracking needs >= 2 channels");
  }
  if (bin < 0 || bin >= spec.bins()) {
    throw Error(Errc::kShape, "bin out of range");
  }
  const int C = spec.channels();
  BinTracker s = start_bin(spec, bin, params);
  std::vector<ComplexMatrix> out;
  out.reserve(spec.frames());
  Eigen::VectorXcd y(C);
  for (int t = 0; t < spec.frames(); ++t) {
    for (int c = 0; c < C; ++c) y[c] = std::complex<double>(spec(c, bin, t));
    track_frame(s, y, params);
    out.push_back(s.noise);
  }
  return out;
}

}  // namespace mcse
