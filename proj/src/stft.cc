#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "fft.h"
#include "mcse/error.h"
#include "mcse/signal.h"

namespace mcse {
namespace {

// Sum over frame shifts of analysis*synthesis window, for each phase within
// one hop. Constant across phases iff the pair satisfies COLA at this hop.
std::vector<double> overlap_sum(const std::vector<double>& window, int hop) {
  std::vector<double> sum(hop, 0.0);
  for (std::size_t n = 0; n < window.size(); ++n) {
    sum[n % hop] += window[n] * window[n];
  }
  return sum;
}

double cola_gain(const StftConfig& cfg) {
  const auto sum = overlap_sum(make_window(cfg.window, cfg.fft_size), cfg.hop);
  return sum.front();
}

}  // namespace

std::vector<double> make_window(WindowKind kind, int size) {
  std::vector<double> w(size, 1.0);
  if (kind == WindowKind::kSqrtHann) {
    // Periodic Hann, so that the squared window overlap-adds exactly.
    for (int n = 0; n < size; ++n) {
      w[n] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / size));
    }
  }
  return w;
}

void validate_stft_config(const StftConfig& cfg) {
  if (cfg.fft_size < 2 || cfg.fft_size % 2 != 0) {
    throw Error(Errc::kInvalidArgument,
                "fft size must be even and >= 2, got " +
                    std::to_string(cfg.fft_size));
  }
  if (cfg.hop <= 0 || cfg.hop > cfg.fft_size) {
    throw Error(Errc::kInvalidArgument,
                "hop must satisfy 0 < hop <= fft size, got " +
                    std::to_string(cfg.hop));
  }
  const auto sum = overlap_sum(make_window(cfg.window, cfg.fft_size), cfg.hop);
  const auto [lo, hi] = std::ranges::minmax(sum);
  if (lo <= 0.0 || (hi - lo) > 1e-10 * hi) {
    throw Error(Errc::kInvalidArgument,
                "window does not satisfy constant overlap-add at hop " +
                    std::to_string(cfg.hop));
  }
}

int frame_count(std::size_t length, const StftConfig& cfg) {
  if (length < static_cast<std::size_t>(cfg.fft_size)) return 0;
  return static_cast<int>((length - cfg.fft_size) / cfg.hop) + 1;
}

MultichannelSpectrogram::MultichannelSpectrogram(int channels, int frames,
                                                 const StftConfig& cfg,
                                                 int sample_rate)
    : channels_(channels),
      bins_(cfg.bins()),
      frames_(frames),
      config_(cfg),
      sample_rate_(sample_rate),
      values_(static_cast<std::size_t>(channels) * cfg.bins() * frames) {}

std::span<cfloat> MultichannelSpectrogram::row(int c, int f) {
  return std::span<cfloat>(values_).subspan(
      (static_cast<std::size_t>(c) * bins_ + f) * frames_, frames_);
}

std::span<const cfloat> MultichannelSpectrogram::row(int c, int f) const {
  return std::span<const cfloat>(values_).subspan(
      (static_cast<std::size_t>(c) * bins_ + f) * frames_, frames_);
}

MultichannelSpectrogram MultichannelSpectrogram::extract_channel(int c) const {
  if (c < 0 || c >= channels_) {
    throw Error(Errc::kShape, "channel " + std::to_string(c) +
                                  " out of range for " +
                                  std::to_string(channels_) + " channels");
  }
  MultichannelSpectrogram out(1, frames_, config_, sample_rate_);
  const auto src = std::span<const cfloat>(values_).subspan(
      static_cast<std::size_t>(c) * bins_ * frames_,
      static_cast<std::size_t>(bins_) * frames_);
  std::ranges::copy(src, out.values_.begin());
  return out;
}

MultichannelSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  validate_stft_config(cfg);
  const int frames = frame_count(w.length(), cfg);
  if (frames == 0) {
    throw Error(Errc::kShape, "signal of " + std::to_string(w.length()) +
                                  " samples is shorter than one frame (" +
                                  std::to_string(cfg.fft_size) + ")");
  }
  const auto window = make_window(cfg.window, cfg.fft_size);
  const int bins = cfg.bins();
  MultichannelSpectrogram spec(w.channels(), frames, cfg, w.sample_rate());

  internal::RealFft fft(cfg.fft_size);
  std::vector<double> frame(cfg.fft_size);
  std::vector<std::complex<double>> out(bins);
  for (int c = 0; c < w.channels(); ++c) {
    const auto x = w.channel(c);
    for (int t = 0; t < frames; ++t) {
      const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
      for (int n = 0; n < cfg.fft_size; ++n) {
        frame[n] = window[n] * x[start + n];
      }
      fft.forward(frame.data(), out.data());
      for (int f = 0; f < bins; ++f) {
        spec(c, f, t) = cfloat(static_cast<float>(out[f].real()),
                               static_cast<float>(out[f].imag()));
      }
    }
  }
  return spec;
}

Waveform istft(const MultichannelSpectrogram& spec) {
  const StftConfig& cfg = spec.config();
  validate_stft_config(cfg);
  const auto window = make_window(cfg.window, cfg.fft_size);
  const double gain = cola_gain(cfg);
  const std::size_t length =
      spec.frames() == 0
          ? 0
          : static_cast<std::size_t>(spec.frames() - 1) * cfg.hop +
                cfg.fft_size;

  std::vector<double> acc(length);
  Waveform w(spec.channels(), length, spec.sample_rate());
  internal::RealFft fft(cfg.fft_size);
  std::vector<std::complex<double>> bins(spec.bins());
  std::vector<double> frame(cfg.fft_size);
  for (int c = 0; c < spec.channels(); ++c) {
    std::ranges::fill(acc, 0.0);
    for (int t = 0; t < spec.frames(); ++t) {
      for (int f = 0; f < spec.bins(); ++f) bins[f] = spec(c, f, t);
      fft.inverse(bins.data(), frame.data());
      const std::size_t start = static_cast<std::size_t>(t) * cfg.hop;
      for (int n = 0; n < cfg.fft_size; ++n) {
        acc[start + n] += window[n] * frame[n];
      }
    }
    auto out = w.channel(c);
    for (std::size_t n = 0; n < length; ++n) {
      out[n] = static_cast<float>(acc[n] / gain);
    }
  }
  return w;
}

}  // namespace mcse
