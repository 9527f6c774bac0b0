#include "mcse/reference.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mcse/beamformer.h"
#include "mcse/error.h"

namespace mcse {

double percentile(std::vector<double> values, double p) {
  if (values.empty()) {
    throw Error(Errc::kShape, "percentile of an empty sequence");
  }
  std::ranges::sort(values);
  const double rank = p / 100.0 * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - lo;
  return values[lo] + frac * (values[hi] - values[lo]);
}

Mask percentile_vad(const MultichannelSpectrogram& close_spec,
                    double percentile_value) {
  if (close_spec.frames() == 0 || close_spec.bins() == 0 ||
      close_spec.channels() == 0) {
    throw Error(Errc::kShape, "empty close-mic spectrogram");
  }
  if (!(percentile_value >= 0.0 && percentile_value < 100.0)) {
    throw Error(Errc::kInvalidArgument, "percentile must lie in [0, 100)");
  }
  Mask vad(close_spec.bins(), close_spec.frames());
  std::vector<double> energy(close_spec.frames());
  for (int f = 0; f < close_spec.bins(); ++f) {
    const auto row = close_spec.row(0, f);
    for (int t = 0; t < close_spec.frames(); ++t) {
      energy[t] = std::norm(std::complex<double>(row[t]));
    }
    const double threshold = percentile(energy, percentile_value);
    for (int t = 0; t < close_spec.frames(); ++t) {
      vad(f, t) = energy[t] > threshold ? 1.0f : 0.0f;
    }
  }
  return vad;
}

Waveform build_reference(const MultichannelSpectrogram& array_spec,
                         const MultichannelSpectrogram& close_spec,
                         const ReferenceOptions& opts) {
  if (!array_spec.same_grid(close_spec)) {
    throw Error(Errc::kShape, "close-mic and array spectrograms are not "
                              "frame-aligned");
  }
  const Mask adapt = percentile_vad(close_spec, opts.adapt_percentile);
  const Mask post = percentile_vad(close_spec, opts.post_percentile);
  if (std::ranges::none_of(adapt.values(), [](float v) { return v > 0.0f; })) {
    throw Error(Errc::kDegenerate,
                "degenerate covariance: close-mic activity mask is empty");
  }
  const CovariancePair cov = estimate_covariances(array_spec, adapt);
  const ComplexMatrix w = mvdr_weights(cov, opts.ref_channel);
  const MultichannelSpectrogram beam = apply_beamformer(array_spec, w);
  return istft(apply_postfilter(beam, post, opts.max_suppression_db));
}

int best_alignment_lag(std::span<const float> close,
                       std::span<const float> target, int max_lag) {
  const auto n = static_cast<long long>(std::min(close.size(), target.size()));
  int best_lag = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (long long k = std::max(0LL, -static_cast<long long>(lag));
         k < n && k + lag < n; ++k) {
      acc += static_cast<double>(target[k]) * close[k + lag];
    }
    if (acc > best || (acc == best && std::abs(lag) < std::abs(best_lag))) {
      best = acc;
      best_lag = lag;
    }
  }
  return best_lag;
}

Waveform build_reference(const Waveform& array, const Waveform& close,
                         const StftConfig& cfg, const ReferenceOptions& opts) {
  if (close.sample_rate() != array.sample_rate()) {
    throw Error(Errc::kInvalidArgument,
                "close mic and array sample rates differ");
  }
  if (close.length() + cfg.fft_size < array.length() ||
      array.length() + cfg.fft_size < close.length()) {
    throw Error(Errc::kShape, "close mic and array lengths are misaligned");
  }
  const int lag =
      best_alignment_lag(close.channel(0), array.channel(0), opts.max_align_lag);
  Waveform aligned(1, array.length(), array.sample_rate());
  const auto src = close.channel(0);
  auto dst = aligned.channel(0);
  for (std::size_t k = 0; k < array.length(); ++k) {
    const long long j = static_cast<long long>(k) + lag;
    if (j >= 0 && j < static_cast<long long>(src.size())) dst[k] = src[j];
  }
  const Waveform out =
      build_reference(stft(array, cfg), stft(aligned, cfg), opts);
  return out.resized(array.length());
}

}  // namespace mcse
