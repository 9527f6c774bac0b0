#include "mcse/metrics.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcse/error.h"

namespace mcse {
namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(Errc::kShape, "estimate has " + std::to_string(a) +
                                  " samples, reference has " +
                                  std::to_string(b));
  }
}

const Waveform& mono(const Waveform& w) {
  if (w.channels() != 1) {
    throw Error(Errc::kShape, "metric expects a single-channel waveform");
  }
  return w;
}

}  // namespace

double si_sdr(std::span<const float> estimate,
              std::span<const float> reference) {
  check_lengths(estimate.size(), reference.size());
  double dot = 0.0, ref_energy = 0.0;
  for (std::size_t n = 0; n < reference.size(); ++n) {
    dot += static_cast<double>(estimate[n]) * reference[n];
    ref_energy += static_cast<double>(reference[n]) * reference[n];
  }
  if (!(ref_energy > 0.0)) {
    throw Error(Errc::kInvalidArgument, "SI-SDR reference is all zeros");
  }
  const double alpha = dot / ref_energy;
  double target = 0.0, error = 0.0;
  for (std::size_t n = 0; n < reference.size(); ++n) {
    const double s = alpha * reference[n];
    const double e = estimate[n] - s;
    target += s * s;
    error += e * e;
  }
  if (error == 0.0) return target > 0.0 ? kSiSdrCap : -kSiSdrCap;
  if (target == 0.0) return -kSiSdrCap;
  return std::clamp(10.0 * std::log10(target / error), -kSiSdrCap, kSiSdrCap);
}

double si_sdr(const Waveform& estimate, const Waveform& reference) {
  return si_sdr(mono(estimate).channel(0), mono(reference).channel(0));
}

double seg_snr(std::span<const float> estimate,
               std::span<const float> reference, int sample_rate,
               double frame_ms) {
  check_lengths(estimate.size(), reference.size());
  const auto frame = static_cast<std::size_t>(
      std::lround(frame_ms * 1e-3 * sample_rate));
  if (frame == 0) {
    throw Error(Errc::kInvalidArgument, "segment length rounds to zero");
  }
  double sum = 0.0;
  int count = 0;
  for (std::size_t start = 0; start + frame <= reference.size();
       start += frame) {
    double ref = 0.0, est = 0.0, err = 0.0;
    for (std::size_t n = start; n < start + frame; ++n) {
      const double e = static_cast<double>(estimate[n]) - reference[n];
      ref += static_cast<double>(reference[n]) * reference[n];
      est += static_cast<double>(estimate[n]) * estimate[n];
      err += e * e;
    }
    if (ref == 0.0) continue;
    const double snr = err == 0.0   ? 35.0
                       : est == 0.0 ? -10.0
                                    : 10.0 * std::log10(est / err);
    sum += std::clamp(snr, -10.0, 35.0);
    ++count;
  }
  if (count == 0) {
    throw Error(Errc::kInvalidArgument, "reference has no non-silent segment");
  }
  return sum / count;
}

double seg_snr(const Waveform& estimate, const Waveform& reference,
               double frame_ms) {
  return seg_snr(mono(estimate).channel(0), mono(reference).channel(0),
                 reference.sample_rate(), frame_ms);
}

}  // namespace mcse
