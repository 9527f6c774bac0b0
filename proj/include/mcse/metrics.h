#ifndef MCSE_METRICS_H_
#define MCSE_METRICS_H_

#include <span>

#include "mcse/signal.h"

namespace mcse {

inline constexpr double kSiSdrCap = 60.0;

// Scale-invariant SDR in dB, clamped to [-60, 60].
double si_sdr(std::span<const float> estimate, std::span<const float> reference);
double si_sdr(const Waveform& estimate, const Waveform& reference);

// Mean over non-overlapping frames of the per-frame SNR, estimate energy
// over error energy, clamped to [-10, 35] dB. Frames where the reference
// is silent are skipped.
double seg_snr(std::span<const float> estimate, std::span<const float> reference,
               int sample_rate, double frame_ms = 32.0);
double seg_snr(const Waveform& estimate, const Waveform& reference,
               double frame_ms = 32.0);

}  // namespace mcse

#endif  // MCSE_METRICS_H_
