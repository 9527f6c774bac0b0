#ifndef MCSE_REFERENCE_H_
#define MCSE_REFERENCE_H_

#include <span>
#include <vector>

#include "mcse/mask.h"
#include "mcse/signal.h"

namespace mcse {

struct ReferenceOptions {
  double adapt_percentile = 85.0;
  double post_percentile = 75.0;
  double max_suppression_db = 15.0;
  int ref_channel = 0;
  int max_align_lag = 1600;  // samples searched when aligning the close mic
};

// Percentile of `values` with linear interpolation between order
// statistics (rank = p/100 * (n - 1)).
double percentile(std::vector<double> values, double p);

// Binary mask: 1 where the close-mic energy |X|^2 strictly exceeds the
// per-bin percentile over the utterance. Uses channel 0 of `close_spec`.
Mask percentile_vad(const MultichannelSpectrogram& close_spec,
                    double percentile_value);

// Close-mic gated MVDR of the array. The close mic enters only through the
// two percentile masks. Throws kDegenerate when the adaptation mask is
// empty.
Waveform build_reference(const MultichannelSpectrogram& array_spec,
                         const MultichannelSpectrogram& close_spec,
                         const ReferenceOptions& opts = {});

// Integer lag maximizing the cross-correlation of `close` against `target`
// (positive: close lags target), searched in [-max_lag, max_lag].
int best_alignment_lag(std::span<const float> close,
                       std::span<const float> target, int max_lag);

// Shifts the close mic by the best lag against array channel 0, runs the
// STFTs and builds the reference. Output has the array's length.
Waveform build_reference(const Waveform& array, const Waveform& close,
                         const StftConfig& cfg,
                         const ReferenceOptions& opts = {});

}  // namespace mcse

#endif  // MCSE_REFERENCE_H_
