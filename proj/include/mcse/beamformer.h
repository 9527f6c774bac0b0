#ifndef MCSE_BEAMFORMER_H_
#define MCSE_BEAMFORMER_H_

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "mcse/mask.h"
#include "mcse/signal.h"

namespace mcse {

using ComplexMatrix = Eigen::MatrixXcd;

// Per-bin speech and noise spatial covariances, each C x C Hermitian.
struct CovariancePair {
  std::vector<ComplexMatrix> speech;
  std::vector<ComplexMatrix> noise;
  // Bins where one side had no mask mass and fell back to the unweighted
  // sample covariance.
  std::vector<int> degenerate_bins;

  int bins() const { return static_cast<int>(speech.size()); }
  int channels() const {
    return speech.empty() ? 0 : static_cast<int>(speech.front().rows());
  }
};

inline constexpr double kNoiseLoading = 1e-6;

// Phi_s from mask weights, Phi_n from (1 - mask), with diagonal loading
// kNoiseLoading * trace / C on Phi_n.
CovariancePair estimate_covariances(const MultichannelSpectrogram& spec,
                                    const Mask& mask);

// Trace-normalized MVDR: w = Phi_n^-1 Phi_s e_ref / tr(Phi_n^-1 Phi_s).
// Returns [bins x channels].
ComplexMatrix mvdr_weights(const CovariancePair& cov, int ref_channel);

// out(f, t) = w(f)^H y(f, t). Returns a single-channel spectrogram.
MultichannelSpectrogram apply_beamformer(const MultichannelSpectrogram& spec,
                                         const ComplexMatrix& weights);

// Gain max(m, 10^(-max_suppression_db / 20)). An infinite suppression
// applies the mask with no floor.
MultichannelSpectrogram apply_postfilter(
    const MultichannelSpectrogram& spec_1ch, const Mask& m,
    double max_suppression_db = std::numeric_limits<double>::infinity());

double suppression_floor(double max_suppression_db);

}  // namespace mcse

#endif  // MCSE_BEAMFORMER_H_
