#ifndef MCSE_SPATIAL_EM_H_
#define MCSE_SPATIAL_EM_H_

#include <functional>
#include <span>
#include <vector>

#include "mcse/mask.h"
#include "mcse/signal.h"

namespace mcse {

struct ChannelPair {
  int first = 0;
  int second = 1;
  friend bool operator==(const ChannelPair&, const ChannelPair&) = default;
};

// Every channel paired against channel 0.
std::vector<ChannelPair> default_pairs(int channels);

// Inter-channel phase differences angle(Y_i * conj(Y_j)), wrapped to
// (-pi, pi], stored [pair][bin][frame].
struct IpdObservations {
  std::vector<ChannelPair> pairs;
  int bins = 0;
  int frames = 0;
  std::vector<double> omega;  // rad/sample per bin
  std::vector<double> phi;

  int num_pairs() const { return static_cast<int>(pairs.size()); }
  std::span<const double> row(int p, int f) const {
    return std::span<const double>(phi).subspan(
        (static_cast<std::size_t>(p) * bins + f) * frames, frames);
  }
};

// Wraps an angle to (-pi, pi].
double wrap_phase(double x);

IpdObservations compute_ipd(const MultichannelSpectrogram& spec,
                            std::span<const ChannelPair> pairs);
IpdObservations compute_ipd(const MultichannelSpectrogram& spec);

struct EmConfig {
  double tau_max = 16.0;     // samples
  double tau_step = 0.5;     // candidate grid spacing, samples
  double sigma2_floor = 1e-4;  // rad^2
  double sigma2_max = 1e6;     // rad^2, effectively uniform
  double prior_min = 0.01;
  double prior_max = 0.99;
};

// Candidate delays {-tau_max, -tau_max + step, ..., tau_max}.
std::vector<double> delay_grid(const EmConfig& cfg);

// Speech source: per-pair delay and per-bin variance of a Gaussian IPD
// residual renormalized over (-pi, pi]. Noise source: uniform IPD.
struct SpatialParams {
  std::vector<double> tau;     // per pair, samples
  std::vector<double> sigma2;  // per bin, rad^2
  double prior = 0.5;          // speech prior

  friend bool operator==(const SpatialParams&, const SpatialParams&) = default;
};

struct Posterior {
  Mask mask;
  double loglik = 0.0;
};

struct EmState {
  SpatialParams params;
  Mask mask;
  double loglik = 0.0;
  int iteration = 0;
  // loglik_trace[k] is the data log-likelihood of the parameters after k
  // M-steps (entry 0 is the initial state).
  std::vector<double> loglik_trace;
};

Posterior e_step(const IpdObservations& obs, const SpatialParams& params);

// M-step with no previous parameters: delays come from a mask-weighted
// PHAT histogram over the candidate grid.
SpatialParams m_step(const IpdObservations& obs, const Mask& mask,
                     const EmConfig& cfg = {});

// M-step refining `current`; the current delays are always candidates, so
// the expected complete-data log-likelihood never decreases.
SpatialParams m_step(const IpdObservations& obs, const Mask& mask,
                     const SpatialParams& current, const EmConfig& cfg = {});

// With no init mask the state is built from a uniform 0.5 mask, so passing
// an all-0.5 mask yields the same state.
EmState init_state(const IpdObservations& obs, const Mask* init_mask,
                   const EmConfig& cfg = {});

// Called on held iterations with the fresh posterior; returns the mask fed
// to the following M-step.
using HoldHook = std::function<Mask(int iteration, const Mask& posterior)>;

struct EmSchedule {
  int iterations = 16;
  int hold_iterations = 0;
};

EmState run_em(const IpdObservations& obs, const Mask* init_mask,
               const EmSchedule& schedule, const HoldHook& hold,
               const EmConfig& cfg = {});

// Iterations 1..hold_iters average the posterior with `hold_mask` before
// the M-step. A null hold mask or hold_iters == 0 gives plain EM.
EmState run_em(const IpdObservations& obs, const Mask* init_mask, int iters,
               const Mask* hold_mask, int hold_iters,
               const EmConfig& cfg = {});

}  // namespace mcse

#endif  // MCSE_SPATIAL_EM_H_
