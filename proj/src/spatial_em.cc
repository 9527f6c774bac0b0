#include "mcse/spatial_em.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mcse/error.h"

namespace mcse {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_mask(const IpdObservations& obs, const Mask& mask) {
  if (mask.bins() != obs.bins || mask.frames() != obs.frames) {
    throw Error(Errc::kShape, "mask " + std::to_string(mask.bins()) + "x" +
                                  std::to_string(mask.frames()) +
                                  " does not match observations " +
                                  std::to_string(obs.bins) + "x" +
                                  std::to_string(obs.frames));
  }
}

double clamp_prior(double mean, const EmConfig& cfg) {
  return std::clamp(mean, cfg.prior_min, cfg.prior_max);
}

// Mask mass per bin; throws on an all-zero mask.
std::vector<double> bin_weights(const Mask& mask, double* total) {
  std::vector<double> w(mask.bins(), 0.0);
  double sum = 0.0;
  for (int f = 0; f < mask.bins(); ++f) {
    for (float v : mask.row(f)) w[f] += v;
    sum += w[f];
  }
  if (!(sum > 0.0)) {
    throw Error(Errc::kDegenerate, "M-step received an all-zero mask");
  }
  *total = sum;
  return w;
}

// Sum over frames of mask * wrapped residual^2 for one (pair, bin) row.
double weighted_residual(std::span<const double> phi, std::span<const float> m,
                         double shift) {
  double acc = 0.0;
  for (std::size_t t = 0; t < phi.size(); ++t) {
    const double r = wrap_phase(phi[t] - shift);
    acc += m[t] * r * r;
  }
  return acc;
}

// Mass of N(0, s) on (-pi, pi].
double circle_mass(double s) { return std::erf(kPi / std::sqrt(2.0 * s)); }

// Variance of N(0, s) truncated to (-pi, pi]; increases from 0 to pi^2/3.
double truncated_variance(double s) {
  const double a = kPi / std::sqrt(s);
  const double pdf = std::exp(-0.5 * a * a) / std::sqrt(kTwoPi);
  return s * (1.0 - 2.0 * a * pdf / circle_mass(s));
}

// Maximum-likelihood s for a truncated normal whose mean squared residual is
// `v`, restricted to [lo, hi]. The log-likelihood is concave in 1/s, so the
// restricted optimum is the clamped root of truncated_variance(s) = v.
double fit_truncated_variance(double v, double lo, double hi) {
  if (v <= truncated_variance(lo)) return lo;
  if (v >= truncated_variance(hi)) return hi;
  double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (a + b);
    (truncated_variance(std::exp(mid)) < v ? a : b) = mid;
  }
  return std::exp(0.5 * (a + b));
}

// Per-bin variance given delays; bins with no mask mass keep `fallback`.
std::vector<double> fit_sigma2(const IpdObservations& obs, const Mask& mask,
                               std::span<const double> tau,
                               std::span<const double> weight,
                               std::span<const double> fallback,
                               const EmConfig& cfg) {
  std::vector<double> sigma2(obs.bins);
  const int pairs = obs.num_pairs();
  for (int f = 0; f < obs.bins; ++f) {
    if (!(weight[f] > 0.0)) {
      sigma2[f] = fallback[f];
      continue;
    }
    double acc = 0.0;
    for (int p = 0; p < pairs; ++p) {
      acc += weighted_residual(obs.row(p, f), mask.row(f),
                               obs.omega[f] * tau[p]);
    }
    sigma2[f] = fit_truncated_variance(acc / (pairs * weight[f]),
                                       cfg.sigma2_floor, cfg.sigma2_max);
  }
  return sigma2;
}

// Mask-weighted PHAT histogram: each frame votes for the grid delay that
// maximizes its weighted steered phase coherence, with weight equal to the
// frame's mask mass. The heaviest bin wins; ties go to the smaller |tau|.
double phat_histogram_delay(const IpdObservations& obs, const Mask& mask,
                            int p, std::span<const double> grid) {
  std::vector<double> votes(grid.size(), 0.0);
  std::vector<double> score(grid.size());
  for (int t = 0; t < obs.frames; ++t) {
    double frame_mass = 0.0;
    for (int f = 0; f < obs.bins; ++f) frame_mass += mask(f, t);
    if (!(frame_mass > 0.0)) continue;
    std::ranges::fill(score, 0.0);
    for (int f = 0; f < obs.bins; ++f) {
      const float m = mask(f, t);
      if (m == 0.0f) continue;
      const double phi = obs.row(p, f)[t];
      for (std::size_t g = 0; g < grid.size(); ++g) {
        score[g] += m * std::cos(phi - obs.omega[f] * grid[g]);
      }
    }
    const auto best = std::ranges::max_element(score) - score.begin();
    votes[best] += frame_mass;
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (votes[g] > votes[best] ||
        (votes[g] == votes[best] &&
         std::abs(grid[g]) < std::abs(grid[best]))) {
      best = g;
    }
  }
  return grid[best];
}

}  // namespace

std::vector<ChannelPair> default_pairs(int channels) {
  std::vector<ChannelPair> pairs;
  for (int c = 1; c < channels; ++c) pairs.push_back({0, c});
  return pairs;
}

double wrap_phase(double x) {
  return x - kTwoPi * std::ceil((x - kPi) / kTwoPi);
}

IpdObservations compute_ipd(const MultichannelSpectrogram& spec,
                            std::span<const ChannelPair> pairs) {
  if (spec.channels() < 2) {
    throw Error(Errc::kShape, "phase differences need at least 2 channels");
  }
  if (pairs.empty()) {
    throw Error(Errc::kInvalidArgument, "no channel pairs given");
  }
  IpdObservations obs;
  obs.pairs.assign(pairs.begin(), pairs.end());
  obs.bins = spec.bins();
  obs.frames = spec.frames();
  obs.omega.resize(obs.bins);
  for (int f = 0; f < obs.bins; ++f) {
    obs.omega[f] = kTwoPi * f / spec.config().fft_size;
  }
  obs.phi.resize(pairs.size() * obs.bins * obs.frames);
  std::size_t k = 0;
  for (const ChannelPair& pair : pairs) {
    if (pair.first < 0 || pair.second < 0 || pair.first >= spec.channels() ||
        pair.second >= spec.channels() || pair.first == pair.second) {
      throw Error(Errc::kInvalidArgument,
                  "invalid channel pair (" + std::to_string(pair.first) +
                      "," + std::to_string(pair.second) + ")");
    }
    for (int f = 0; f < obs.bins; ++f) {
      const auto yi = spec.row(pair.first, f);
      const auto yj = spec.row(pair.second, f);
      for (int t = 0; t < obs.frames; ++t) {
        const std::complex<double> cross =
            std::complex<double>(yi[t]) * std::conj(std::complex<double>(yj[t]));
        obs.phi[k++] = wrap_phase(std::arg(cross));
      }
    }
  }
  return obs;
}

IpdObservations compute_ipd(const MultichannelSpectrogram& spec) {
  const auto pairs = default_pairs(spec.channels());
  return compute_ipd(spec, pairs);
}

std::vector<double> delay_grid(const EmConfig& cfg) {
  if (!(cfg.tau_step > 0.0) || !(cfg.tau_max >= 0.0)) {
    throw Error(Errc::kInvalidArgument, "invalid delay grid");
  }
  const int half = static_cast<int>(std::floor(cfg.tau_max / cfg.tau_step));
  std::vector<double> grid;
  grid.reserve(2 * half + 1);
  for (int i = -half; i <= half; ++i) grid.push_back(i * cfg.tau_step);
  return grid;
}

Posterior e_step(const IpdObservations& obs, const SpatialParams& params) {
  const int pairs = obs.num_pairs();
  if (static_cast<int>(params.tau.size()) != pairs ||
      static_cast<int>(params.sigma2.size()) != obs.bins) {
    throw Error(Errc::kShape, "spatial parameters do not match observations");
  }
  if (!(params.prior > 0.0 && params.prior < 1.0)) {
    throw Error(Errc::kInvalidArgument, "speech prior must lie in (0, 1)");
  }
  const double log_prior_speech = std::log(params.prior);
  const double log_noise = std::log1p(-params.prior) - pairs * std::log(kTwoPi);

  Posterior out{Mask(obs.bins, obs.frames), 0.0};
  std::vector<double> log_speech(obs.frames);
  for (int f = 0; f < obs.bins; ++f) {
    const double s2 = params.sigma2[f];
    if (!(s2 > 0.0) || !std::isfinite(s2)) {
      throw Error(Errc::kNumeric,
                  "non-positive variance at bin " + std::to_string(f));
    }
    const double norm =
        -0.5 * std::log(kTwoPi * s2) - std::log(circle_mass(s2));
    const double inv2 = 0.5 / s2;
    std::ranges::fill(log_speech, log_prior_speech + pairs * norm);
    for (int p = 0; p < pairs; ++p) {
      const auto phi = obs.row(p, f);
      const double shift = obs.omega[f] * params.tau[p];
      for (int t = 0; t < obs.frames; ++t) {
        const double r = wrap_phase(phi[t] - shift);
        log_speech[t] -= r * r * inv2;
      }
    }
    for (int t = 0; t < obs.frames; ++t) {
      const double a = log_speech[t];
      const double hi = std::max(a, log_noise);
      const double lse =
          hi + std::log(std::exp(a - hi) + std::exp(log_noise - hi));
      if (!std::isfinite(lse)) {
        throw Error(Errc::kNumeric,
                    "non-finite likelihood at bin " + std::to_string(f));
      }
      out.loglik += lse;
      out.mask(f, t) = static_cast<float>(std::exp(a - lse));
    }
  }
  return out;
}

SpatialParams m_step(const IpdObservations& obs, const Mask& mask,
                     const EmConfig& cfg) {
  check_mask(obs, mask);
  double total = 0.0;
  const auto weight = bin_weights(mask, &total);
  const auto grid = delay_grid(cfg);

  SpatialParams params;
  params.tau.resize(obs.num_pairs());
  for (int p = 0; p < obs.num_pairs(); ++p) {
    params.tau[p] = phat_histogram_delay(obs, mask, p, grid);
  }
  const std::vector<double> uniform(obs.bins, cfg.sigma2_max);
  params.sigma2 = fit_sigma2(obs, mask, params.tau, weight, uniform, cfg);
  params.prior =
      clamp_prior(total / (static_cast<double>(obs.bins) * obs.frames), cfg);
  return params;
}

SpatialParams m_step(const IpdObservations& obs, const Mask& mask,
                     const SpatialParams& current, const EmConfig& cfg) {
  check_mask(obs, mask);
  if (static_cast<int>(current.tau.size()) != obs.num_pairs() ||
      static_cast<int>(current.sigma2.size()) != obs.bins) {
    throw Error(Errc::kShape, "spatial parameters do not match observations");
  }
  double total = 0.0;
  const auto weight = bin_weights(mask, &total);
  const auto grid = delay_grid(cfg);

  SpatialParams params;
  params.tau.resize(obs.num_pairs());
  for (int p = 0; p < obs.num_pairs(); ++p) {
    // With sigma2 held at its current value the objective separates per
    // pair: minimize sum_f sum_t m * r^2 / sigma2_f.
    auto cost = [&](double tau) {
      double acc = 0.0;
      for (int f = 0; f < obs.bins; ++f) {
        if (!(weight[f] > 0.0)) continue;
        acc += weighted_residual(obs.row(p, f), mask.row(f),
                                 obs.omega[f] * tau) /
               current.sigma2[f];
      }
      return acc;
    };
    double best_tau = current.tau[p];
    double best_cost = cost(best_tau);
    for (double tau : grid) {
      const double c = cost(tau);
      if (c < best_cost) {
        best_cost = c;
        best_tau = tau;
      }
    }
    params.tau[p] = best_tau;
  }
  params.sigma2 =
      fit_sigma2(obs, mask, params.tau, weight, current.sigma2, cfg);
  params.prior =
      clamp_prior(total / (static_cast<double>(obs.bins) * obs.frames), cfg);
  return params;
}

EmState init_state(const IpdObservations& obs, const Mask* init_mask,
                   const EmConfig& cfg) {
  EmState state;
  state.mask = init_mask ? *init_mask : Mask(obs.bins, obs.frames, 0.5f);
  state.params = m_step(obs, state.mask, cfg);
  state.loglik = e_step(obs, state.params).loglik;
  state.loglik_trace.push_back(state.loglik);
  return state;
}

EmState run_em(const IpdObservations& obs, const Mask* init_mask,
               const EmSchedule& schedule, const HoldHook& hold,
               const EmConfig& cfg) {
  if (schedule.iterations < 1) {
    throw Error(Errc::kInvalidArgument, "EM needs at least one iteration");
  }
  if (schedule.hold_iterations < 0 ||
      schedule.hold_iterations > schedule.iterations) {
    throw Error(Errc::kInvalidArgument,
                "hold iterations must lie in [0, iterations]");
  }
  EmState state = init_state(obs, init_mask, cfg);
  for (int it = 1; it <= schedule.iterations; ++it) {
    Posterior post = e_step(obs, state.params);
    if (it > 1) state.loglik_trace.push_back(post.loglik);
    Mask drive = (hold && it <= schedule.hold_iterations)
                     ? hold(it, post.mask)
                     : std::move(post.mask);
    check_mask(obs, drive);
    state.params = m_step(obs, drive, state.params, cfg);
    state.iteration = it;
  }
  Posterior final_post = e_step(obs, state.params);
  state.mask = std::move(final_post.mask);
  state.loglik = final_post.loglik;
  state.loglik_trace.push_back(state.loglik);
  return state;
}

EmState run_em(const IpdObservations& obs, const Mask* init_mask, int iters,
               const Mask* hold_mask, int hold_iters, const EmConfig& cfg) {
  HoldHook hook;
  if (hold_mask != nullptr && hold_iters > 0) {
    check_mask(obs, *hold_mask);
    hook = [hold_mask](int, const Mask& posterior) {
      return combine(posterior, *hold_mask, CombineMode::kAverage);
    };
  }
  return run_em(obs, init_mask, EmSchedule{iters, hold_iters}, hook, cfg);
}

}  // namespace mcse
