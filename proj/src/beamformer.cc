#include "mcse/beamformer.h"

#include <cmath>
#include <string>

#include "mcse/error.h"

namespace mcse {

CovariancePair estimate_covariances(const MultichannelSpectrogram& spec,
                                    const Mask& mask) {
  if (!mask.matches(spec)) {
    throw Error(Errc::kShape, "mask does not match spectrogram grid");
  }
  const int C = spec.channels();
  const int T = spec.frames();
  CovariancePair cov;
  cov.speech.reserve(spec.bins());
  cov.noise.reserve(spec.bins());
  Eigen::VectorXcd y(C);
  for (int f = 0; f < spec.bins(); ++f) {
    ComplexMatrix s = ComplexMatrix::Zero(C, C);
    ComplexMatrix n = ComplexMatrix::Zero(C, C);
    ComplexMatrix all = ComplexMatrix::Zero(C, C);
    double ws = 0.0, wn = 0.0;
    for (int t = 0; t < T; ++t) {
      for (int c = 0; c < C; ++c) y[c] = std::complex<double>(spec(c, f, t));
      const ComplexMatrix outer = y * y.adjoint();
      const double m = mask(f, t);
      s += m * outer;
      n += (1.0 - m) * outer;
      all += outer;
      ws += m;
      wn += 1.0 - m;
    }
    all /= static_cast<double>(T);
    bool degenerate = false;
    if (ws > 0.0) {
      s /= ws;
    } else {
      s = all;
      degenerate = true;
    }
    if (wn > 0.0) {
      n /= wn;
    } else {
      n = all;
      degenerate = true;
    }
    if (degenerate) cov.degenerate_bins.push_back(f);
    // Re-symmetrize against rounding.
    s = 0.5 * (s + s.adjoint()).eval();
    n = 0.5 * (n + n.adjoint()).eval();
    const double load = kNoiseLoading * n.trace().real() / C;
    n.diagonal().array() += load;
    cov.speech.push_back(std::move(s));
    cov.noise.push_back(std::move(n));
  }
  return cov;
}

ComplexMatrix mvdr_weights(const CovariancePair& cov, int ref_channel) {
  const int C = cov.channels();
  if (ref_channel < 0 || ref_channel >= C) {
    throw Error(Errc::kInvalidArgument,
                "reference channel " + std::to_string(ref_channel) +
                    " out of range for " + std::to_string(C) + " channels");
  }
  ComplexMatrix w(cov.bins(), C);
  for (int f = 0; f < cov.bins(); ++f) {
    const ComplexMatrix ratio =
        cov.noise[f].partialPivLu().solve(cov.speech[f]);
    // Phi_n^-1 Phi_s is similar to a PSD matrix, so its trace is real.
    const double trace = ratio.trace().real();
    if (!std::isfinite(trace) || !(trace > 0.0)) {
      throw Error(Errc::kDegenerate,
                  "degenerate covariances at bin " + std::to_string(f) +
                      " (trace " + std::to_string(trace) + ")");
    }
    w.row(f) = (ratio.col(ref_channel) / trace).transpose();
    if (!w.row(f).allFinite()) {
      throw Error(Errc::kNumeric,
                  "non-finite MVDR weights at bin " + std::to_string(f));
    }
  }
  return w;
}

MultichannelSpectrogram apply_beamformer(const MultichannelSpectrogram& spec,
                                         const ComplexMatrix& weights) {
  if (weights.rows() != spec.bins() || weights.cols() != spec.channels()) {
    throw Error(Errc::kShape, "beamformer weights are " +
                                  std::to_string(weights.rows()) + "x" +
                                  std::to_string(weights.cols()) +
                                  ", spectrogram has " +
                                  std::to_string(spec.bins()) + " bins and " +
                                  std::to_string(spec.channels()) +
                                  " channels");
  }
  MultichannelSpectrogram out(1, spec.frames(), spec.config(),
                              spec.sample_rate());
  for (int f = 0; f < spec.bins(); ++f) {
    auto dst = out.row(0, f);
    for (int t = 0; t < spec.frames(); ++t) {
      std::complex<double> acc = 0.0;
      for (int c = 0; c < spec.channels(); ++c) {
        acc += std::conj(weights(f, c)) * std::complex<double>(spec(c, f, t));
      }
      dst[t] = cfloat(static_cast<float>(acc.real()),
                      static_cast<float>(acc.imag()));
    }
  }
  return out;
}

double suppression_floor(double max_suppression_db) {
  if (std::isnan(max_suppression_db) || max_suppression_db < 0.0) {
    throw Error(Errc::kInvalidArgument,
                "maximum suppression must be a non-negative dB value");
  }
  return std::isinf(max_suppression_db)
             ? 0.0
             : std::pow(10.0, -max_suppression_db / 20.0);
}

MultichannelSpectrogram apply_postfilter(
    const MultichannelSpectrogram& spec_1ch, const Mask& m,
    double max_suppression_db) {
  const double floor = suppression_floor(max_suppression_db);
  if (!m.matches(spec_1ch)) {
    throw Error(Errc::kShape, "postfilter mask does not match spectrogram");
  }
  if (!m.is_valid()) {
    throw Error(Errc::kInvalidArgument, "postfilter mask outside [0, 1]");
  }
  MultichannelSpectrogram out = spec_1ch;
  for (int c = 0; c < out.channels(); ++c) {
    for (int f = 0; f < out.bins(); ++f) {
      auto row = out.row(c, f);
      for (int t = 0; t < out.frames(); ++t) {
        const double gain = std::max(static_cast<double>(m(f, t)), floor);
        row[t] = cfloat(static_cast<float>(row[t].real() * gain),
                        static_cast<float>(row[t].imag() * gain));
      }
    }
  }
  return out;
}

}  // namespace mcse
