// Scalar-loop BLSTM forward pass: a direct transcription of the LSTM
// recurrences, sharing no code with the inference engine.

#ifndef MCSE_TESTS_LSTM_ORACLE_H_
#define MCSE_TESTS_LSTM_ORACLE_H_

#include <cmath>
#include <vector>

#include "mcse/mask_net.h"

namespace mcse::testing {

using Matrix2d = std::vector<std::vector<double>>;

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// x is [T][F]; returns h as [T][H].
inline Matrix2d oracle_lstm(const Matrix2d& x, const LstmWeights& w) {
  const int H = w.hidden, F = w.inputs;
  const int T = static_cast<int>(x.size());
  std::vector<double> h(H, 0.0), c(H, 0.0);
  Matrix2d out(T, std::vector<double>(H));
  for (int t = 0; t < T; ++t) {
    std::vector<double> z(4 * H);
    for (int r = 0; r < 4 * H; ++r) {
      double acc = w.b[r];
      for (int k = 0; k < F; ++k) acc += double(w.W[r * F + k]) * x[t][k];
      for (int k = 0; k < H; ++k) acc += double(w.U[r * H + k]) * h[k];
      z[r] = acc;
    }
    for (int j = 0; j < H; ++j) {
      const double i_gate = logistic(z[j]);
      const double f_gate = logistic(z[H + j]);
      const double g_gate = std::tanh(z[2 * H + j]);
      const double o_gate = logistic(z[3 * H + j]);
      c[j] = f_gate * c[j] + i_gate * g_gate;
      h[j] = o_gate * std::tanh(c[j]);
    }
    out[t] = h;
  }
  return out;
}

// Full network on normalized features x [T][F]; returns mask as [F][T].
inline Matrix2d oracle_predict(const NetWeights& net, const Matrix2d& x) {
  const int H = net.fw.hidden, F = net.fw.inputs;
  const int T = static_cast<int>(x.size());
  const Matrix2d hf = oracle_lstm(x, net.fw);
  Matrix2d xr(x.rbegin(), x.rend());
  const Matrix2d hb_rev = oracle_lstm(xr, net.bw);
  Matrix2d mask(F, std::vector<double>(T));
  for (int t = 0; t < T; ++t) {
    const std::vector<double>& hb = hb_rev[T - 1 - t];
    for (int f = 0; f < F; ++f) {
      double acc = net.out_b[f];
      for (int k = 0; k < H; ++k) {
        acc += double(net.out_W[f * 2 * H + k]) * hf[t][k];
        acc += double(net.out_W[f * 2 * H + H + k]) * hb[k];
      }
      mask[f][t] = logistic(acc);
    }
  }
  return mask;
}

// Oracle feature normalization of one channel: [T][F].
inline Matrix2d oracle_features(const MultichannelSpectrogram& spec,
                                int channel, const FeatureStats& stats) {
  Matrix2d x(spec.frames(), std::vector<double>(spec.bins()));
  for (int t = 0; t < spec.frames(); ++t) {
    for (int f = 0; f < spec.bins(); ++f) {
      const double mag = std::abs(std::complex<double>(spec(channel, f, t)));
      x[t][f] = (20.0 * std::log10(mag + 1e-8) - stats.mean[f]) / stats.std[f];
    }
  }
  return x;
}

}  // namespace mcse::testing

#endif  // MCSE_TESTS_LSTM_ORACLE_H_
