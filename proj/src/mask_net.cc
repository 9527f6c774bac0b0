#include "mcse/mask_net.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

#include "mcse/error.h"

namespace mcse {
namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string dims_string(const std::vector<std::uint32_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

void expect_size(const std::string& name, std::size_t got,
                 std::size_t expected) {
  if (got != expected) {
    throw Error(Errc::kShape, "tensor '" + name + "' has " +
                                  std::to_string(got) + " values, expected " +
                                  std::to_string(expected));
  }
}

void expect_finite(const std::string& name, const std::vector<float>& v) {
  if (!std::ranges::all_of(v, [](float x) { return std::isfinite(x); })) {
    throw Error(Errc::kNumeric, "tensor '" + name + "' has non-finite values");
  }
}

RowMatrix to_matrix(const std::vector<float>& v, int rows, int cols) {
  RowMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = v[r * cols + c];
  }
  return m;
}

Eigen::VectorXd to_vector(const std::vector<float>& v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

// Bits of a standardized engine mapped to [0, 1); std distributions are not
// reproducible across standard libraries.
class FixtureRng {
 public:
  explicit FixtureRng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

RowMatrix normalize_features(const MultichannelSpectrogram& spec, int channel,
                             const FeatureStats& stats) {
  if (channel < 0 || channel >= spec.channels()) {
    throw Error(Errc::kShape,
                "channel " + std::to_string(channel) + " out of range");
  }
  const int bins = spec.bins();
  if (static_cast<int>(stats.mean.size()) != bins ||
      static_cast<int>(stats.std.size()) != bins) {
    throw Error(Errc::kShape, "feature stats have " +
                                  std::to_string(stats.mean.size()) +
                                  " bins, spectrogram has " +
                                  std::to_string(bins));
  }
  RowMatrix x(spec.frames(), bins);
  for (int f = 0; f < bins; ++f) {
    const auto row = spec.row(channel, f);
    const double mean = stats.mean[f];
    const double inv_std = 1.0 / stats.std[f];
    for (int t = 0; t < spec.frames(); ++t) {
      const double mag = std::abs(std::complex<double>(row[t]));
      x(t, f) = (20.0 * std::log10(mag + kFeatureEpsilon) - mean) * inv_std;
    }
  }
  return x;
}

RowMatrix lstm_forward(const RowMatrix& x, const LstmWeights& w) {
  if (x.cols() != w.inputs) {
    throw Error(Errc::kShape, "input has " + std::to_string(x.cols()) +
                                  " features, LSTM expects " +
                                  std::to_string(w.inputs));
  }
  const int H = w.hidden;
  const RowMatrix W = to_matrix(w.W, 4 * H, w.inputs);
  const RowMatrix U = to_matrix(w.U, 4 * H, H);
  const Eigen::VectorXd b = to_vector(w.b);

  RowMatrix h_seq(x.rows(), H);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const Eigen::VectorXd z = W * x.row(t).transpose() + U * h + b;
    for (int k = 0; k < H; ++k) {
      const double i = logistic(z[k]);
      const double f = logistic(z[H + k]);
      const double g = std::tanh(z[2 * H + k]);
      const double o = logistic(z[3 * H + k]);
      c[k] = f * c[k] + i * g;
      h[k] = o * std::tanh(c[k]);
    }
    h_seq.row(t) = h.transpose();
  }
  return h_seq;
}

MaskEstimator::MaskEstimator(const NetWeights& weights)
    : features_(weights.features()),
      hidden_(weights.hidden()),
      stats_(weights.stats) {
  validate_weights(weights);
  auto load = [this](const LstmWeights& w, Direction& d) {
    d.W = to_matrix(w.W, 4 * hidden_, features_);
    d.U = to_matrix(w.U, 4 * hidden_, hidden_);
    d.b = to_vector(w.b);
  };
  load(weights.fw, fw_);
  load(weights.bw, bw_);
  const RowMatrix out = to_matrix(weights.out_W, features_, 2 * hidden_);
  out_W_fw_ = out.leftCols(hidden_);
  out_W_bw_ = out.rightCols(hidden_);
  out_b_ = to_vector(weights.out_b);
}

RowMatrix MaskEstimator::run(const RowMatrix& x, const Direction& d) const {
  const int H = hidden_;
  RowMatrix h_seq(x.rows(), H);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd z(4 * H);
  Eigen::VectorXd u(4 * H);
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    // Per-frame products keep each step independent of its position.
    z.noalias() = d.W * x.row(t).transpose();
    u.noalias() = d.U * h;
    z += u;
    z += d.b;
    for (int k = 0; k < H; ++k) {
      const double i = logistic(z[k]);
      const double f = logistic(z[H + k]);
      const double g = std::tanh(z[2 * H + k]);
      const double o = logistic(z[3 * H + k]);
      c[k] = f * c[k] + i * g;
      h[k] = o * std::tanh(c[k]);
    }
    h_seq.row(t) = h.transpose();
  }
  return h_seq;
}

Mask MaskEstimator::predict_features(const RowMatrix& x) const {
  if (x.cols() != features_) {
    throw Error(Errc::kShape, "feature size " + std::to_string(x.cols()) +
                                  " does not match network input " +
                                  std::to_string(features_));
  }
  const Eigen::Index T = x.rows();
  const RowMatrix fw = run(x, fw_);
  const RowMatrix bw_rev = run(x.colwise().reverse(), bw_);

  constexpr float kLow = std::numeric_limits<float>::denorm_min();
  const float kHigh = std::nextafter(1.0f, 0.0f);
  Mask m(features_, static_cast<int>(T));
  Eigen::VectorXd a(features_);
  Eigen::VectorXd b(features_);
  for (Eigen::Index t = 0; t < T; ++t) {
    a.noalias() = out_W_fw_ * fw.row(t).transpose();
    b.noalias() = out_W_bw_ * bw_rev.row(T - 1 - t).transpose();
    for (int f = 0; f < features_; ++f) {
      const double v = logistic((a[f] + b[f]) + out_b_[f]);
      if (!std::isfinite(v)) {
        throw Error(Errc::kNumeric, "non-finite network activation");
      }
      m(f, static_cast<int>(t)) = std::clamp(static_cast<float>(v), kLow, kHigh);
    }
  }
  return m;
}

Mask MaskEstimator::predict(const MultichannelSpectrogram& spec,
                            int channel) const {
  if (spec.bins() != features_) {
    throw Error(Errc::kShape, "spectrogram has " + std::to_string(spec.bins()) +
                                  " bins, network expects " +
                                  std::to_string(features_));
  }
  return predict_features(normalize_features(spec, channel, stats_));
}

Mask predict_mask(const MultichannelSpectrogram& spec, int channel,
                  const NetWeights& weights, const FeatureStats& stats) {
  NetWeights w = weights;
  w.stats = stats;
  return MaskEstimator(w).predict(spec, channel);
}

Mask predict_mask(const MultichannelSpectrogram& spec, int channel,
                  const NetWeights& weights) {
  return MaskEstimator(weights).predict(spec, channel);
}

void validate_weights(const NetWeights& w) {
  const int H = w.fw.hidden;
  const int F = w.fw.inputs;
  if (H <= 0 || F <= 0) {
    throw Error(Errc::kShape, "tensor 'lstm.fw.U' gives non-positive sizes");
  }
  if (w.bw.hidden != H || w.bw.inputs != F) {
    throw Error(Errc::kShape, "tensor 'lstm.bw.W' disagrees with forward sizes");
  }
  const std::size_t h = H, f = F;
  for (const auto& [dir, lw] : {std::pair{"fw", &w.fw}, std::pair{"bw", &w.bw}}) {
    const std::string prefix = std::string("lstm.") + dir + ".";
    expect_size(prefix + "W", lw->W.size(), 4 * h * f);
    expect_size(prefix + "U", lw->U.size(), 4 * h * h);
    expect_size(prefix + "b", lw->b.size(), 4 * h);
    expect_finite(prefix + "W", lw->W);
    expect_finite(prefix + "U", lw->U);
    expect_finite(prefix + "b", lw->b);
  }
  expect_size("out.W", w.out_W.size(), f * 2 * h);
  expect_size("out.b", w.out_b.size(), f);
  expect_size("stats.mean", w.stats.mean.size(), f);
  expect_size("stats.std", w.stats.std.size(), f);
  expect_finite("out.W", w.out_W);
  expect_finite("out.b", w.out_b);
  expect_finite("stats.mean", w.stats.mean);
  if (!std::ranges::all_of(w.stats.std, [](float s) {
        return std::isfinite(s) && s > 0.0f;
      })) {
    throw Error(Errc::kNumeric, "tensor 'stats.std' must be positive");
  }
}

NetWeights weights_from_tensors(const std::vector<NamedTensor>& tensors) {
  std::map<std::string, const Tensor*> by_name;
  for (const auto& nt : tensors) by_name[nt.name] = &nt.tensor;
  auto get = [&](const std::string& name,
                 std::size_t ndim) -> const Tensor& {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw Error(Errc::kFormat, "missing tensor '" + name + "'");
    }
    if (it->second->dims.size() != ndim) {
      throw Error(Errc::kShape, "tensor '" + name + "' has dims " +
                                    dims_string(it->second->dims) + ", expected " +
                                    std::to_string(ndim) + " axes");
    }
    return *it->second;
  };
  auto expect_dims = [](const std::string& name, const Tensor& t,
                        const std::vector<std::uint32_t>& dims) {
    if (t.dims != dims) {
      throw Error(Errc::kShape, "tensor '" + name + "' has dims " +
                                    dims_string(t.dims) + ", expected " +
                                    dims_string(dims));
    }
  };

  const Tensor& fw_U = get("lstm.fw.U", 2);
  const std::uint32_t H = fw_U.dims[1];
  const Tensor& fw_W = get("lstm.fw.W", 2);
  const std::uint32_t F = fw_W.dims[1];
  if (H == 0 || F == 0) {
    throw Error(Errc::kShape, "tensor 'lstm.fw.U' has zero-sized dims");
  }

  NetWeights w;
  for (const char* dir : {"fw", "bw"}) {
    const std::string prefix = std::string("lstm.") + dir + ".";
    LstmWeights& lw = std::string(dir) == "fw" ? w.fw : w.bw;
    const Tensor& W = get(prefix + "W", 2);
    const Tensor& U = get(prefix + "U", 2);
    const Tensor& b = get(prefix + "b", 1);
    expect_dims(prefix + "W", W, {4 * H, F});
    expect_dims(prefix + "U", U, {4 * H, H});
    expect_dims(prefix + "b", b, {4 * H});
    lw.hidden = static_cast<int>(H);
    lw.inputs = static_cast<int>(F);
    lw.W = W.data;
    lw.U = U.data;
    lw.b = b.data;
  }
  const Tensor& out_W = get("out.W", 2);
  const Tensor& out_b = get("out.b", 1);
  const Tensor& mean = get("stats.mean", 1);
  const Tensor& std_ = get("stats.std", 1);
  expect_dims("out.W", out_W, {F, 2 * H});
  expect_dims("out.b", out_b, {F});
  expect_dims("stats.mean", mean, {F});
  expect_dims("stats.std", std_, {F});
  w.out_W = out_W.data;
  w.out_b = out_b.data;
  w.stats.mean = mean.data;
  w.stats.std = std_.data;
  validate_weights(w);
  return w;
}

std::vector<NamedTensor> weights_to_tensors(const NetWeights& w) {
  validate_weights(w);
  const auto H = static_cast<std::uint32_t>(w.hidden());
  const auto F = static_cast<std::uint32_t>(w.features());
  return {
      {"lstm.fw.W", {{4 * H, F}, w.fw.W}},
      {"lstm.fw.U", {{4 * H, H}, w.fw.U}},
      {"lstm.fw.b", {{4 * H}, w.fw.b}},
      {"lstm.bw.W", {{4 * H, F}, w.bw.W}},
      {"lstm.bw.U", {{4 * H, H}, w.bw.U}},
      {"lstm.bw.b", {{4 * H}, w.bw.b}},
      {"out.W", {{F, 2 * H}, w.out_W}},
      {"out.b", {{F}, w.out_b}},
      {"stats.mean", {{F}, w.stats.mean}},
      {"stats.std", {{F}, w.stats.std}},
  };
}

NetWeights load_weights(const std::filesystem::path& path) {
  return weights_from_tensors(read_mnw1(path));
}

void save_weights(const NetWeights& weights,
                  const std::filesystem::path& path) {
  write_mnw1(path, weights_to_tensors(weights));
}

NetWeights make_random_weights(std::uint64_t seed, int hidden, int features,
                               double scale) {
  if (hidden <= 0 || features <= 0) {
    throw Error(Errc::kInvalidArgument, "hidden and features must be > 0");
  }
  FixtureRng rng(seed);
  auto fill = [&](std::size_t n) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(rng.uniform(-scale, scale));
    return v;
  };
  const std::size_t H = hidden, F = features;
  NetWeights w;
  for (LstmWeights* lw : {&w.fw, &w.bw}) {
    lw->hidden = hidden;
    lw->inputs = features;
    lw->W = fill(4 * H * F);
    lw->U = fill(4 * H * H);
    lw->b = fill(4 * H);
  }
  w.out_W = fill(F * 2 * H);
  w.out_b = fill(F);
  w.stats.mean.assign(F, 0.0f);
  w.stats.std.assign(F, 20.0f);
  return w;
}

}  // namespace mcse
