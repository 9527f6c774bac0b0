#ifndef MCSE_MASK_NET_H_
#define MCSE_MASK_NET_H_

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mcse/mask.h"
#include "mcse/signal.h"
#include "mcse/tensor_file.h"

namespace mcse {

// One LSTM direction. Gate blocks are stacked [input, forget, candidate,
// output] along the 4H axis; all matrices row-major.
struct LstmWeights {
  int hidden = 0;
  int inputs = 0;
  std::vector<float> W;  // [4H x F]
  std::vector<float> U;  // [4H x H]
  std::vector<float> b;  // [4H]
};

// Per-frequency dB feature statistics from the training set.
struct FeatureStats {
  std::vector<float> mean;
  std::vector<float> std;
};

struct NetWeights {
  LstmWeights fw;
  LstmWeights bw;
  std::vector<float> out_W;  // [F x 2H]
  std::vector<float> out_b;  // [F]
  FeatureStats stats;

  int hidden() const { return fw.hidden; }
  int features() const { return fw.inputs; }
};

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kFeatureEpsilon = 1e-8;

// (20 log10(|Y| + eps) - mean) / std, one row per frame.
RowMatrix normalize_features(const MultichannelSpectrogram& spec, int channel,
                             const FeatureStats& stats);

// Standard LSTM recurrence from a zero state. Returns [T x H].
RowMatrix lstm_forward(const RowMatrix& x, const LstmWeights& w);

// Inference engine holding double-precision copies of the weights.
// Immutable after construction; share freely across threads.
class MaskEstimator {
 public:
  explicit MaskEstimator(const NetWeights& weights);

  int features() const { return features_; }
  int hidden() const { return hidden_; }
  const FeatureStats& stats() const { return stats_; }

  // Mask from already-normalized features [T x F].
  Mask predict_features(const RowMatrix& x) const;
  Mask predict(const MultichannelSpectrogram& spec, int channel) const;

 private:
  struct Direction {
    RowMatrix W;
    RowMatrix U;
    Eigen::VectorXd b;
  };
  RowMatrix run(const RowMatrix& x, const Direction& d) const;

  int features_;
  int hidden_;
  Direction fw_;
  Direction bw_;
  RowMatrix out_W_fw_;
  RowMatrix out_W_bw_;
  Eigen::VectorXd out_b_;
  FeatureStats stats_;
};

Mask predict_mask(const MultichannelSpectrogram& spec, int channel,
                  const NetWeights& weights, const FeatureStats& stats);
Mask predict_mask(const MultichannelSpectrogram& spec, int channel,
                  const NetWeights& weights);

// Throws naming the first inconsistent tensor.
void validate_weights(const NetWeights& weights);

NetWeights weights_from_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> weights_to_tensors(const NetWeights& weights);

NetWeights load_weights(const std::filesystem::path& path);
void save_weights(const NetWeights& weights, const std::filesystem::path& path);

// Deterministic fixture weights: entries uniform in [-scale, scale] from a
// platform-independent generator. Stats are mean 0 dB, std 20 dB.
NetWeights make_random_weights(std::uint64_t seed, int hidden, int features,
                               double scale = 0.5);

}  // namespace mcse

#endif  // MCSE_MASK_NET_H_
