#ifndef MCSE_MASK_H_
#define MCSE_MASK_H_

#include <span>
#include <string_view>
#include <vector>

#include "mcse/signal.h"

namespace mcse {

// Real time-frequency mask in [0, 1], stored frequency-major (frames
// contiguous within a bin).
class Mask {
 public:
  Mask() = default;
  Mask(int bins, int frames, float fill = 0.0f);

  int bins() const { return bins_; }
  int frames() const { return frames_; }

  float& operator()(int f, int t) {
    return values_[static_cast<std::size_t>(f) * frames_ + t];
  }
  float operator()(int f, int t) const {
    return values_[static_cast<std::size_t>(f) * frames_ + t];
  }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }
  std::span<const float> row(int f) const {
    return std::span<const float>(values_).subspan(
        static_cast<std::size_t>(f) * frames_, frames_);
  }

  bool same_shape(const Mask& other) const {
    return bins_ == other.bins_ && frames_ == other.frames_;
  }
  bool matches(const MultichannelSpectrogram& spec) const {
    return bins_ == spec.bins() && frames_ == spec.frames();
  }

  // True when every value lies in [0, 1].
  bool is_valid() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int bins_ = 0;
  int frames_ = 0;
  std::vector<float> values_;
};

enum class CombineMode { kAverage, kMax, kMin };

CombineMode parse_combine_mode(std::string_view name);

// clamp(|s|/|y|, 0, 1) on one channel; bins where |y| = 0 map to 0.
Mask ideal_amplitude_mask(const MultichannelSpectrogram& clean,
                          const MultichannelSpectrogram& noisy, int channel);

// clamp(cos(angle(s) - angle(y)) * |s|/|y|, 0, 1); |y| = 0 maps to 0.
Mask phase_sensitive_mask(const MultichannelSpectrogram& clean,
                          const MultichannelSpectrogram& noisy, int channel);

Mask average_channel_masks(std::span<const Mask> masks);

Mask combine(const Mask& a, const Mask& b, CombineMode mode);

// Scales channel `channel` of `spec` by the mask; other channels are
// returned unchanged.
MultichannelSpectrogram apply_mask(const MultichannelSpectrogram& spec,
                                   const Mask& m, int channel);

}  // namespace mcse

#endif  // MCSE_MASK_H_
