#include "mcse/mask.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "mcse/error.h"

namespace mcse {
namespace {

void check_pair(const MultichannelSpectrogram& clean,
                const MultichannelSpectrogram& noisy, int channel) {
  if (!clean.same_grid(noisy)) {
    throw Error(Errc::kShape, "clean and noisy spectrograms differ in shape");
  }
  if (channel < 0 || channel >= clean.channels() ||
      channel >= noisy.channels()) {
    throw Error(Errc::kShape,
                "channel " + std::to_string(channel) + " out of range");
  }
}

void check_shapes(const Mask& a, const Mask& b) {
  if (!a.same_shape(b)) {
    throw Error(Errc::kShape, "mask shapes differ: " +
                                  std::to_string(a.bins()) + "x" +
                                  std::to_string(a.frames()) + " vs " +
                                  std::to_string(b.bins()) + "x" +
                                  std::to_string(b.frames()));
  }
}

template <typename Fn>
Mask ratio_mask(const MultichannelSpectrogram& clean,
                const MultichannelSpectrogram& noisy, int channel, Fn value) {
  check_pair(clean, noisy, channel);
  Mask m(noisy.bins(), noisy.frames());
  for (int f = 0; f < noisy.bins(); ++f) {
    const auto s = clean.row(channel, f);
    const auto y = noisy.row(channel, f);
    for (int t = 0; t < noisy.frames(); ++t) {
      const double ym = std::abs(std::complex<double>(y[t]));
      if (ym == 0.0) {
        m(f, t) = 0.0f;
        continue;
      }
      const double v = value(std::complex<double>(s[t]),
                             std::complex<double>(y[t]), ym);
      m(f, t) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return m;
}

}  // namespace

Mask::Mask(int bins, int frames, float fill)
    : bins_(bins),
      frames_(frames),
      values_(static_cast<std::size_t>(bins) * frames, fill) {}

bool Mask::is_valid() const {
  return std::ranges::all_of(values_,
                             [](float v) { return v >= 0.0f && v <= 1.0f; });
}

CombineMode parse_combine_mode(std::string_view name) {
  if (name == "average" || name == "avg") return CombineMode::kAverage;
  if (name == "max") return CombineMode::kMax;
  if (name == "min") return CombineMode::kMin;
  throw Error(Errc::kInvalidArgument,
              "unknown combine mode '" + std::string(name) +
                  "' (expected average|max|min)");
}

Mask ideal_amplitude_mask(const MultichannelSpectrogram& clean,
                          const MultichannelSpectrogram& noisy, int channel) {
  return ratio_mask(clean, noisy, channel,
                    [](std::complex<double> s, std::complex<double>,
                       double ym) { return std::abs(s) / ym; });
}

Mask phase_sensitive_mask(const MultichannelSpectrogram& clean,
                          const MultichannelSpectrogram& noisy, int channel) {
  // cos(θs − θy)·|s|/|y| = Re(s·conj(y)) / |y|².
  return ratio_mask(clean, noisy, channel,
                    [](std::complex<double> s, std::complex<double> y,
                       double ym) { return (s * std::conj(y)).real() / (ym * ym); });
}

Mask average_channel_masks(std::span<const Mask> masks) {
  if (masks.empty()) {
    throw Error(Errc::kInvalidArgument, "cannot average an empty mask list");
  }
  for (const Mask& m : masks) check_shapes(masks.front(), m);
  const std::size_t n = masks.front().values().size();
  std::vector<double> acc(n, 0.0);
  for (const Mask& m : masks) {
    const auto v = m.values();
    for (std::size_t i = 0; i < n; ++i) acc[i] += v[i];
  }
  Mask out(masks.front().bins(), masks.front().frames());
  auto dst = out.values();
  const double scale = 1.0 / static_cast<double>(masks.size());
  for (std::size_t i = 0; i < n; ++i) {
    dst[i] = static_cast<float>(std::clamp(acc[i] * scale, 0.0, 1.0));
  }
  return out;
}

Mask combine(const Mask& a, const Mask& b, CombineMode mode) {
  check_shapes(a, b);
  Mask out(a.bins(), a.frames());
  const auto x = a.values();
  const auto y = b.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    switch (mode) {
      case CombineMode::kAverage:
        // Exact for x == y, so averaging a mask with itself is a no-op.
        dst[i] = (x[i] + y[i]) * 0.5f;
        break;
      case CombineMode::kMax:
        dst[i] = std::max(x[i], y[i]);
        break;
      case CombineMode::kMin:
        dst[i] = std::min(x[i], y[i]);
        break;
    }
  }
  return out;
}

MultichannelSpectrogram apply_mask(const MultichannelSpectrogram& spec,
                                   const Mask& m, int channel) {
  if (!m.matches(spec)) {
    throw Error(Errc::kShape, "mask does not match spectrogram grid");
  }
  if (channel < 0 || channel >= spec.channels()) {
    throw Error(Errc::kShape,
                "channel " + std::to_string(channel) + " out of range");
  }
  MultichannelSpectrogram out = spec;
  for (int f = 0; f < spec.bins(); ++f) {
    auto row = out.row(channel, f);
    for (int t = 0; t < spec.frames(); ++t) row[t] *= m(f, t);
  }
  return out;
}

}  // namespace mcse
