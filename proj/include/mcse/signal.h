#ifndef MCSE_SIGNAL_H_
#define MCSE_SIGNAL_H_

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace mcse {

using cfloat = std::complex<float>;

// Multichannel real signal, channel-major, all channels the same length.
class Waveform {
 public:
  Waveform() = default;
  Waveform(int channels, std::size_t length, int sample_rate);

  int channels() const { return channels_; }
  std::size_t length() const { return length_; }
  int sample_rate() const { return sample_rate_; }

  std::span<float> channel(int c);
  std::span<const float> channel(int c) const;

  float& at(int c, std::size_t n) { return samples_[c * length_ + n]; }
  float at(int c, std::size_t n) const { return samples_[c * length_ + n]; }

  // Single-channel copy of channel `c`.
  Waveform extract_channel(int c) const;

  // Copy truncated (or zero-padded) to `length` samples.
  Waveform resized(std::size_t length) const;

  std::span<const float> data() const { return samples_; }

  friend bool operator==(const Waveform&, const Waveform&) = default;

 private:
  int channels_ = 0;
  std::size_t length_ = 0;
  int sample_rate_ = 0;
  std::vector<float> samples_;
};

enum class SampleFormat { kPcm16, kFloat32 };

// Reads RIFF/WAVE files holding 16-bit PCM or 32-bit IEEE float samples.
// Samples are scaled to [-1, 1].
Waveform load_wav(const std::filesystem::path& path);

void save_wav(const Waveform& w, const std::filesystem::path& path,
              SampleFormat format = SampleFormat::kPcm16);

enum class WindowKind { kSqrtHann, kRectangular };

struct StftConfig {
  int fft_size = 1024;
  int hop = 512;
  WindowKind window = WindowKind::kSqrtHann;

  int bins() const { return fft_size / 2 + 1; }
  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

// Analysis window (the synthesis window is identical).
std::vector<double> make_window(WindowKind kind, int size);

// Throws unless 0 < hop <= fft_size, the FFT size is even, and the window
// pair overlap-adds to a constant at this hop.
void validate_stft_config(const StftConfig& cfg);

// Number of full frames in `length` samples; no tail padding.
int frame_count(std::size_t length, const StftConfig& cfg);

// Complex STFT values laid out [channel][bin][frame] with frames contiguous.
class MultichannelSpectrogram {
 public:
  MultichannelSpectrogram() = default;
  MultichannelSpectrogram(int channels, int frames, const StftConfig& cfg,
                          int sample_rate);

  int channels() const { return channels_; }
  int bins() const { return bins_; }
  int frames() const { return frames_; }
  const StftConfig& config() const { return config_; }
  int sample_rate() const { return sample_rate_; }

  cfloat& operator()(int c, int f, int t) {
    return values_[(static_cast<std::size_t>(c) * bins_ + f) * frames_ + t];
  }
  cfloat operator()(int c, int f, int t) const {
    return values_[(static_cast<std::size_t>(c) * bins_ + f) * frames_ + t];
  }

  // All frames of one (channel, bin) row.
  std::span<cfloat> row(int c, int f);
  std::span<const cfloat> row(int c, int f) const;

  std::span<cfloat> values() { return values_; }
  std::span<const cfloat> values() const { return values_; }

  MultichannelSpectrogram extract_channel(int c) const;

  bool same_grid(const MultichannelSpectrogram& other) const {
    return bins_ == other.bins_ && frames_ == other.frames_;
  }

  friend bool operator==(const MultichannelSpectrogram&,
                         const MultichannelSpectrogram&) = default;

 private:
  int channels_ = 0;
  int bins_ = 0;
  int frames_ = 0;
  StftConfig config_;
  int sample_rate_ = 0;
  std::vector<cfloat> values_;
};

MultichannelSpectrogram stft(const Waveform& w, const StftConfig& cfg = {});

// Weighted overlap-add synthesis. Output length is
// (frames - 1) * hop + fft_size.
Waveform istft(const MultichannelSpectrogram& spec);

}  // namespace mcse

#endif  // MCSE_SIGNAL_H_
