#ifndef MCSE_NOISE_TRACKING_H_
#define MCSE_NOISE_TRACKING_H_

#include <span>
#include <vector>

#include "mcse/beamformer.h"
#include "mcse/mask.h"
#include "mcse/signal.h"

namespace mcse {

// Real [bins x frames] matrix, frames contiguous within a bin.
class PowerMatrix {
 public:
  PowerMatrix() = default;
  PowerMatrix(int bins, int frames, double fill = 0.0)
      : bins_(bins),
        frames_(frames),
        values_(static_cast<std::size_t>(bins) * frames, fill) {}

  int bins() const { return bins_; }
  int frames() const { return frames_; }
  double& operator()(int f, int t) {
    return values_[static_cast<std::size_t>(f) * frames_ + t];
  }
  double operator()(int f, int t) const {
    return values_[static_cast<std::size_t>(f) * frames_ + t];
  }
  std::span<const double> row(int f) const {
    return std::span<const double>(values_).subspan(
        static_cast<std::size_t>(f) * frames_, frames_);
  }
  std::span<double> row(int f) {
    return std::span<double>(values_).subspan(
        static_cast<std::size_t>(f) * frames_, frames_);
  }
  std::span<const double> values() const { return values_; }

 private:
  int bins_ = 0;
  int frames_ = 0;
  std::vector<double> values_;
};

// |Y|^2 of one channel.
PowerMatrix power_spectrum(const MultichannelSpectrogram& spec, int channel);

struct NoiseTrack {
  PowerMatrix lambda_n;  // noise PSD estimate
  PowerMatrix p_speech;  // speech presence in [0, 1]
  bool window_clamped = false;
};

struct MinimaParams {
  int window_frames = 96;
  double alpha_s = 0.85;  // periodogram smoothing
  double bias = 1.66;     // B_min
};

// B_min times the minimum of the smoothed periodogram over the trailing
// window. Windows longer than the signal are clamped and flagged.
NoiseTrack minima_track(const PowerMatrix& power, const MinimaParams& params);
NoiseTrack minima_track(const PowerMatrix& power, int window_frames);

struct McraParams {
  double alpha_d = 0.95;  // noise averaging
  double delta = 5.0;     // presence threshold on smoothed / minimum
  int window_frames = 96;
  double alpha_s = 0.85;  // periodogram smoothing for the minimum search
  double alpha_p = 0.2;   // presence smoothing
};

NoiseTrack mcra_track(const PowerMatrix& power, const McraParams& params = {});

// lambda(t) = lambda(t-1) + (1 - alpha_d)(1 - p)(power - lambda(t-1)), i.e.
// averaging with alpha_d + (1 - alpha_d) p. Frames with p == 1 leave the
// estimate bitwise unchanged. lambda starts at the first frame's power.
PowerMatrix recursive_noise_update(const PowerMatrix& power,
                                   const PowerMatrix& p_speech,
                                   double alpha_d);

// Wiener-style mask max(0, 1 - lambda / power); zero-power bins map to 0.
Mask wiener_mask(const PowerMatrix& power, const PowerMatrix& lambda_n);

struct McsppParams {
  double alpha_d = 0.95;       // noise covariance averaging
  double speech_forget = 0.98;  // speech covariance forgetting factor
  double slope = 1.0;           // logistic slope per dB
  double offset_db = 3.0;       // a-posteriori SNR at q = 0.5
  double snr_smoothing = 0.8;   // recursive averaging of y y^H for psi
  int init_frames = 10;         // frames averaged for the initial Phi_n
  int block_frames = 8;         // frames sharing one set of MVDR weights
  int ref_channel = 0;
  McraParams single_channel;    // used when C == 1
};

struct McsppResult {
  MultichannelSpectrogram enhanced;  // single channel
  Mask presence;                     // q(f, t)
};

// Multichannel speech presence from the a-posteriori SNR
// psi = trace(Phi_n^-1 Phi_y) / C, with Phi_y a short recursive average of
// y y^H, mapped through logistic(slope * (dB(psi) - offset)). The presence
// gates recursive Phi_n averaging; Phi_s is a presence-weighted running
// average. MVDR weights are refreshed once per
// block from the estimates at the end of that block.
McsppResult mcspp_enhance(const MultichannelSpectrogram& spec,
                          const McsppParams& params = {});

// Tracked noise covariance after every frame of one bin, for inspection.
std::vector<ComplexMatrix> mcspp_noise_trajectory(
    const MultichannelSpectrogram& spec, int bin,
    const McsppParams& params = {});

}  // namespace mcse

#endif  // MCSE_NOISE_TRACKING_H_
