#ifndef MCSE_PIPELINE_H_
#define MCSE_PIPELINE_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mcse/mask.h"
#include "mcse/mask_net.h"
#include "mcse/signal.h"
#include "mcse/spatial_em.h"

namespace mcse {

enum class Method {
  kLstm,
  kMessl,
  kCombineAverage,
  kCombineMax,
  kCombineMin,
  kLstmInitMessl,
  kMcra,
  kMinima,
  kMcspp,
  kOracleIam,
};

Method parse_method(std::string_view name);
const char* method_name(Method method);
// Comma-separated list of accepted method strings.
std::string valid_methods();

bool needs_lstm_mask(Method method);
bool needs_multichannel(Method method);

struct EnhanceOptions {
  StftConfig stft;
  int ref_channel = 0;
  int iters = 16;
  int hold_iters = 11;
  // Postfilter suppression cap in dB; unset applies the mask unfloored.
  std::optional<double> post_floor_db;
  EmConfig em;
  int threads = 1;  // workers for per-channel mask inference
};

struct EnhanceInputs {
  const NetWeights* weights = nullptr;
  // Precomputed channel-averaged LSTM mask; takes precedence over weights.
  const Mask* lstm_mask = nullptr;
  const Waveform* clean = nullptr;  // required by oracle-iam
};

struct EnhanceResult {
  Waveform enhanced;  // single channel, same length as the input
  Mask mask;          // mask that drove the beamformer (presence for mcspp)
};

EnhanceResult enhance(const Waveform& noisy, Method method,
                      const EnhanceOptions& opts, const EnhanceInputs& inputs);

// Per-channel network masks averaged over channels. Channels are spread
// over `threads` workers; results do not depend on the thread count.
Mask lstm_average_mask(const MultichannelSpectrogram& spec,
                       const MaskEstimator& estimator, int threads = 1);

// Plain EM from the default initialization.
EmState messl(const MultichannelSpectrogram& spec, const EnhanceOptions& opts);

// Source of the single-channel guide mask for LSTM-initialized EM. Called
// with nullptr for the initial mask and with the current posterior on held
// iterations and for the final fusion.
using GuideFn = std::function<Mask(const Mask* posterior)>;

// EM initialized from the guide, averaging the posterior with the guide for
// the first hold_iters iterations, then fused with the guide by averaging.
Mask lstm_init_messl_mask(const IpdObservations& obs, const GuideFn& guide,
                          const EnhanceOptions& opts);

// Mask-driven MVDR on the reference channel followed by the postfilter with
// the same mask; output padded to `length` samples.
Waveform enhance_with_mask(const MultichannelSpectrogram& spec,
                           const Mask& mask, const EnhanceOptions& opts,
                           std::size_t length);

struct Evaluation {
  double si_sdr = 0.0;
  double seg_snr = 0.0;
  std::optional<double> si_sdr_noisy;
  std::optional<double> seg_snr_noisy;
  std::vector<std::string> warnings;
};

// Compares channel 0 of `enhanced` against channel 0 of `reference`, and
// optionally the noisy reference channel as the baseline. Lengths are
// trimmed to the shorter signal.
Evaluation evaluate(const Waveform& enhanced, const Waveform& reference,
                    const Waveform* noisy = nullptr, int noisy_channel = 0,
                    int frame_tolerance = 1024);

nlohmann::json evaluation_json(const std::string& utt, const Evaluation& e);

// One record per file of `enhanced_dir` with a same-named reference,
// followed by an aggregate record of means.
std::vector<nlohmann::json> evaluate_directory(
    const std::filesystem::path& enhanced_dir,
    const std::filesystem::path& reference_dir,
    const std::optional<std::filesystem::path>& noisy_dir);

nlohmann::json config_json(Method method, const EnhanceOptions& opts);

struct BatchJob {
  std::filesystem::path input;
  std::filesystem::path output_wav;
  std::filesystem::path output_mask;
  std::optional<std::filesystem::path> clean;
};

// Runs `enhance` over jobs on a pool of `workers`; returns one report record
// per job in job order.
std::vector<nlohmann::json> enhance_batch(const std::vector<BatchJob>& jobs,
                                          Method method,
                                          const EnhanceOptions& opts,
                                          const NetWeights* weights,
                                          int workers);

}  // namespace mcse

#endif  // MCSE_PIPELINE_H_
