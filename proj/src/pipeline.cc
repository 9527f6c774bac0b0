#include "mcse/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "mcse/beamformer.h"
#include "mcse/error.h"
#include "mcse/mask_io.h"
#include "mcse/metrics.h"
#include "mcse/noise_tracking.h"

namespace mcse {
namespace {

struct MethodName {
  Method method;
  const char* name;
};

constexpr MethodName kMethods[] = {
    {Method::kLstm, "lstm"},
    {Method::kMessl, "messl"},
    {Method::kCombineAverage, "combine:avg"},
    {Method::kCombineMax, "combine:max"},
    {Method::kCombineMin, "combine:min"},
    {Method::kLstmInitMessl, "lstm-init-messl"},
    {Method::kMcra, "mcra"},
    {Method::kMinima, "minima"},
    {Method::kMcspp, "mcspp"},
    {Method::kOracleIam, "oracle-iam"},
};

double post_floor(const EnhanceOptions& opts) {
  return opts.post_floor_db.value_or(std::numeric_limits<double>::infinity());
}

Mask lstm_mask_for(const MultichannelSpectrogram& spec,
                   const EnhanceOptions& opts, const EnhanceInputs& inputs) {
  if (inputs.lstm_mask != nullptr) {
    if (!inputs.lstm_mask->matches(spec)) {
      throw Error(Errc::kShape, "supplied LSTM mask does not match the input");
    }
    return *inputs.lstm_mask;
  }
  if (inputs.weights == nullptr) {
    throw Error(Errc::kInvalidArgument,
                "LSTM-based methods need network weights (--weights)");
  }
  return lstm_average_mask(spec, MaskEstimator(*inputs.weights), opts.threads);
}

Mask tracker_mask(const MultichannelSpectrogram& spec, Method method,
                  const EnhanceOptions& opts) {
  const PowerMatrix power = power_spectrum(spec, opts.ref_channel);
  const NoiseTrack track = method == Method::kMcra
                               ? mcra_track(power)
                               : minima_track(power, MinimaParams{});
  return wiener_mask(power, track.lambda_n);
}

CombineMode combine_mode(Method method) {
  switch (method) {
    case Method::kCombineMax:
      return CombineMode::kMax;
    case Method::kCombineMin:
      return CombineMode::kMin;
    default:
      return CombineMode::kAverage;
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

}  // namespace

Method parse_method(std::string_view name) {
  for (const auto& m : kMethods) {
    if (name == m.name) return m.method;
  }
  throw Error(Errc::kInvalidArgument, "unknown method '" + std::string(name) +
                                          "'; valid methods: " +
                                          valid_methods());
}

const char* method_name(Method method) {
  for (const auto& m : kMethods) {
    if (m.method == method) return m.name;
  }
  return "unknown";
}

std::string valid_methods() {
  std::string out;
  for (const auto& m : kMethods) {
    if (!out.empty()) out += ", ";
    out += m.name;
  }
  return out;
}

bool needs_lstm_mask(Method method) {
  return method == Method::kLstm || method == Method::kCombineAverage ||
         method == Method::kCombineMax || method == Method::kCombineMin ||
         method == Method::kLstmInitMessl;
}

bool needs_multichannel(Method method) {
  return method == Method::kMessl || method == Method::kCombineAverage ||
         method == Method::kCombineMax || method == Method::kCombineMin ||
         method == Method::kLstmInitMessl;
}

Mask lstm_average_mask(const MultichannelSpectrogram& spec,
                       const MaskEstimator& estimator, int threads) {
  const int C = spec.channels();
  std::vector<Mask> masks(C);
  const int workers = std::clamp(threads, 1, C);
  if (workers == 1) {
    for (int c = 0; c < C; ++c) masks[c] = estimator.predict(spec, c);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(C);
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) {
      pool.emplace_back([&] {
        for (int c = next++; c < C; c = next++) {
          try {
            masks[c] = estimator.predict(spec, c);
          } catch (...) {
            errors[c] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return average_channel_masks(masks);
}

EmState messl(const MultichannelSpectrogram& spec, const EnhanceOptions& opts) {
  const IpdObservations obs = compute_ipd(spec);
  return run_em(obs, nullptr, opts.iters, nullptr, 0, opts.em);
}

Mask lstm_init_messl_mask(const IpdObservations& obs, const GuideFn& guide,
                          const EnhanceOptions& opts) {
  const Mask init = guide(nullptr);
  HoldHook hook = [&guide](int, const Mask& posterior) {
    return combine(posterior, guide(&posterior), CombineMode::kAverage);
  };
  const EmState state = run_em(obs, &init, EmSchedule{opts.iters, opts.hold_iters},
                               hook, opts.em);
  return combine(guide(&state.mask), state.mask, CombineMode::kAverage);
}

Waveform enhance_with_mask(const MultichannelSpectrogram& spec,
                           const Mask& mask, const EnhanceOptions& opts,
                           std::size_t length) {
  if (!mask.is_valid()) {
    throw Error(Errc::kInvalidArgument, "driving mask outside [0, 1]");
  }
  const CovariancePair cov = estimate_covariances(spec, mask);
  const ComplexMatrix w = mvdr_weights(cov, opts.ref_channel);
  const MultichannelSpectrogram beam = apply_beamformer(spec, w);
  return istft(apply_postfilter(beam, mask, post_floor(opts))).resized(length);
}

EnhanceResult enhance(const Waveform& noisy, Method method,
                      const EnhanceOptions& opts, const EnhanceInputs& inputs) {
  if (needs_multichannel(method) && noisy.channels() < 2) {
    throw Error(Errc::kShape, std::string("method ") + method_name(method) +
                                  " needs at least 2 channels");
  }
  if (opts.ref_channel < 0 || opts.ref_channel >= noisy.channels()) {
    throw Error(Errc::kInvalidArgument, "reference channel out of range");
  }
  const MultichannelSpectrogram spec = stft(noisy, opts.stft);

  EnhanceResult result;
  switch (method) {
    case Method::kLstm:
      result.mask = lstm_mask_for(spec, opts, inputs);
      break;
    case Method::kMessl:
      result.mask = messl(spec, opts).mask;
      break;
    case Method::kCombineAverage:
    case Method::kCombineMax:
    case Method::kCombineMin: {
      const Mask lstm = lstm_mask_for(spec, opts, inputs);
      result.mask = combine(lstm, messl(spec, opts).mask, combine_mode(method));
      break;
    }
    case Method::kLstmInitMessl: {
      const Mask lstm = lstm_mask_for(spec, opts, inputs);
      result.mask = lstm_init_messl_mask(
          compute_ipd(spec), [&lstm](const Mask*) { return lstm; }, opts);
      break;
    }
    case Method::kMcra:
    case Method::kMinima:
      result.mask = tracker_mask(spec, method, opts);
      break;
    case Method::kMcspp: {
      McsppParams params;
      params.ref_channel = opts.ref_channel;
      McsppResult out = mcspp_enhance(spec, params);
      result.mask = std::move(out.presence);
      result.enhanced = istft(out.enhanced).resized(noisy.length());
      return result;
    }
    case Method::kOracleIam: {
      if (inputs.clean == nullptr) {
        throw Error(Errc::kInvalidArgument, "oracle-iam needs --clean");
      }
      if (inputs.clean->length() != noisy.length()) {
        throw Error(Errc::kShape, "clean and noisy lengths differ");
      }
      const MultichannelSpectrogram clean =
          stft(inputs.clean->extract_channel(0), opts.stft);
      result.mask = ideal_amplitude_mask(
          clean, spec.extract_channel(opts.ref_channel), 0);
      break;
    }
  }
  result.enhanced = enhance_with_mask(spec, result.mask, opts, noisy.length());
  return result;
}

Evaluation evaluate(const Waveform& enhanced, const Waveform& reference,
                    const Waveform* noisy, int noisy_channel,
                    int frame_tolerance) {
  if (enhanced.sample_rate() != reference.sample_rate() ||
      (noisy && noisy->sample_rate() != reference.sample_rate())) {
    throw Error(Errc::kInvalidArgument, "sample rates differ");
  }
  Evaluation e;
  std::size_t n = std::min(enhanced.length(), reference.length());
  if (noisy) n = std::min(n, noisy->length());
  const std::size_t longest =
      std::max({enhanced.length(), reference.length(),
                noisy ? noisy->length() : std::size_t{0}});
  if (longest - n > static_cast<std::size_t>(frame_tolerance)) {
    e.warnings.push_back("lengths differ by " + std::to_string(longest - n) +
                         " samples; trimmed to " + std::to_string(n));
  }
  const auto ref = reference.channel(0).first(n);
  e.si_sdr = si_sdr(enhanced.channel(0).first(n), ref);
  e.seg_snr = seg_snr(enhanced.channel(0).first(n), ref, reference.sample_rate());
  if (noisy) {
    if (noisy_channel < 0 || noisy_channel >= noisy->channels()) {
      throw Error(Errc::kInvalidArgument, "noisy channel out of range");
    }
    const auto y = noisy->channel(noisy_channel).first(n);
    e.si_sdr_noisy = si_sdr(y, ref);
    e.seg_snr_noisy = seg_snr(y, ref, reference.sample_rate());
  }
  return e;
}

nlohmann::json evaluation_json(const std::string& utt, const Evaluation& e) {
  nlohmann::json j = {{"utt", utt}, {"si_sdr", e.si_sdr}, {"seg_snr", e.seg_snr}};
  if (e.si_sdr_noisy) {
    j["si_sdr_noisy"] = *e.si_sdr_noisy;
    j["seg_snr_noisy"] = *e.seg_snr_noisy;
    j["delta_si_sdr"] = e.si_sdr - *e.si_sdr_noisy;
    j["delta_seg_snr"] = e.seg_snr - *e.seg_snr_noisy;
  }
  if (!e.warnings.empty()) j["warnings"] = e.warnings;
  return j;
}

std::vector<nlohmann::json> evaluate_directory(
    const std::filesystem::path& enhanced_dir,
    const std::filesystem::path& reference_dir,
    const std::optional<std::filesystem::path>& noisy_dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(enhanced_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      files.push_back(entry.path());
    }
  }
  std::ranges::sort(files);
  std::vector<nlohmann::json> lines;
  std::vector<double> si, seg, dsi, dseg;
  for (const auto& path : files) {
    const auto ref_path = reference_dir / path.filename();
    if (!std::filesystem::exists(ref_path)) continue;
    const Waveform enhanced = load_wav(path);
    const Waveform reference = load_wav(ref_path);
    std::optional<Waveform> noisy;
    if (noisy_dir) noisy = load_wav(*noisy_dir / path.filename());
    const Evaluation e =
        evaluate(enhanced, reference, noisy ? &*noisy : nullptr);
    lines.push_back(evaluation_json(path.stem().string(), e));
    si.push_back(e.si_sdr);
    seg.push_back(e.seg_snr);
    if (e.si_sdr_noisy) {
      dsi.push_back(e.si_sdr - *e.si_sdr_noisy);
      dseg.push_back(e.seg_snr - *e.seg_snr_noisy);
    }
  }
  nlohmann::json agg = {{"aggregate", true},
                        {"count", si.size()},
                        {"mean_si_sdr", mean_of(si)},
                        {"mean_seg_snr", mean_of(seg)}};
  if (!dsi.empty()) {
    agg["mean_delta_si_sdr"] = mean_of(dsi);
    agg["mean_delta_seg_snr"] = mean_of(dseg);
  }
  lines.push_back(std::move(agg));
  return lines;
}

nlohmann::json config_json(Method method, const EnhanceOptions& opts) {
  nlohmann::json j = {{"method", method_name(method)},
                      {"fft", opts.stft.fft_size},
                      {"hop", opts.stft.hop},
                      {"ref_channel", opts.ref_channel},
                      {"iters", opts.iters},
                      {"hold", opts.hold_iters}};
  if (opts.post_floor_db) {
    j["post_floor_db"] = *opts.post_floor_db;
  } else {
    j["post_floor_db"] = nullptr;
  }
  return j;
}

std::vector<nlohmann::json> enhance_batch(const std::vector<BatchJob>& jobs,
                                          Method method,
                                          const EnhanceOptions& opts,
                                          const NetWeights* weights,
                                          int workers) {
  std::vector<nlohmann::json> records(jobs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const BatchJob& job = jobs[i];
      nlohmann::json rec = {{"utt", job.input.stem().string()},
                            {"method", method_name(method)}};
      try {
        const Waveform noisy = load_wav(job.input);
        std::optional<Waveform> clean;
        if (job.clean) clean = load_wav(*job.clean);
        EnhanceInputs inputs;
        inputs.weights = weights;
        inputs.clean = clean ? &*clean : nullptr;
        EnhanceOptions job_opts = opts;
        job_opts.threads = 1;
        const EnhanceResult out = enhance(noisy, method, job_opts, inputs);
        save_wav(out.enhanced, job.output_wav);
        write_mask(out.mask, job.output_mask);
        if (clean) {
          const Evaluation e = evaluate(out.enhanced, *clean, &noisy,
                                        opts.ref_channel);
          rec["si_sdr"] = e.si_sdr;
          rec["seg_snr"] = e.seg_snr;
          rec["si_sdr_noisy"] = *e.si_sdr_noisy;
        }
      } catch (const Error& err) {
        rec["error"] = errc_name(err.code());
        rec["message"] = err.what();
      }
      rec["config"] = config_json(method, opts);
      records[i] = std::move(rec);
    }
  };
  const int n = std::clamp(workers, 1, std::max<int>(1, jobs.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return records;
}

}  // namespace mcse
