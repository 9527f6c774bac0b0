// Command-line front end: enhance, evaluate, synth, make-reference and
// gen-weights.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mcse/error.h"
#include "mcse/mask_io.h"
#include "mcse/mask_net.h"
#include "mcse/pipeline.h"
#include "mcse/reference.h"
#include "mcse/scene.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void emit_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << "\n";
}

void write_lines(const std::vector<json>& lines,
                 const std::optional<fs::path>& path) {
  if (!path) {
    for (const auto& l : lines) std::cout << l.dump() << "\n";
    return;
  }
  std::ofstream out(*path, std::ios::trunc);
  if (!out) throw mcse::Error(mcse::Errc::kIo, "cannot write " + path->string());
  for (const auto& l : lines) out << l.dump() << "\n";
}

std::vector<fs::path> wav_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      files.push_back(entry.path());
    }
  }
  std::ranges::sort(files);
  return files;
}

struct EnhanceArgs {
  std::string input;
  std::string out;
  std::string method;
  std::string weights;
  std::string clean;
  std::string mask_out;
  std::string lstm_mask;
  std::string report;
  int fft = 1024;
  int hop = 512;
  int ref_channel = 0;
  int iters = 16;
  int hold = 11;
  std::optional<double> post_floor_db;
  int jobs = 1;
  int threads = 1;
};

int run_enhance(const EnhanceArgs& a) {
  const mcse::Method method = mcse::parse_method(a.method);
  mcse::EnhanceOptions opts;
  opts.stft.fft_size = a.fft;
  opts.stft.hop = a.hop;
  opts.ref_channel = a.ref_channel;
  opts.iters = a.iters;
  opts.hold_iters = a.hold;
  opts.post_floor_db = a.post_floor_db;
  opts.threads = a.threads;

  std::optional<mcse::NetWeights> weights;
  if (!a.weights.empty()) weights = mcse::load_weights(a.weights);
  if (mcse::needs_lstm_mask(method) && !weights && a.lstm_mask.empty()) {
    throw mcse::Error(mcse::Errc::kInvalidArgument,
                      std::string("method ") + a.method +
                          " needs --weights or --lstm-mask");
  }

  const std::optional<fs::path> report =
      a.report.empty() ? std::nullopt : std::optional<fs::path>(a.report);

  if (fs::is_directory(a.input)) {
    if (!a.lstm_mask.empty()) {
      throw mcse::Error(mcse::Errc::kInvalidArgument,
                        "--lstm-mask applies to single-file runs only");
    }
    fs::create_directories(a.out);
    std::vector<mcse::BatchJob> jobs;
    for (const auto& in : wav_files(a.input)) {
      mcse::BatchJob job{in, fs::path(a.out) / in.filename(),
                         fs::path(a.out) / in.filename().replace_extension(".msk"),
                         std::nullopt};
      if (!a.clean.empty()) job.clean = fs::path(a.clean) / in.filename();
      jobs.push_back(std::move(job));
    }
    const auto lines = mcse::enhance_batch(jobs, method, opts,
                                           weights ? &*weights : nullptr, a.jobs);
    write_lines(lines, report);
    for (const auto& l : lines) {
      if (l.contains("error")) return 1;
    }
    return 0;
  }

  const mcse::Waveform noisy = mcse::load_wav(a.input);
  std::optional<mcse::Waveform> clean;
  if (!a.clean.empty()) clean = mcse::load_wav(a.clean);
  std::optional<mcse::Mask> lstm_mask;
  if (!a.lstm_mask.empty()) lstm_mask = mcse::read_mask(a.lstm_mask);

  mcse::EnhanceInputs inputs;
  inputs.weights = weights ? &*weights : nullptr;
  inputs.lstm_mask = lstm_mask ? &*lstm_mask : nullptr;
  inputs.clean = clean ? &*clean : nullptr;
  const mcse::EnhanceResult result = mcse::enhance(noisy, method, opts, inputs);
  mcse::save_wav(result.enhanced, a.out);
  if (!a.mask_out.empty()) mcse::write_mask(result.mask, a.mask_out);

  json rec = {{"utt", fs::path(a.input).stem().string()},
              {"method", mcse::method_name(method)}};
  if (clean) {
    const mcse::Evaluation e =
        mcse::evaluate(result.enhanced, *clean, &noisy, opts.ref_channel);
    rec["si_sdr"] = e.si_sdr;
    rec["seg_snr"] = e.seg_snr;
    rec["si_sdr_noisy"] = *e.si_sdr_noisy;
  }
  rec["config"] = mcse::config_json(method, opts);
  write_lines({rec}, report);
  return 0;
}

int run_evaluate(const std::string& enhanced, const std::string& reference,
                 const std::string& noisy, int noisy_channel,
                 const std::string& out) {
  const std::optional<fs::path> report =
      out.empty() ? std::nullopt : std::optional<fs::path>(out);
  if (fs::is_directory(enhanced)) {
    std::optional<fs::path> noisy_dir;
    if (!noisy.empty()) noisy_dir = noisy;
    write_lines(mcse::evaluate_directory(enhanced, reference, noisy_dir), report);
    return 0;
  }
  const mcse::Waveform e = mcse::load_wav(enhanced);
  const mcse::Waveform r = mcse::load_wav(reference);
  std::optional<mcse::Waveform> y;
  if (!noisy.empty()) y = mcse::load_wav(noisy);
  const mcse::Evaluation ev =
      mcse::evaluate(e, r, y ? &*y : nullptr, noisy_channel);
  write_lines({mcse::evaluation_json(fs::path(enhanced).stem().string(), ev)},
              report);
  return 0;
}

int run_synth(std::uint64_t seed, int channels, double snr,
              double duration, const std::string& noise,
              const std::vector<double>& delays, std::optional<double> close_snr,
              const std::string& out) {
  mcse::SceneConfig cfg;
  cfg.seed = seed;
  cfg.channels = channels;
  cfg.snr_db = snr;
  cfg.duration_s = duration;
  cfg.noise = mcse::parse_noise_kind(noise);
  cfg.delays = delays;
  const mcse::Scene scene = mcse::synth_scene(cfg);
  fs::create_directories(out);
  mcse::save_wav(scene.noisy, fs::path(out) / "noisy.wav");
  mcse::save_wav(scene.clean, fs::path(out) / "clean.wav");
  json meta = {{"seed", seed},
               {"channels", channels},
               {"snr_db", snr},
               {"duration_s", duration},
               {"noise", mcse::noise_kind_name(cfg.noise)},
               {"sample_rate", cfg.sample_rate},
               {"delays", scene.delays}};
  if (close_snr) {
    mcse::save_wav(mcse::close_mic(scene, seed, *close_snr),
                   fs::path(out) / "close.wav");
    meta["close_snr_db"] = *close_snr;
  }
  std::ofstream(fs::path(out) / "meta.json") << meta.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multichannel speech enhancement: mask-driven MVDR with "
               "LSTM masks and spatial clustering"};
  app.require_subcommand(1);

  EnhanceArgs ea;
  auto* enhance = app.add_subcommand("enhance", "Enhance a multichannel WAV "
                                                "(or every WAV in a directory)");
  enhance->add_option("--input", ea.input, "Noisy WAV or directory")->required();
  enhance->add_option("--out", ea.out, "Output WAV or directory")->required();
  enhance->add_option("--method", ea.method,
                      "One of: " + mcse::valid_methods())
      ->required();
  enhance->add_option("--weights", ea.weights, "MNW1 network weights");
  enhance->add_option("--lstm-mask", ea.lstm_mask,
                      "Precomputed channel-averaged mask (MSK1) used in place "
                      "of the network");
  enhance->add_option("--clean", ea.clean, "Clean reference WAV or directory");
  enhance->add_option("--mask-out", ea.mask_out, "Write the driving mask (MSK1)");
  enhance->add_option("--report", ea.report, "JSON-lines report path");
  enhance->add_option("--fft", ea.fft, "FFT size")->capture_default_str();
  enhance->add_option("--hop", ea.hop, "Hop size")->capture_default_str();
  enhance->add_option("--ref-channel", ea.ref_channel)->capture_default_str();
  enhance->add_option("--iters", ea.iters, "EM iterations")->capture_default_str();
  enhance->add_option("--hold", ea.hold, "Held EM iterations")->capture_default_str();
  enhance->add_option("--post-floor-db", ea.post_floor_db,
                      "Postfilter maximum suppression in dB (default: none)");
  enhance->add_option("--jobs", ea.jobs, "Parallel utterances in directory mode")
      ->capture_default_str();
  enhance->add_option("--threads", ea.threads, "Workers for per-channel masks")
      ->capture_default_str();

  std::string ev_enhanced, ev_ref, ev_noisy, ev_out;
  int ev_channel = 0;
  auto* evaluate = app.add_subcommand("evaluate", "Score enhanced audio");
  evaluate->add_option("--enhanced", ev_enhanced, "WAV or directory")->required();
  evaluate->add_option("--ref", ev_ref, "Reference WAV or directory")->required();
  evaluate->add_option("--noisy", ev_noisy, "Noisy WAV or directory");
  evaluate->add_option("--ref-channel", ev_channel, "Noisy channel to score");
  evaluate->add_option("--out", ev_out, "JSON-lines report path");

  std::uint64_t sy_seed = 0;
  int sy_channels = 6;
  double sy_snr = 0.0, sy_duration = 5.0;
  std::string sy_noise = "diffuse", sy_out;
  std::vector<double> sy_delays;
  std::optional<double> sy_close;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  synth->add_option("--seed", sy_seed)->capture_default_str();
  synth->add_option("--channels", sy_channels)->capture_default_str();
  synth->add_option("--snr", sy_snr, "Mixing SNR in dB")->capture_default_str();
  synth->add_option("--duration", sy_duration, "Seconds")->capture_default_str();
  synth->add_option("--noise", sy_noise, "white|diffuse|babble")->capture_default_str();
  synth->add_option("--delays", sy_delays, "Per-channel delays in samples")
      ->delimiter(',');
  synth->add_option("--close-snr", sy_close,
                    "Also write close.wav at this SNR in dB");
  synth->add_option("--out", sy_out, "Output directory")->required();

  std::string mr_array, mr_close, mr_out;
  int mr_fft = 1024, mr_hop = 512, mr_ref = 0;
  auto* make_ref = app.add_subcommand("make-reference",
                                      "Build a close-mic gated MVDR reference");
  make_ref->add_option("--array", mr_array)->required();
  make_ref->add_option("--close", mr_close)->required();
  make_ref->add_option("--out", mr_out)->required();
  make_ref->add_option("--fft", mr_fft)->capture_default_str();
  make_ref->add_option("--hop", mr_hop)->capture_default_str();
  make_ref->add_option("--ref-channel", mr_ref)->capture_default_str();

  std::uint64_t gw_seed = 0;
  int gw_hidden = 8, gw_features = 513;
  double gw_scale = 0.5;
  std::string gw_out;
  auto* gen = app.add_subcommand("gen-weights",
                                 "Write deterministic random MNW1 fixture weights");
  gen->add_option("--seed", gw_seed)->capture_default_str();
  gen->add_option("--hidden", gw_hidden)->capture_default_str();
  gen->add_option("--features", gw_features)->capture_default_str();
  gen->add_option("--scale", gw_scale)->capture_default_str();
  gen->add_option("--out", gw_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what());
    return 2;
  }

  try {
    if (*enhance) return run_enhance(ea);
    if (*evaluate) {
      return run_evaluate(ev_enhanced, ev_ref, ev_noisy, ev_channel, ev_out);
    }
    if (*synth) {
      return run_synth(sy_seed, sy_channels, sy_snr, sy_duration, sy_noise,
                       sy_delays, sy_close, sy_out);
    }
    if (*make_ref) {
      const mcse::Waveform array = mcse::load_wav(mr_array);
      const mcse::Waveform close = mcse::load_wav(mr_close);
      mcse::ReferenceOptions opts;
      opts.ref_channel = mr_ref;
      mcse::save_wav(mcse::build_reference(array, close, {mr_fft, mr_hop}, opts),
                     mr_out);
      return 0;
    }
    if (*gen) {
      mcse::save_weights(
          mcse::make_random_weights(gw_seed, gw_hidden, gw_features, gw_scale),
          gw_out);
      return 0;
    }
  } catch (const mcse::Error& e) {
    emit_error(mcse::errc_name(e.code()), e.what());
    return e.code() == mcse::Errc::kInvalidArgument ? 2 : 1;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return 1;
  }
  return 0;
}
