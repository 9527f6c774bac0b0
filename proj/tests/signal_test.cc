#include <cmath>
#include <cstring>
#include <random>

#include "doctest.h"
#include "mcse/error.h"
#include "mcse/signal.h"
#include "test_util.h"

namespace mcse {
namespace {

using testing::kPi;

void write_le16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}

void write_le32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

std::vector<unsigned char> wav_bytes(int channels, int sample_rate,
                                     int bits, int format_tag,
                                     const std::vector<unsigned char>& data) {
  std::vector<unsigned char> b;
  for (char ch : std::string("RIFF")) b.push_back(ch);
  write_le32(b, 36 + data.size());
  for (char ch : std::string("WAVEfmt ")) b.push_back(ch);
  write_le32(b, 16);
  write_le16(b, format_tag);
  write_le16(b, channels);
  write_le32(b, sample_rate);
  write_le32(b, sample_rate * channels * bits / 8);
  write_le16(b, channels * bits / 8);
  write_le16(b, bits);
  for (char ch : std::string("data")) b.push_back(ch);
  write_le32(b, data.size());
  b.insert(b.end(), data.begin(), data.end());
  return b;
}

}  // namespace

TEST_SUITE("signal_core") {

TEST_CASE("load_wav reads one second of mono silence") {
  const auto dir = testing::temp_dir("wav_silence");
  testing::write_bytes(dir / "s.wav",
                       wav_bytes(1, 16000, 16, 1,
                                 std::vector<unsigned char>(32000, 0)));
  const Waveform w = load_wav(dir / "s.wav");
  CHECK(w.channels() == 1);
  CHECK(w.length() == 16000);
  CHECK(w.sample_rate() == 16000);
  for (float s : w.data()) REQUIRE(s == 0.0f);
}

TEST_CASE("load_wav keeps six interleaved channels in order") {
  const auto dir = testing::temp_dir("wav_six");
  std::vector<unsigned char> data;
  for (int n = 0; n < 10; ++n) {
    for (int c = 0; c < 6; ++c) write_le16(data, std::uint16_t(100 * c + n));
  }
  testing::write_bytes(dir / "six.wav", wav_bytes(6, 16000, 16, 1, data));
  const Waveform w = load_wav(dir / "six.wav");
  REQUIRE(w.channels() == 6);
  CHECK(w.length() == 10);
  for (int c = 0; c < 6; ++c) {
    CHECK(w.channel(c).size() == 10);
    CHECK(w.at(c, 3) == doctest::Approx((100 * c + 3) / 32768.0));
  }
}

TEST_CASE("load_wav reads float32 samples") {
  const auto dir = testing::temp_dir("wav_float");
  std::vector<unsigned char> data(8);
  const float v[2] = {0.25f, -0.75f};
  std::memcpy(data.data(), v, 8);
  testing::write_bytes(dir / "f.wav", wav_bytes(1, 8000, 32, 3, data));
  const Waveform w = load_wav(dir / "f.wav");
  CHECK(w.at(0, 0) == 0.25f);
  CHECK(w.at(0, 1) == -0.75f);
}

TEST_CASE("load_wav rejects corrupt and unsupported files") {
  const auto dir = testing::temp_dir("wav_bad");
  auto full = wav_bytes(1, 16000, 16, 1, std::vector<unsigned char>(64, 0));
  testing::write_bytes(dir / "trunc.wav", {full.begin(), full.begin() + 20});
  testing::write_bytes(dir / "pcm24.wav",
                       wav_bytes(1, 16000, 24, 1, std::vector<unsigned char>(6)));
  testing::write_bytes(dir / "junk.wav", {'h', 'e', 'l', 'l', 'o'});
  for (const char* name : {"trunc.wav", "pcm24.wav", "junk.wav"}) {
    try {
      load_wav(dir / name);
      FAIL("expected an error for " << name);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kFormat);
      CHECK(std::string(e.what()).find("unsupported encoding/corrupt file") !=
            std::string::npos);
    }
  }
  CHECK_THROWS_AS(load_wav(dir / "missing.wav"), Error);
}

TEST_CASE("save_wav round-trips within 16-bit quantization") {
  const auto dir = testing::temp_dir("wav_rt");
  const Waveform w = testing::random_waveform(7, 3, 5000, 0.99);
  save_wav(w, dir / "r.wav");
  const Waveform r = load_wav(dir / "r.wav");
  REQUIRE(r.channels() == 3);
  REQUIRE(r.length() == 5000);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.data().size(); ++i) {
    worst = std::max(worst, double(std::abs(w.data()[i] - r.data()[i])));
  }
  CHECK(worst <= std::ldexp(1.0, -15));
}

TEST_CASE("zero waveform round-trips exactly") {
  const auto dir = testing::temp_dir("wav_zero");
  const Waveform w(2, 1000, 16000);
  save_wav(w, dir / "z.wav");
  CHECK(load_wav(dir / "z.wav") == w);
}

TEST_CASE("float32 round-trip is exact") {
  const auto dir = testing::temp_dir("wav_f32");
  const Waveform w = testing::random_waveform(8, 2, 777);
  save_wav(w, dir / "f.wav", SampleFormat::kFloat32);
  CHECK(load_wav(dir / "f.wav") == w);
}

TEST_CASE("re-saving a loaded copy is byte-identical") {
  const auto dir = testing::temp_dir("wav_resave");
  save_wav(testing::random_waveform(9, 6, 4000), dir / "a.wav");
  save_wav(load_wav(dir / "a.wav"), dir / "b.wav");
  CHECK(testing::read_bytes(dir / "a.wav") == testing::read_bytes(dir / "b.wav"));
}

TEST_CASE("save_wav fails on an unwritable path") {
  CHECK_THROWS_AS(save_wav(Waveform(1, 10, 16000), "/nonexistent/dir/x.wav"),
                  Error);
}

TEST_CASE("stft peaks at bin 64 for a 1 kHz sine and matches a direct DFT") {
  const Waveform w = testing::sine(1000.0, 16000, 16000, 0.5, 0.3);
  const MultichannelSpectrogram spec = stft(w);
  REQUIRE(spec.bins() == 513);
  REQUIRE(spec.frames() == 30);
  for (int t = 0; t < spec.frames(); ++t) {
    int best = 0;
    for (int f = 1; f < spec.bins(); ++f) {
      if (std::abs(spec(0, f, t)) > std::abs(spec(0, best, t))) best = f;
    }
    REQUIRE(best == 64);
  }
  const std::vector<double> win = make_window(WindowKind::kSqrtHann, 1024);
  for (int t : {0, 13, 29}) {
    std::vector<double> frame(1024);
    for (int n = 0; n < 1024; ++n) frame[n] = win[n] * w.at(0, t * 512 + n);
    const auto ref = testing::direct_dft(frame);
    int best = 0;
    for (int f = 0; f < 513; ++f) {
      if (std::abs(ref[f]) > std::abs(ref[best])) best = f;
      CHECK(std::abs(std::complex<double>(spec(0, f, t)) - ref[f]) <=
            1e-4 * (1.0 + std::abs(ref[f])));
    }
    CHECK(best == 64);
  }
}

TEST_CASE("stft of zeros is all zeros") {
  const MultichannelSpectrogram spec = stft(Waveform(2, 4096, 16000));
  for (const cfloat v : spec.values()) REQUIRE(v == cfloat(0.0f));
}

TEST_CASE("frame count follows floor((len - N) / hop) + 1") {
  CHECK(frame_count(16000, {}) == 30);
  CHECK(stft(Waveform(1, 16000, 16000)).frames() == 30);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1024, 40000);
  for (int i = 0; i < 100; ++i) {
    const int n = len(rng);
    const int expected = (n - 1024) / 512 + 1;
    REQUIRE(frame_count(n, {}) == expected);
    REQUIRE(stft(Waveform(1, n, 16000)).frames() == expected);
  }
}

TEST_CASE("stft rejects signals shorter than one frame") {
  CHECK_THROWS_AS(stft(Waveform(1, 1023, 16000)), Error);
}

TEST_CASE("invalid stft configurations are rejected") {
  CHECK_THROWS_AS(validate_stft_config({1024, 0}), Error);
  CHECK_THROWS_AS(validate_stft_config({1024, 2048}), Error);
  CHECK_THROWS_AS(validate_stft_config({1024, 300}), Error);
  CHECK_THROWS_AS(validate_stft_config({1024, 768, WindowKind::kRectangular}),
                  Error);
  CHECK_NOTHROW(validate_stft_config({1024, 256}));
  CHECK_NOTHROW(validate_stft_config({1024, 1024, WindowKind::kRectangular}));
}

TEST_CASE("Parseval: spectral energy equals windowed-signal energy") {
  const Waveform w = testing::random_waveform(21, 3, 9000);
  for (const StftConfig cfg :
       {StftConfig{}, StftConfig{512, 256}, StftConfig{256, 128, WindowKind::kRectangular}}) {
    const MultichannelSpectrogram spec = stft(w, cfg);
    const std::vector<double> win = make_window(cfg.window, cfg.fft_size);
    const int n = cfg.fft_size;
    for (int c = 0; c < w.channels(); ++c) {
      double time_energy = 0.0, spec_energy = 0.0;
      for (int t = 0; t < spec.frames(); ++t) {
        for (int i = 0; i < n; ++i) {
          const double v = win[i] * w.at(c, t * cfg.hop + i);
          time_energy += v * v;
        }
        for (int f = 0; f < spec.bins(); ++f) {
          const double weight = (f == 0 || f == n / 2) ? 1.0 : 2.0;
          spec_energy += weight * std::norm(std::complex<double>(spec(c, f, t)));
        }
      }
      spec_energy /= n;
      CHECK(std::abs(spec_energy - time_energy) <= 1e-6 * time_energy);
    }
  }
}

TEST_CASE("istft reconstructs the interior for every shipped window") {
  for (const StftConfig cfg :
       {StftConfig{}, StftConfig{512, 128}, StftConfig{256, 256, WindowKind::kRectangular},
        StftConfig{256, 128, WindowKind::kRectangular}}) {
    const Waveform w = testing::random_waveform(3, 2, 12000);
    const Waveform r = istft(stft(w, cfg));
    const std::size_t n = cfg.fft_size;
    REQUIRE(r.length() >= w.length() - n);
    for (int c = 0; c < 2; ++c) {
      CHECK(testing::relative_l2(r.channel(c), w.channel(c), n, r.length() - n) <=
            1e-6);
    }
  }
}

TEST_CASE("istft of a speech-shaped chirp meets the same bound") {
  Waveform w(1, 24000, 16000);
  for (std::size_t n = 0; n < w.length(); ++n) {
    const double t = n / 16000.0;
    const double env = 0.5 + 0.5 * std::sin(2 * kPi * 3.0 * t);
    w.at(0, n) = float(0.4 * env * std::sin(2 * kPi * (150.0 * t + 900.0 * t * t)));
  }
  const Waveform r = istft(stft(w));
  CHECK(testing::relative_l2(r.channel(0), w.channel(0), 1024, r.length() - 1024) <=
        1e-6);
}

TEST_CASE("istft of an all-zero spectrogram is silent") {
  MultichannelSpectrogram spec(2, 5, {}, 16000);
  const Waveform r = istft(spec);
  CHECK(r.length() == 4 * 512 + 1024);
  for (float s : r.data()) REQUIRE(s == 0.0f);
}

}  // TEST_SUITE

}  // namespace mcse
