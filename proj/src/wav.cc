#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "mcse/error.h"
#include "mcse/signal.h"

namespace mcse {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

[[noreturn]] void corrupt(const std::filesystem::path& path,
                          const std::string& detail) {
  throw Error(Errc::kFormat, "unsupported encoding/corrupt file: " +
                                 path.string() + " (" + detail + ")");
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  }
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform::Waveform(int channels, std::size_t length, int sample_rate)
    : channels_(channels),
      length_(length),
      sample_rate_(sample_rate),
      samples_(static_cast<std::size_t>(channels) * length, 0.0f) {
  if (channels <= 0 || sample_rate <= 0) {
    throw Error(Errc::kInvalidArgument,
                "waveform needs channels > 0 and sample_rate > 0");
  }
}

std::span<float> Waveform::channel(int c) {
  return std::span<float>(samples_).subspan(c * length_, length_);
}

std::span<const float> Waveform::channel(int c) const {
  return std::span<const float>(samples_).subspan(c * length_, length_);
}

Waveform Waveform::extract_channel(int c) const {
  if (c < 0 || c >= channels_) {
    throw Error(Errc::kShape, "channel " + std::to_string(c) +
                                  " out of range for " +
                                  std::to_string(channels_) + " channels");
  }
  Waveform out(1, length_, sample_rate_);
  std::ranges::copy(channel(c), out.channel(0).begin());
  return out;
}

Waveform Waveform::resized(std::size_t length) const {
  Waveform out(channels_, length, sample_rate_);
  const std::size_t n = std::min(length, length_);
  for (int c = 0; c < channels_; ++c) {
    std::copy_n(channel(c).begin(), n, out.channel(c).begin());
  }
  return out;
}

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  const std::vector<unsigned char> bytes(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    corrupt(path, "missing RIFF/WAVE header");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) corrupt(path, "short fmt");
      const unsigned char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      sample_rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 26) corrupt(path, "short extensible fmt");
        format = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (body + size > bytes.size()) corrupt(path, "truncated data chunk");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) corrupt(path, "no fmt chunk");
  if (data == nullptr) corrupt(path, "no data chunk");
  if (channels == 0 || sample_rate == 0) corrupt(path, "zero channels/rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    corrupt(path, "format " + std::to_string(format) + " with " +
                      std::to_string(bits) + " bits");
  }
  const std::size_t frame_bytes = channels * (bits / 8u);
  const std::size_t length = data_size / frame_bytes;

  Waveform w(channels, length, static_cast<int>(sample_rate));
  for (std::size_t n = 0; n < length; ++n) {
    for (int c = 0; c < channels; ++c) {
      const unsigned char* p = data + n * frame_bytes + c * (bits / 8u);
      float v;
      if (pcm16) {
        v = static_cast<std::int16_t>(read_u16(p)) / 32768.0f;
      } else {
        const std::uint32_t u = read_u32(p);
        std::memcpy(&v, &u, sizeof v);
        if (!std::isfinite(v)) corrupt(path, "non-finite float sample");
      }
      w.at(c, n) = v;
    }
  }
  return w;
}

void save_wav(const Waveform& w, const std::filesystem::path& path,
              SampleFormat format) {
  const std::uint16_t bits = format == SampleFormat::kPcm16 ? 16 : 32;
  const std::uint16_t tag =
      format == SampleFormat::kPcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t frame_bytes = w.channels() * (bits / 8u);
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(w.length() * frame_bytes);

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, tag);
  put_u16(out, static_cast<std::uint16_t>(w.channels()));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate()));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate()) * frame_bytes);
  put_u16(out, static_cast<std::uint16_t>(frame_bytes));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_size);

  for (std::size_t n = 0; n < w.length(); ++n) {
    for (int c = 0; c < w.channels(); ++c) {
      const float v = w.at(c, n);
      if (!std::isfinite(v)) {
        throw Error(Errc::kNumeric, "non-finite sample while writing " +
                                        path.string());
      }
      if (format == SampleFormat::kPcm16) {
        const double q = std::clamp(std::nearbyint(v * 32768.0), -32768.0,
                                    32767.0);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        std::uint32_t u;
        std::memcpy(&u, &v, sizeof u);
        put_u32(out, u);
      }
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(Errc::kIo, "cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()),
             static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(Errc::kIo, "write failed for " + path.string());
}

}  // namespace mcse
