#include "mcse/mask_io.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "mcse/error.h"

namespace mcse {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'K', '1'};
constexpr std::size_t kHeaderBytes = 12;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (std::uint32_t{p[1]} << 8) |
         (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

}  // namespace

std::vector<unsigned char> encode_mask(const Mask& m) {
  std::vector<unsigned char> out(kMagic, kMagic + 4);
  out.reserve(kHeaderBytes + 4 * m.values().size());
  put_u32(out, static_cast<std::uint32_t>(m.bins()));
  put_u32(out, static_cast<std::uint32_t>(m.frames()));
  for (float v : m.values()) {
    std::uint32_t u;
    std::memcpy(&u, &v, sizeof u);
    put_u32(out, u);
  }
  return out;
}

Mask decode_mask(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kHeaderBytes) {
    throw Error(Errc::kFormat, "truncated MSK1 header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Errc::kFormat, "bad magic: not an MSK1 mask file");
  }
  const std::uint32_t bins = get_u32(bytes.data() + 4);
  const std::uint32_t frames = get_u32(bytes.data() + 8);
  const std::uint64_t expected =
      kHeaderBytes + 4ull * static_cast<std::uint64_t>(bins) * frames;
  if (bytes.size() != expected) {
    throw Error(Errc::kFormat,
                "MSK1 dims " + std::to_string(bins) + "x" +
                    std::to_string(frames) + " need " +
                    std::to_string(expected) + " bytes, file has " +
                    std::to_string(bytes.size()));
  }
  Mask m(static_cast<int>(bins), static_cast<int>(frames));
  auto dst = m.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const std::uint32_t u = get_u32(bytes.data() + kHeaderBytes + 4 * i);
    std::memcpy(&dst[i], &u, sizeof u);
  }
  return m;
}

void write_mask(const Mask& m, const std::filesystem::path& path) {
  const auto bytes = encode_mask(m);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(Errc::kIo, "cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!file) throw Error(Errc::kIo, "write failed for " + path.string());
}

Mask read_mask(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(Errc::kIo, "cannot open " + path.string());
  const std::vector<unsigned char> bytes(
      (std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return decode_mask(bytes);
}

}  // namespace mcse
