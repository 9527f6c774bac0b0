#include "mcse/tensor_file.h"

#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "mcse/error.h"

namespace mcse {
namespace {

constexpr char kMagic[4] = {'M', 'N', 'W', '1'};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  const unsigned char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw Error(Errc::kFormat, "truncated MNW1 container");
    }
    const unsigned char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const unsigned char* p = take(4);
    return static_cast<std::uint32_t>(p[0]) | (std::uint32_t{p[1]} << 8) |
           (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
  }
  std::uint16_t u16() {
    const unsigned char* p = take(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint8_t u8() { return *take(1); }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF);
}

}  // namespace

std::size_t Tensor::element_count() const {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t d) { return a * d; });
}

std::vector<unsigned char> encode_mnw1(
    const std::vector<NamedTensor>& tensors) {
  std::vector<unsigned char> out(kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    if (name.size() > 0xFFFF) {
      throw Error(Errc::kInvalidArgument, "tensor name too long: " + name);
    }
    if (t.dims.size() > 0xFF || t.element_count() != t.data.size()) {
      throw Error(Errc::kShape, "tensor '" + name + "' dims disagree with data");
    }
    out.push_back(name.size() & 0xFF);
    out.push_back(name.size() >> 8);
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(static_cast<unsigned char>(t.dims.size()));
    for (std::uint32_t d : t.dims) put_u32(out, d);
    for (float v : t.data) {
      std::uint32_t u;
      std::memcpy(&u, &v, sizeof u);
      put_u32(out, u);
    }
  }
  return out;
}

std::vector<NamedTensor> decode_mnw1(const std::vector<unsigned char>& bytes) {
  Reader in(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Errc::kFormat, "bad magic: not an MNW1 weight container");
  }
  in.take(4);
  const std::uint32_t count = in.u32();
  std::vector<NamedTensor> tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    const std::uint16_t len = in.u16();
    const unsigned char* name = in.take(len);
    nt.name.assign(reinterpret_cast<const char*>(name), len);
    const std::uint8_t ndim = in.u8();
    for (std::uint8_t d = 0; d < ndim; ++d) nt.tensor.dims.push_back(in.u32());
    const std::size_t n = nt.tensor.element_count();
    if (n > bytes.size() / 4) {
      throw Error(Errc::kFormat, "tensor '" + nt.name + "' exceeds file size");
    }
    nt.tensor.data.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::uint32_t u = in.u32();
      std::memcpy(&nt.tensor.data[k], &u, sizeof u);
    }
    tensors.push_back(std::move(nt));
  }
  if (!in.done()) {
    throw Error(Errc::kFormat, "trailing bytes after MNW1 tensors");
  }
  return tensors;
}

std::vector<NamedTensor> read_mnw1(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(Errc::kIo, "cannot open " + path.string());
  const std::vector<unsigned char> bytes(
      (std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return decode_mnw1(bytes);
}

void write_mnw1(const std::filesystem::path& path,
                const std::vector<NamedTensor>& tensors) {
  const auto bytes = encode_mnw1(tensors);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(Errc::kIo, "cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!file) throw Error(Errc::kIo, "write failed for " + path.string());
}

}  // namespace mcse
