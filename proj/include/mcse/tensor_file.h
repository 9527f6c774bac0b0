#ifndef MCSE_TENSOR_FILE_H_
#define MCSE_TENSOR_FILE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mcse {

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;  // row-major

  std::size_t element_count() const;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// MNW1 container: "MNW1", u32 count, then per tensor: u16 name length,
// UTF-8 name, u8 ndim, u32 dims[ndim], float32 data. All little-endian.
std::vector<NamedTensor> read_mnw1(const std::filesystem::path& path);
void write_mnw1(const std::filesystem::path& path,
                const std::vector<NamedTensor>& tensors);

std::vector<unsigned char> encode_mnw1(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_mnw1(const std::vector<unsigned char>& bytes);

}  // namespace mcse

#endif  // MCSE_TENSOR_FILE_H_
