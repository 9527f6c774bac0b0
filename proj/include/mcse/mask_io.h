#ifndef MCSE_MASK_IO_H_
#define MCSE_MASK_IO_H_

#include <filesystem>
#include <vector>

#include "mcse/mask.h"

namespace mcse {

// MSK1 layout: "MSK1", u32 bins, u32 frames, float32 payload, all
// little-endian, frequency-major.
std::vector<unsigned char> encode_mask(const Mask& m);
Mask decode_mask(const std::vector<unsigned char>& bytes);

void write_mask(const Mask& m, const std::filesystem::path& path);
Mask read_mask(const std::filesystem::path& path);

}  // namespace mcse

#endif  // MCSE_MASK_IO_H_
