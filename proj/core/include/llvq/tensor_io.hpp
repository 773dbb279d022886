#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace llvq {

/// Row-major float32 tensor with the on-disk layout:
///   magic "LLVQTNSR" | version u32 | ndim u32 | dims u64[ndim] | payload f32[]
/// All integers little-endian, floats IEEE-754 binary32.
struct Tensor {
  std::vector<uint64_t> dims;
  std::vector<float> data;

  uint64_t element_count() const;
};

inline constexpr char kTensorMagic[8] = {'L', 'L', 'V', 'Q', 'T', 'N', 'S', 'R'};
inline constexpr uint32_t kTensorVersion = 1;

Tensor read_tensor(const std::string& path);

/// Atomic write: temp file in the same directory, then rename.
void write_tensor(const std::string& path, const Tensor& tensor);

}  // namespace llvq
