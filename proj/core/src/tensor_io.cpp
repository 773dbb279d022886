#include "llvq/tensor_io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace llvq {
namespace {

void write_bytes(std::ofstream& out, const void* data, size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* data, size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("tensor: truncated file");
}

}  // namespace

uint64_t Tensor::element_count() const {
  uint64_t n = 1;
  for (uint64_t d : dims) n *= d;
  return dims.empty() ? 0 : n;
}

Tensor read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("tensor: cannot open " + path);
  char magic[8];
  read_bytes(in, magic, 8);
  if (std::memcmp(magic, kTensorMagic, 8) != 0) {
    throw std::runtime_error("tensor: bad magic in " + path);
  }
  uint32_t version = 0, ndim = 0;
  read_bytes(in, &version, 4);
  if (version != kTensorVersion) throw std::runtime_error("tensor: unsupported version");
  read_bytes(in, &ndim, 4);
  if (ndim == 0 || ndim > 8) throw std::runtime_error("tensor: bad rank");
  Tensor t;
  t.dims.resize(ndim);
  read_bytes(in, t.dims.data(), 8 * ndim);
  const uint64_t count = t.element_count();
  if (count > (uint64_t{1} << 34)) throw std::runtime_error("tensor: implausibly large");
  t.data.resize(count);
  read_bytes(in, t.data.data(), 4 * count);
  return t;
}

void write_tensor(const std::string& path, const Tensor& tensor) {
  if (tensor.dims.empty()) throw std::invalid_argument("tensor: rank must be positive");
  if (tensor.element_count() != tensor.data.size()) {
    throw std::invalid_argument("tensor: payload does not match dims");
  }
  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("tensor: cannot open " + tmp.string());
    write_bytes(out, kTensorMagic, 8);
    const uint32_t version = kTensorVersion;
    const uint32_t ndim = static_cast<uint32_t>(tensor.dims.size());
    write_bytes(out, &version, 4);
    write_bytes(out, &ndim, 4);
    write_bytes(out, tensor.dims.data(), 8 * tensor.dims.size());
    write_bytes(out, tensor.data.data(), 4 * tensor.data.size());
    if (!out) throw std::runtime_error("tensor: write failed");
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace llvq
