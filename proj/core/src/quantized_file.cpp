#include "llvq/quantized_file.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "llvq/codec.hpp"

namespace llvq {
namespace {

void put(std::ofstream& out, const void* data, size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void get(std::ifstream& in, void* data, size_t n) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("quantized file: truncated");
}

template <typename T>
void put_value(std::ofstream& out, T v) {
  put(out, &v, sizeof(v));
}

template <typename T>
T get_value(std::ifstream& in) {
  T v;
  get(in, &v, sizeof(v));
  return v;
}

}  // namespace

void write_quantized_file(const std::string& path, const QuantizedLayer& layer,
                          const CodebookLayout& layout) {
  if (layer.layout_fingerprint != layout.fingerprint) {
    throw std::invalid_argument("quantized file: layer bound to a different layout");
  }
  const int shape_bits = layout.bits_per_index;
  const bool has_gain = layer.quant.mode != QuantMode::kSphericalShaping;
  const int gain_bits = has_gain ? layer.quant.gain_bits : 0;
  const int entry_bits = shape_bits + gain_bits;

  // interleave shape then gain per block into one fixed-width stream
  std::vector<uint64_t> entries(layer.shape_indices.size());
  for (size_t i = 0; i < entries.size(); ++i) {
    uint64_t e = layer.shape_indices[i];
    if (gain_bits > 0) {
      e |= static_cast<uint64_t>(layer.gain_indices[i]) << shape_bits;
    }
    entries[i] = e;
  }
  const std::vector<uint8_t> body = pack_indices(entries, entry_bits);

  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("quantized file: cannot open " + tmp.string());
    put(out, kQuantizedMagic, 8);
    put_value<uint32_t>(out, static_cast<uint32_t>(layer.quant.mode));
    put_value<uint32_t>(out, static_cast<uint32_t>(layer.quant.max_shell));
    put_value<uint32_t>(out, static_cast<uint32_t>(gain_bits));
    put_value<uint32_t>(out, static_cast<uint32_t>(layer.quant.gain_source));
    put_value<uint64_t>(out, layer.layout_fingerprint);
    put_value<uint64_t>(out, static_cast<uint64_t>(layer.rows));
    put_value<uint64_t>(out, static_cast<uint64_t>(layer.cols));
    put_value<uint64_t>(out, static_cast<uint64_t>(layer.padded_cols));
    put_value<float>(out, static_cast<float>(layer.beta));
    put_value<uint32_t>(out, layer.group_scales.empty() ? 0u : 1u);
    put_value<uint32_t>(out, static_cast<uint32_t>(layer.hadamard));
    put_value<uint64_t>(out, layer.hadamard_seed);
    put_value<uint32_t>(out, static_cast<uint32_t>(layer.gains.levels.size()));
    for (double level : layer.gains.levels) put_value<float>(out, static_cast<float>(level));
    for (float s : layer.group_scales) put_value<float>(out, s);
    put(out, body.data(), body.size());
    if (!out) throw std::runtime_error("quantized file: write failed");
  }
  std::filesystem::rename(tmp, target);
}

QuantizedLayer read_quantized_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("quantized file: cannot open " + path);
  char magic[8];
  get(in, magic, 8);
  if (std::memcmp(magic, kQuantizedMagic, 8) != 0) {
    throw std::runtime_error("quantized file: bad magic");
  }
  QuantizedLayer layer;
  layer.quant.mode = static_cast<QuantMode>(get_value<uint32_t>(in));
  layer.quant.max_shell = static_cast<int>(get_value<uint32_t>(in));
  layer.quant.gain_bits = static_cast<int>(get_value<uint32_t>(in));
  layer.quant.gain_source = static_cast<GainSource>(get_value<uint32_t>(in));
  layer.layout_fingerprint = get_value<uint64_t>(in);
  layer.rows = static_cast<int64_t>(get_value<uint64_t>(in));
  layer.cols = static_cast<int64_t>(get_value<uint64_t>(in));
  layer.padded_cols = static_cast<int64_t>(get_value<uint64_t>(in));
  layer.beta = get_value<float>(in);
  const uint32_t scale_mode = get_value<uint32_t>(in);
  layer.hadamard = static_cast<HadamardMode>(get_value<uint32_t>(in));
  layer.hadamard_seed = get_value<uint64_t>(in);
  const uint32_t n_levels = get_value<uint32_t>(in);
  if (n_levels > (1u << 16)) throw std::runtime_error("quantized file: bad gain table");
  layer.gains.bits = layer.quant.gain_bits;
  layer.gains.dof = kBlockDim;
  layer.gains.levels.resize(n_levels);
  for (uint32_t i = 0; i < n_levels; ++i) layer.gains.levels[i] = get_value<float>(in);
  if (layer.rows < 1 || layer.cols < 1 || layer.padded_cols % kBlockDim != 0 ||
      layer.padded_cols < layer.cols) {
    throw std::runtime_error("quantized file: bad dimensions");
  }
  const int64_t groups = layer.groups();
  if (scale_mode == 1) {
    layer.group_scales.resize(static_cast<size_t>(groups));
    for (auto& s : layer.group_scales) s = get_value<float>(in);
  } else if (scale_mode != 0) {
    throw std::runtime_error("quantized file: unknown scale mode");
  }

  const CodebookLayout layout = CodebookLayout::build(layer.quant.max_shell);
  if (layout.fingerprint != layer.layout_fingerprint) {
    throw std::runtime_error(
        "quantized file: layout fingerprint mismatch; refusing to decode");
  }
  const bool has_gain = layer.quant.mode != QuantMode::kSphericalShaping;
  const int shape_bits = layout.bits_per_index;
  const int entry_bits = shape_bits + (has_gain ? layer.quant.gain_bits : 0);
  const size_t blocks = static_cast<size_t>(layer.rows) * static_cast<size_t>(groups);
  const size_t body_bytes = (blocks * static_cast<size_t>(entry_bits) + 7) / 8;
  std::vector<uint8_t> body(body_bytes);
  get(in, body.data(), body.size());

  const std::vector<uint64_t> entries = unpack_indices(body, entry_bits, blocks);
  layer.shape_indices.resize(blocks);
  if (has_gain) layer.gain_indices.resize(blocks);
  const uint64_t shape_mask =
      shape_bits == 64 ? ~uint64_t{0} : (uint64_t{1} << shape_bits) - 1;
  for (size_t i = 0; i < blocks; ++i) {
    layer.shape_indices[i] = entries[i] & shape_mask;
    if (layer.shape_indices[i] >= layout.total) {
      throw std::runtime_error("quantized file: shape index outside the layout");
    }
    if (has_gain) {
      layer.gain_indices[i] = static_cast<uint32_t>(entries[i] >> shape_bits);
      if (layer.gain_indices[i] >= layer.gains.levels.size()) {
        throw std::runtime_error("quantized file: gain index outside the codebook");
      }
    }
  }
  return layer;
}

}  // namespace llvq
