#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lmsx/tensor.hpp"

namespace lmsx {

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Versioned container: magic "LMSX", u32 version, u32 tensor count, then a
// shape table (name length/bytes, rank, u64 extents) followed by raw doubles
// in table order. All integers and doubles little-endian.
std::vector<std::uint8_t> serialize_params(std::span<const NamedTensor> tensors);
std::vector<NamedTensor> parse_params(std::span<const std::uint8_t> bytes);

void save_params(const std::filesystem::path& path, std::span<const NamedTensor> tensors);
std::vector<NamedTensor> load_params(const std::filesystem::path& path);

/// Whole-file CSV reader: rows of comma-separated cells, no quoting.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace lmsx
