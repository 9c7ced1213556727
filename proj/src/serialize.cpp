#include "lmsx/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lmsx/errors.hpp"

namespace lmsx {
namespace {

constexpr char kMagic[4] = {'L', 'M', 'S', 'X'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "parameter files are little-endian; big-endian hosts need byte swaps");

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t& offset) {
  if (offset + sizeof(T) > bytes.size()) {
    throw TruncatedPayloadError("parameter file ends at byte " + std::to_string(bytes.size()) +
                                "; needed " + std::to_string(sizeof(T)) + " at offset " +
                                std::to_string(offset));
  }
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  offset += sizeof(T);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_params(std::span<const NamedTensor> tensors) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.value.ndim()));
    for (std::size_t e : t.value.shape()) put<std::uint64_t>(out, e);
  }
  for (const auto& t : tensors) {
    for (std::size_t i = 0; i < t.value.size(); ++i) put<double>(out, t.value[i]);
  }
  return out;
}

std::vector<NamedTensor> parse_params(std::span<const std::uint8_t> bytes) {
  std::size_t offset = 0;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw BadMagicError("parameter file magic mismatch at byte 0 (expected \"LMSX\")");
  }
  offset = 4;
  const auto version = get<std::uint32_t>(bytes, offset);
  if (version != kVersion) {
    throw BadMagicError("parameter file version " + std::to_string(version) +
                        " unsupported (expected " + std::to_string(kVersion) + ")");
  }
  const auto count = get<std::uint32_t>(bytes, offset);
  std::vector<NamedTensor> tensors(count);
  for (auto& t : tensors) {
    const auto name_len = get<std::uint32_t>(bytes, offset);
    if (offset + name_len > bytes.size()) {
      throw TruncatedPayloadError("parameter name truncated at offset " +
                                  std::to_string(offset));
    }
    t.name.assign(reinterpret_cast<const char*>(bytes.data() + offset), name_len);
    offset += name_len;
    const auto rank = get<std::uint32_t>(bytes, offset);
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) e = static_cast<std::size_t>(get<std::uint64_t>(bytes, offset));
    t.value = Tensor(shape);
  }
  for (auto& t : tensors) {
    for (std::size_t i = 0; i < t.value.size(); ++i) t.value[i] = get<double>(bytes, offset);
  }
  if (offset != bytes.size()) {
    throw DimensionMismatchError("parameter file has " + std::to_string(bytes.size() - offset) +
                                 " trailing bytes past offset " + std::to_string(offset));
  }
  return tensors;
}

void save_params(const std::filesystem::path& path, std::span<const NamedTensor> tensors) {
  const auto bytes = serialize_params(tensors);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<NamedTensor> load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_params(bytes);
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lmsx
