#include "mref/dar/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>

#include "mref/errors.hpp"

namespace mref::dar {

namespace {

constexpr std::string_view kMagic = "DART1";
constexpr std::size_t kHeaderSize = kMagic.size() + 3 * sizeof(std::uint32_t);

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

std::uint64_t get_le(std::string_view bytes, std::size_t pos, int width) {
  std::uint64_t v = 0;
  for (int b = 0; b < width; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + b])) << (8 * b);
  }
  return v;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spill(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

std::string encode_tensor(const HeadedTensor& tensor) {
  const auto& s = tensor.shape();
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (s.tokens > kMax || s.heads > kMax || s.dim > kMax) {
    throw ShapeError("tensor " + s.to_string() + " exceeds the 32-bit extent limit");
  }
  std::string out(kMagic);
  out.reserve(kHeaderSize + tensor.data().size() * 8);
  put_u32(out, static_cast<std::uint32_t>(s.tokens));
  put_u32(out, static_cast<std::uint32_t>(s.heads));
  put_u32(out, static_cast<std::uint32_t>(s.dim));
  for (double v : tensor.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

HeadedTensor decode_tensor(std::string_view bytes) {
  if (bytes.size() < kHeaderSize || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("not a DART1 tensor (bad magic bytes or truncated header)");
  }
  TensorShape shape;
  shape.tokens = get_le(bytes, 5, 4);
  shape.heads = get_le(bytes, 9, 4);
  shape.dim = get_le(bytes, 13, 4);
  const std::size_t count = shape.tokens * shape.heads * shape.dim;
  if (bytes.size() != kHeaderSize + count * 8) {
    throw FormatError("DART1 payload for " + shape.to_string() + " should be " +
                      std::to_string(count * 8) + " bytes, found " +
                      std::to_string(bytes.size() - kHeaderSize));
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<double>(get_le(bytes, kHeaderSize + 8 * i, 8));
  }
  return HeadedTensor(shape, std::move(data));
}

void write_tensor(const std::filesystem::path& path, const HeadedTensor& tensor) {
  spill(path, encode_tensor(tensor));
}

HeadedTensor read_tensor(const std::filesystem::path& path) {
  return decode_tensor(slurp(path));
}

void write_segments(const std::filesystem::path& path, const KeySegments& segments) {
  spill(path, to_json(segments).dump(2) + "\n");
}

KeySegments read_segments(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("segment sidecar '" + path.string() + "': " + e.what());
  }
  return key_segments_from_json(j);
}

nlohmann::json stats_to_json(const AttentionStats& stats) {
  return {{"raw_scores", stats.raw_scores},
          {"normalized_scores", stats.normalized_scores},
          {"weights", stats.weights}};
}

AttentionStats stats_from_json(const nlohmann::json& j) {
  try {
    return {j.at("raw_scores").get<std::vector<double>>(),
            j.at("normalized_scores").get<std::vector<double>>(),
            j.at("weights").get<std::vector<double>>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad diagnostics object: ") + e.what());
  }
}

}  // namespace mref::dar
