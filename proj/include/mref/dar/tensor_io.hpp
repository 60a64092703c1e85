#pragma once

// DART1 tensor files: the five magic bytes "DART1", three little-endian uint32
// extents (tokens, heads, dim), then tokens*heads*dim little-endian IEEE-754
// doubles in row-major order.

#include <filesystem>
#include <string>
#include <string_view>

#include "mref/dar/headed_tensor.hpp"
#include "mref/dar/kernel.hpp"
#include "mref/dar/key_segments.hpp"

namespace mref::dar {

std::string encode_tensor(const HeadedTensor& tensor);
HeadedTensor decode_tensor(std::string_view bytes);

void write_tensor(const std::filesystem::path& path, const HeadedTensor& tensor);
HeadedTensor read_tensor(const std::filesystem::path& path);

void write_segments(const std::filesystem::path& path, const KeySegments& segments);
KeySegments read_segments(const std::filesystem::path& path);

/// {"raw_scores": [...], "normalized_scores": [...], "weights": [...]}
nlohmann::json stats_to_json(const AttentionStats& stats);
AttentionStats stats_from_json(const nlohmann::json& j);

}  // namespace mref::dar
