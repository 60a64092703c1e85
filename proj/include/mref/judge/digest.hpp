#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mref::judge {

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Standard base64 with padding.
std::string base64_encode(std::string_view bytes);

/// Whole file as bytes; throws IoError.
std::string read_file_bytes(const std::filesystem::path& path);

}  // namespace mref::judge
