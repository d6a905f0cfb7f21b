#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace refer::hash {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file_hex(const std::filesystem::path& path);

std::string base64(std::string_view data);

}  // namespace refer::hash
