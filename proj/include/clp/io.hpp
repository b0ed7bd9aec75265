#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace clp {

/// Whole-file read; IoError carries the path.
std::string read_text_file(const std::filesystem::path& path);

/// Truncating write; IoError carries the path.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace clp
