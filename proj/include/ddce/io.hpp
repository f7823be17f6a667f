#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ddce {

// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

std::string read_text_file(const std::filesystem::path& path);
std::vector<unsigned char> read_binary_file(const std::filesystem::path& path);

// Splits on '\n', dropping a trailing empty line and '\r' line endings.
std::vector<std::string> split_lines(const std::string& text);

// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace ddce
