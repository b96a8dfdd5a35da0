#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace episodekit {

std::string read_file(const std::filesystem::path& path);

// Writes to a uniquely named sibling temp file, then renames over `path`, so
// readers see either the old or the new content. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Non-blank lines with their 1-based line numbers; a trailing '\r' is dropped.
std::vector<std::pair<std::size_t, std::string_view>> split_lines(std::string_view text);

}  // namespace episodekit

namespace episodekit {

// Appends `line` plus '\n' with a single write and fsyncs before returning.
void append_line_durable(const std::filesystem::path& path, const std::string& line);

}  // namespace episodekit
