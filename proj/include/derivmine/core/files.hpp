#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace derivmine {

using json = nlohmann::json;

// All of these throw Error{IoError} on failure.
std::string read_file(const std::filesystem::path& path);
// Write to a sibling temp file then rename over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void append_line(const std::filesystem::path& path, std::string_view line);

// Blank lines are skipped; a malformed line throws IoError naming the line.
std::vector<json> read_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const std::vector<json>& records);

// File-system safe rendering of an opaque id.
std::string safe_file_stem(std::string_view id);

}  // namespace derivmine
