#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "derivmine/core/files.hpp"

namespace dmtest {

inline std::filesystem::path fixtures() { return DM_FIXTURES_DIR; }

// A fresh directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "dm") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) { return derivmine::read_file(p); }

}  // namespace dmtest
