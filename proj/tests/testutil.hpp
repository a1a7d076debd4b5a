#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

// Shared helpers for the test suites.

namespace testutil {

// Scratch directory wiped on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    base_ = std::filesystem::temp_directory_path() /
            ("ugcs_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(base_);
    std::filesystem::create_directories(base_);
  }
  ~TempDir() { std::filesystem::remove_all(base_); }
  std::string path(const std::string& name) const {
    return (base_ / name).string();
  }
  std::string root() const { return base_.string(); }

 private:
  std::filesystem::path base_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  os << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string s((std::istreambuf_iterator<char>(in)),
                std::istreambuf_iterator<char>());
  return s;
}

}  // namespace testutil
