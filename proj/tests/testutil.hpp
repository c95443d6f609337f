#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>

namespace testutil {

// Self-cleaning scratch directory under the system temp root.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    const int id = counter.fetch_add(1);
    path = std::filesystem::temp_directory_path() /
           ("teamrec_test_" + std::to_string(::getpid()) + "_" + std::to_string(id));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::string slurp_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testutil
