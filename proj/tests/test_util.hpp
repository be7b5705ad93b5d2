#ifndef EXPBATCH_TEST_UTIL_HPP
#define EXPBATCH_TEST_UTIL_HPP

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace testutil {

inline std::filesystem::path make_temp_dir(const std::string& tag) {
  auto base = std::filesystem::temp_directory_path();
  static std::mt19937_64 rng(std::random_device{}());
  for (;;) {
    auto p = base / ("expbatch-" + tag + "-" + std::to_string(rng()));
    if (std::filesystem::create_directories(p)) return p;
  }
}

// Removes the tree on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) : path(make_temp_dir(tag)) {}
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline void write_file(const std::filesystem::path& path,
                       const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline const char* kMockTemplate = R"(<experiment>
  <population size="4"/>
  <duration ticks="100"/>
  <controller rate="0.05"/>
</experiment>
)";

}  // namespace testutil

#endif  // EXPBATCH_TEST_UTIL_HPP
