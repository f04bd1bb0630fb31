#ifndef VERSEWRIGHT_TESTS_TEST_UTIL_HPP_
#define VERSEWRIGHT_TESTS_TEST_UTIL_HPP_

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

namespace vwtest {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "vw") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

}  // namespace vwtest

#endif  // VERSEWRIGHT_TESTS_TEST_UTIL_HPP_
