#pragma once

#include "oodagent/backends.hpp"
#include "oodagent/memory.hpp"
#include "oodagent/simworld.hpp"
#include "oodagent/stubs.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testsupport {

inline const oodagent::stubs::Fixtures& fixtures() {
  static const auto fx = oodagent::stubs::load_fixtures();
  return fx;
}

inline oodagent::BackendSuite stub_suite() { return oodagent::stubs::make_stub_suite(fixtures()); }
inline oodagent::MemoryStore seeded() { return oodagent::stubs::seeded_memory(fixtures()); }

inline const oodagent::sim::TaskDef& task(const std::string& suite, const std::string& id) {
  static std::map<std::string, oodagent::sim::Suite> cache;
  auto it = cache.find(suite);
  if (it == cache.end()) it = cache.emplace(suite, oodagent::sim::load_suite(suite)).first;
  return *it->second.find(id);
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("oodagent-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string random_word(std::mt19937_64& rng, int min_len = 1, int max_len = 8) {
  static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  int n = min_len + static_cast<int>(rng() % static_cast<std::uint64_t>(max_len - min_len + 1));
  std::string s;
  for (int i = 0; i < n; ++i) s += letters[rng() % letters.size()];
  return s;
}

}  // namespace testsupport
