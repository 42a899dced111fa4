// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace flashmap::testing {

// Unique scratch directory under the system temp dir, removed on scope
// exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("flashmap-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  operator const std::filesystem::path&() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string random_bytes(std::mt19937_64& rng, size_t min_len,
                                size_t max_len) {
  std::uniform_int_distribution<size_t> len_dist(min_len, max_len);
  const size_t n = len_dist(rng);
  std::string out(n, '\0');
  std::uniform_int_distribution<int> byte_dist(0, 255);
  for (auto& c : out) c = static_cast<char>(byte_dist(rng));
  return out;
}

// Printable keys keep failure output readable.
inline std::string random_key(std::mt19937_64& rng, size_t min_len = 1,
                              size_t max_len = 24) {
  static constexpr char kAlphabet[] =
      "abcdefghijklmnopqrstuvwxyz0123456789";
  std::uniform_int_distribution<size_t> len_dist(min_len, max_len);
  std::uniform_int_distribution<size_t> pick(0, sizeof(kAlphabet) - 2);
  std::string out(len_dist(rng), '\0');
  for (auto& c : out) c = kAlphabet[pick(rng)];
  return out;
}

}  // namespace flashmap::testing
