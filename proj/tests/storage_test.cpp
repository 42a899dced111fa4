// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include "flashmap/storage.hpp"
#include "test_util.hpp"

using namespace flashmap;
using flashmap::testing::TempDir;

namespace {

std::vector<uint8_t> bytes_of(std::string_view s) {
  return {s.begin(), s.end()};
}

std::vector<uint8_t> read_all(const Region& r, uint64_t off, uint64_t n) {
  std::vector<uint8_t> out(n);
  REQUIRE(r.read(off, out).ok());
  return out;
}

// Shadow byte array applying the same operation sequence; the oracle for
// both backings.
class ShadowRegion {
 public:
  explicit ShadowRegion(uint64_t capacity) : bytes_(capacity, 0) {}

  void write(uint64_t off, std::span<const uint8_t> data) {
    std::memcpy(bytes_.data() + off, data.data(), data.size());
  }
  void trim(uint64_t off, uint64_t len) {
    std::memset(bytes_.data() + off, 0, len);
  }
  std::vector<uint8_t> read(uint64_t off, uint64_t n) const {
    return {bytes_.begin() + static_cast<long>(off),
            bytes_.begin() + static_cast<long>(off + n)};
  }
  uint64_t capacity() const { return bytes_.size(); }

 private:
  std::vector<uint8_t> bytes_;
};

}  // namespace

TEST_CASE("fresh regions read as zeros") {
  {
    std::unique_ptr<Region> region;
    REQUIRE(open_region(StorageSpec::in_memory(), 0, 1 << 20, region).ok());
    CHECK(read_all(*region, 0, 16) == std::vector<uint8_t>(16, 0));
  }
  TempDir dir("storage-fresh");
  std::unique_ptr<Region> region;
  REQUIRE(open_region(StorageSpec::directory(dir), 0, 1 << 20, region).ok());
  CHECK(read_all(*region, 0, 16) == std::vector<uint8_t>(16, 0));
  CHECK(read_all(*region, 4096, 64) == std::vector<uint8_t>(64, 0));
  CHECK(read_all(*region, (1 << 20) - 8, 8) == std::vector<uint8_t>(8, 0));
}

TEST_CASE("write/flush/read round trip and reopen persistence") {
  TempDir dir("storage-reopen");
  const auto spec = StorageSpec::directory(dir);
  const auto payload = bytes_of("strand payload bytes");
  {
    std::unique_ptr<Region> region;
    REQUIRE(open_region(spec, 3, 64 << 10, region).ok());
    REQUIRE(region->write(128, payload).ok());
    REQUIRE(region->flush().ok());
    REQUIRE(region->flush().ok());  // idempotent
  }
  {
    std::unique_ptr<Region> region;
    REQUIRE(open_region(spec, 3, 64 << 10, region).ok());
    CHECK(read_all(*region, 128, payload.size()) == payload);
    CHECK(std::filesystem::exists(dir.path() / "strand-3.dat"));
    CHECK(std::filesystem::file_size(dir.path() / "strand-3.dat") ==
          64 << 10);
  }
}

TEST_CASE("64KiB sequential write round trip") {
  std::unique_ptr<Region> region;
  REQUIRE(open_region(StorageSpec::in_memory(), 0, 1 << 20, region).ok());
  std::mt19937_64 rng(3);
  std::vector<uint8_t> data(64 << 10);
  for (auto& b : data) b = static_cast<uint8_t>(rng());
  REQUIRE(region->write(0, data).ok());
  REQUIRE(region->flush().ok());
  CHECK(read_all(*region, 0, data.size()) == data);
}

TEST_CASE("capacity mismatch on reopen") {
  TempDir dir("storage-capmis");
  const auto spec = StorageSpec::directory(dir);
  {
    std::unique_ptr<Region> region;
    REQUIRE(open_region(spec, 0, 64 << 10, region).ok());
  }
  std::unique_ptr<Region> region;
  Status s = open_region(spec, 0, 128 << 10, region);
  CHECK(s.is(Code::kCapacityMismatch));
}

TEST_CASE("unusable spec") {
  std::unique_ptr<Region> region;
  // A path under a regular file cannot become a directory.
  TempDir dir("storage-unusable");
  std::ofstream(dir.path() / "blocker") << "x";
  Status s = open_region(
      StorageSpec::directory(dir.path() / "blocker" / "sub"), 0, 1 << 20,
      region);
  CHECK(s.is(Code::kSpecUnusable));
}

TEST_CASE("bounds checks") {
  std::unique_ptr<Region> region;
  REQUIRE(open_region(StorageSpec::in_memory(), 0, 4096, region).ok());
  uint8_t two[2] = {1, 2};
  CHECK(region->write(4095, two).is(Code::kOutOfBounds));
  CHECK(region->write(4096, two).is(Code::kOutOfBounds));
  uint8_t one[1];
  CHECK(region->read(4096, one).is(Code::kOutOfBounds));
  CHECK(region->trim(4000, 97).is(Code::kOutOfBounds));
  CHECK(region->write(4094, two).ok());
  CHECK(region->read(4095, one).ok());
}

TEST_CASE("trim zeroes, counts events, and allows rewrite") {
  for (int file_backed = 0; file_backed < 2; ++file_backed) {
    TempDir dir("storage-trim");
    const auto spec = file_backed ? StorageSpec::directory(dir)
                                  : StorageSpec::in_memory();
    std::unique_ptr<Region> region;
    REQUIRE(open_region(spec, 0, 1 << 20, region).ok());

    std::vector<uint8_t> data(1 << 20, 0xAB);
    REQUIRE(region->write(0, data).ok());
    REQUIRE(region->flush().ok());
    CHECK(region->trim_events() == 0);
    REQUIRE(region->trim(0, 1 << 20).ok());
    CHECK(region->trim_events() == 1);
    CHECK(read_all(*region, 0, 1 << 20) == std::vector<uint8_t>(1 << 20, 0));

    const auto again = bytes_of("after trim");
    REQUIRE(region->write(10, again).ok());
    CHECK(read_all(*region, 10, again.size()) == again);
  }
}

TEST_CASE("trim middle third leaves outer thirds intact") {
  std::mt19937_64 rng(11);
  const uint64_t cap = 3 * 4096;
  for (int file_backed = 0; file_backed < 2; ++file_backed) {
    TempDir dir("storage-midtrim");
    const auto spec = file_backed ? StorageSpec::directory(dir)
                                  : StorageSpec::in_memory();
    std::unique_ptr<Region> region;
    REQUIRE(open_region(spec, 0, cap, region).ok());
    ShadowRegion shadow(cap);

    std::vector<uint8_t> data(cap);
    for (auto& b : data) b = static_cast<uint8_t>(rng());
    REQUIRE(region->write(0, data).ok());
    shadow.write(0, data);

    REQUIRE(region->trim(4096, 4096).ok());
    shadow.trim(4096, 4096);
    CHECK(read_all(*region, 0, cap) == shadow.read(0, cap));
  }
}

// The module's central property: reads agree byte-for-byte with a shadow
// array under any write/trim/flush sequence, and the two backings are
// observationally equivalent.
TEST_CASE("randomized shadow-array differential, both backings") {
  std::mt19937_64 rng(1234);
  const uint64_t cap = 1 << 20;
  TempDir dir("storage-diff");
  std::unique_ptr<Region> mem;
  std::unique_ptr<Region> file;
  REQUIRE(open_region(StorageSpec::in_memory(), 0, cap, mem).ok());
  REQUIRE(open_region(StorageSpec::directory(dir), 0, cap, file).ok());
  ShadowRegion shadow(cap);

  for (int step = 0; step < 2000; ++step) {
    const int op = static_cast<int>(rng() % 10);
    const uint64_t off = rng() % cap;
    const uint64_t max_len = std::min<uint64_t>(cap - off, 64 << 10);
    const uint64_t len = max_len == 0 ? 0 : rng() % (max_len + 1);
    if (op < 4) {
      std::vector<uint8_t> data(len);
      for (auto& b : data) b = static_cast<uint8_t>(rng());
      REQUIRE(mem->write(off, data).ok());
      REQUIRE(file->write(off, data).ok());
      shadow.write(off, data);
    } else if (op < 6) {
      REQUIRE(mem->trim(off, len).ok());
      REQUIRE(file->trim(off, len).ok());
      shadow.trim(off, len);
    } else if (op < 7) {
      REQUIRE(mem->flush().ok());
      REQUIRE(file->flush().ok());
    } else {
      const auto expect = shadow.read(off, len);
      CHECK(read_all(*mem, off, len) == expect);
      CHECK(read_all(*file, off, len) == expect);
    }
  }
  CHECK(read_all(*mem, 0, cap) == shadow.read(0, cap));
  CHECK(read_all(*file, 0, cap) == shadow.read(0, cap));
}

TEST_CASE("sequential 64KiB writes then random 4KiB reads") {
  TempDir dir("storage-seq");
  const uint64_t chunk = 64 << 10;
  const uint64_t n_chunks = 64;
  std::unique_ptr<Region> region;
  REQUIRE(
      open_region(StorageSpec::directory(dir), 0, chunk * n_chunks, region)
          .ok());
  std::mt19937_64 rng(5);
  ShadowRegion shadow(chunk * n_chunks);
  for (uint64_t i = 0; i < n_chunks; ++i) {
    std::vector<uint8_t> data(chunk);
    for (auto& b : data) b = static_cast<uint8_t>(rng());
    REQUIRE(region->write(i * chunk, data).ok());
    shadow.write(i * chunk, data);
  }
  REQUIRE(region->flush().ok());
  for (int i = 0; i < 500; ++i) {
    const uint64_t off = rng() % (chunk * n_chunks - 4096);
    CHECK(read_all(*region, off, 4096) == shadow.read(off, 4096));
  }
}

TEST_CASE("capacity below minimum rejected") {
  std::unique_ptr<Region> region;
  CHECK(open_region(StorageSpec::in_memory(), 0, 1024, region)
            .is(Code::kInvalidArgument));
}
