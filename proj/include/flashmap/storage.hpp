// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>

#include "flashmap/status.hpp"

namespace flashmap {

// Where a store keeps its bytes: a directory of region files, or anonymous
// memory (used for transaction child stores and benchmarks).
struct StorageSpec {
  enum class Kind { kInMemory, kDirectory };

  Kind kind = Kind::kInMemory;
  std::filesystem::path path;  // directory kind only

  static StorageSpec in_memory() { return {}; }
  static StorageSpec directory(std::filesystem::path p) {
    return {Kind::kDirectory, std::move(p)};
  }
  bool is_directory() const { return kind == Kind::kDirectory; }
};

// A fixed-size contiguous byte range with sequential-write/random-read
// access and a TRIM hook. Trimmed (or never written) bytes read as zeros.
//
// Concurrency: one writer plus any number of concurrent readers of already
// written bytes; trim requires exclusive access. Callers enforce this.
class Region {
 public:
  virtual ~Region() = default;

  Status write(uint64_t offset, std::span<const uint8_t> data);
  Status read(uint64_t offset, std::span<uint8_t> out) const;
  Status trim(uint64_t offset, uint64_t length);
  Status flush();

  uint64_t capacity() const { return capacity_; }
  uint32_t id() const { return id_; }
  // Number of trim calls issued against this region. Observable so tests
  // can confirm reclamation actually reached the storage layer.
  uint64_t trim_events() const {
    return trim_events_.load(std::memory_order_relaxed);
  }

 protected:
  Region(uint32_t id, uint64_t capacity) : id_(id), capacity_(capacity) {}

  virtual Status do_write(uint64_t offset, std::span<const uint8_t> data) = 0;
  virtual Status do_read(uint64_t offset, std::span<uint8_t> out) const = 0;
  virtual Status do_trim(uint64_t offset, uint64_t length) = 0;
  virtual Status do_flush() = 0;

 private:
  const uint32_t id_;
  const uint64_t capacity_;
  std::atomic<uint64_t> trim_events_{0};
};

inline constexpr uint64_t kMinRegionCapacity = 4096;

// File name of a region inside a directory spec.
std::string region_file_name(uint32_t region_id);

// Opens (or creates) the region `region_id` of exactly `capacity_bytes`.
// A fresh region reads as all zeros; an existing file-backed region of
// matching size is reopened with contents intact.
Status open_region(const StorageSpec& spec, uint32_t region_id,
                   uint64_t capacity_bytes, std::unique_ptr<Region>& out);

}  // namespace flashmap
