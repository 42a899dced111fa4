// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flashmap/record.hpp"
#include "flashmap/status.hpp"

namespace flashmap {

// In-memory ordered map from key to record address. Keys compare in
// unsigned lexicographic byte order. Not internally synchronized: the
// store wraps it in a reader-writer lock (many readers or one writer).
class Index {
 public:
  void update(std::string_view key, Address addr);
  Status lookup(std::string_view key, Address* out) const;
  // Idempotent; removing an absent key is a no-op.
  void remove(std::string_view key);

  // Strict lexicographic successor of `key`. Per the omitted-key
  // convention, next() without a key returns the largest stored pair.
  Status next(std::optional<std::string_view> key, std::string* out_key,
              Address* out_addr) const;
  // Strict predecessor; prev() without a key returns the smallest pair.
  Status prev(std::optional<std::string_view> key, std::string* out_key,
              Address* out_addr) const;

  size_t count() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  // Ordered visit of all entries; callback returns false to stop.
  void for_each(
      const std::function<bool(std::string_view, Address)>& fn) const;

  // Estimated resident bytes of the index structures per stored key.
  // Informative only (reported by the bench tool, never enforced).
  Status memory_per_key(double* out) const;

 private:
  std::map<std::string, Address, std::less<>> entries_;
};

// Snapshot file layout (index.snap), little-endian:
//   magic "FMI1", u32 version (= 1), u32 slot count,
//   u64 generation per slot, u64 entry count,
//   entries: u32 key_len, key bytes, u32 slot, u64 offset,
//   trailing u32 CRC-32C over all preceding bytes.
inline constexpr char kIndexSnapshotMagic[4] = {'F', 'M', 'I', '1'};
inline constexpr uint32_t kIndexSnapshotVersion = 1;

std::string serialize_index(const Index& index,
                            std::span<const uint64_t> generations);

// Restores an index and its generation vector. Any checksum, magic, or
// version mismatch yields CorruptSnapshot.
Status deserialize_index(std::span<const uint8_t> bytes, Index* out,
                         std::vector<uint64_t>* generations);

}  // namespace flashmap
