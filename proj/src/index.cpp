// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashmap/index.hpp"

#include <cstring>

#include "flashmap/coding.hpp"
#include "flashmap/crc32c.hpp"

namespace flashmap {

void Index::update(std::string_view key, Address addr) {
  entries_.insert_or_assign(std::string(key), addr);
}

Status Index::lookup(std::string_view key, Address* out) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    return Status::make(Code::kKeyNotFound);
  }
  *out = it->second;
  return Status::OK();
}

void Index::remove(std::string_view key) {
  if (auto it = entries_.find(key); it != entries_.end()) {
    entries_.erase(it);
  }
}

Status Index::next(std::optional<std::string_view> key, std::string* out_key,
                   Address* out_addr) const {
  if (entries_.empty()) return Status::make(Code::kExhausted);
  if (!key.has_value()) {
    // Omitted-key convention: the largest stored pair.
    auto it = std::prev(entries_.end());
    *out_key = it->first;
    *out_addr = it->second;
    return Status::OK();
  }
  auto it = entries_.upper_bound(*key);
  if (it == entries_.end()) return Status::make(Code::kExhausted);
  *out_key = it->first;
  *out_addr = it->second;
  return Status::OK();
}

Status Index::prev(std::optional<std::string_view> key, std::string* out_key,
                   Address* out_addr) const {
  if (entries_.empty()) return Status::make(Code::kExhausted);
  if (!key.has_value()) {
    // Omitted-key convention: the smallest stored pair.
    auto it = entries_.begin();
    *out_key = it->first;
    *out_addr = it->second;
    return Status::OK();
  }
  auto it = entries_.lower_bound(*key);
  if (it == entries_.begin()) return Status::make(Code::kExhausted);
  --it;
  *out_key = it->first;
  *out_addr = it->second;
  return Status::OK();
}

void Index::for_each(
    const std::function<bool(std::string_view, Address)>& fn) const {
  for (const auto& [key, addr] : entries_) {
    if (!fn(key, addr)) return;
  }
}

Status Index::memory_per_key(double* out) const {
  if (entries_.empty()) {
    return Status::make(Code::kEmpty, "index has no entries");
  }
  // Allocation model for the red-black tree backing std::map: one node per
  // entry (three pointers, color, the pair) plus malloc bookkeeping, plus
  // the key's heap block when it exceeds the small-string buffer.
  constexpr size_t kMallocOverhead = 16;
  constexpr size_t kNodePointers = 4 * sizeof(void*);
  const size_t node =
      kNodePointers + sizeof(std::string) + sizeof(Address) + kMallocOverhead;
  size_t total = 0;
  for (const auto& [key, addr] : entries_) {
    total += node;
    if (key.capacity() > sizeof(std::string) - 1) {
      total += key.capacity() + 1 + kMallocOverhead;
    }
  }
  *out = static_cast<double>(total) / static_cast<double>(entries_.size());
  return Status::OK();
}

std::string serialize_index(const Index& index,
                            std::span<const uint64_t> generations) {
  std::string out;
  out.append(kIndexSnapshotMagic, sizeof(kIndexSnapshotMagic));
  append_u32(out, kIndexSnapshotVersion);
  append_u32(out, static_cast<uint32_t>(generations.size()));
  for (uint64_t g : generations) append_u64(out, g);
  append_u64(out, index.count());
  index.for_each([&](std::string_view key, Address addr) {
    append_u32(out, static_cast<uint32_t>(key.size()));
    out.append(key);
    append_u32(out, addr.slot);
    append_u64(out, addr.offset);
    return true;
  });
  append_u32(out, crc32c(out.data(), out.size()));
  return out;
}

Status deserialize_index(std::span<const uint8_t> bytes, Index* out,
                         std::vector<uint64_t>* generations) {
  auto corrupt = [](const char* what) {
    return Status::make(Code::kCorruptSnapshot, what);
  };
  if (bytes.size() < 4 + 4 + 4 + 8 + 4) return corrupt("snapshot too short");
  if (std::memcmp(bytes.data(), kIndexSnapshotMagic, 4) != 0) {
    return corrupt("bad snapshot magic");
  }
  const uint32_t stored_crc = decode_u32(bytes.data() + bytes.size() - 4);
  if (stored_crc != crc32c(bytes.data(), bytes.size() - 4)) {
    return corrupt("snapshot checksum mismatch");
  }
  size_t pos = 4;
  const uint32_t version = decode_u32(bytes.data() + pos);
  pos += 4;
  if (version != kIndexSnapshotVersion) return corrupt("snapshot version");
  const uint32_t n_slots = decode_u32(bytes.data() + pos);
  pos += 4;
  const size_t body_end = bytes.size() - 4;
  if (pos + 8ull * n_slots + 8 > body_end) return corrupt("truncated header");
  generations->clear();
  generations->reserve(n_slots);
  for (uint32_t i = 0; i < n_slots; ++i) {
    generations->push_back(decode_u64(bytes.data() + pos));
    pos += 8;
  }
  uint64_t entry_count = decode_u64(bytes.data() + pos);
  pos += 8;

  out->clear();
  for (uint64_t i = 0; i < entry_count; ++i) {
    if (pos + 4 > body_end) return corrupt("truncated entry");
    const uint32_t key_len = decode_u32(bytes.data() + pos);
    pos += 4;
    if (key_len == 0 || pos + key_len + 4 + 8 > body_end) {
      return corrupt("truncated entry");
    }
    std::string_view key(reinterpret_cast<const char*>(bytes.data()) + pos,
                         key_len);
    pos += key_len;
    Address addr;
    addr.slot = decode_u32(bytes.data() + pos);
    pos += 4;
    addr.offset = decode_u64(bytes.data() + pos);
    pos += 8;
    out->update(key, addr);
  }
  if (pos != body_end) return corrupt("trailing bytes in snapshot");
  return Status::OK();
}

}  // namespace flashmap
