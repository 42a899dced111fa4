// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "flashmap/status.hpp"

namespace flashmap {

// Location of a record: the slot a strand is mounted at plus the byte
// offset of the record's magic within that strand.
struct Address {
  uint32_t slot = 0;
  uint64_t offset = 0;

  bool operator==(const Address&) const = default;
};

inline constexpr uint64_t kNilLink = ~0ull;

// On-disk record layout, little-endian, no padding:
//   bytes  0..3   magic "FMR1"
//   bytes  4..7   CRC-32C over bytes 8..end
//   bytes  8..15  link offset of the previous version (kNilLink = none)
//   bytes 16..19  key_len  (unsigned)
//   bytes 20..23  val_len  (signed; -1 marks a tombstone)
//   bytes 24..    key, then max(val_len, 0) value bytes
inline constexpr size_t kRecordHeaderSize = 24;
inline constexpr char kRecordMagic[4] = {'F', 'M', 'R', '1'};
inline constexpr uint64_t kMaxKeyLen = 0xFFFFFFFFull;
inline constexpr uint64_t kMaxValueLen = 0x7FFFFFFFull;

struct Record {
  uint64_t link = kNilLink;  // previous version of the same key, same strand
  std::string key;
  std::string value;   // empty when tombstone
  bool tombstone = false;

  bool operator==(const Record&) const = default;

  static Record put(std::string key, std::string value,
                    uint64_t link = kNilLink) {
    return Record{link, std::move(key), std::move(value), false};
  }
  static Record make_tombstone(std::string key, uint64_t link = kNilLink) {
    return Record{link, std::move(key), {}, true};
  }
};

inline uint64_t encoded_record_size(uint64_t key_len, uint64_t val_len) {
  return kRecordHeaderSize + key_len + val_len;
}

inline uint64_t encoded_record_size(const Record& rec) {
  return encoded_record_size(rec.key.size(),
                             rec.tombstone ? 0 : rec.value.size());
}

// Appends the encoded record to `out`. decode_record(encode_record(r)) == r.
Status encode_record(const Record& rec, std::string& out);

// Decodes one record starting at bytes[0]. `bytes` may extend past the
// record; `consumed` receives its encoded size. Verifies magic and checksum.
Status decode_record(std::span<const uint8_t> bytes, Record& out,
                     uint64_t* consumed = nullptr);

// Header-only pre-parse used by scans: validates magic and field sanity,
// returning the full encoded size without touching the body.
Status peek_record_size(std::span<const uint8_t> header, uint64_t* size);

}  // namespace flashmap
