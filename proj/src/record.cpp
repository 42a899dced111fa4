// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashmap/record.hpp"

#include <cstring>

#include "flashmap/coding.hpp"
#include "flashmap/crc32c.hpp"

namespace flashmap {

namespace {

inline bool magic_matches(const uint8_t* p) {
  return std::memcmp(p, kRecordMagic, sizeof(kRecordMagic)) == 0;
}

}  // namespace

Status encode_record(const Record& rec, std::string& out) {
  if (rec.key.empty() || rec.key.size() > kMaxKeyLen) {
    return Status::make(Code::kKeyTooLarge, "key length out of range");
  }
  if (!rec.tombstone && rec.value.size() > kMaxValueLen) {
    return Status::make(Code::kValueTooLarge, "value length out of range");
  }

  const size_t base = out.size();
  const uint64_t val_bytes = rec.tombstone ? 0 : rec.value.size();
  out.reserve(base + kRecordHeaderSize + rec.key.size() + val_bytes);

  out.append(kRecordMagic, sizeof(kRecordMagic));
  append_u32(out, 0);  // checksum patched below
  append_u64(out, rec.link);
  append_u32(out, static_cast<uint32_t>(rec.key.size()));
  append_i32(out, rec.tombstone ? -1 : static_cast<int32_t>(rec.value.size()));
  out.append(rec.key);
  if (!rec.tombstone) out.append(rec.value);

  const auto* body = reinterpret_cast<const uint8_t*>(out.data()) + base + 8;
  const uint32_t crc = crc32c_extend(0, body, out.size() - base - 8);
  encode_u32(reinterpret_cast<uint8_t*>(out.data()) + base + 4, crc);
  return Status::OK();
}

Status peek_record_size(std::span<const uint8_t> header, uint64_t* size) {
  if (header.size() < kRecordHeaderSize) {
    return Status::make(Code::kCorruptRecord, "truncated record header");
  }
  if (!magic_matches(header.data())) {
    return Status::make(Code::kCorruptRecord, "bad record magic");
  }
  const uint32_t key_len = decode_u32(header.data() + 16);
  const int32_t val_len = decode_i32(header.data() + 20);
  if (key_len == 0 || val_len < -1) {
    return Status::make(Code::kCorruptRecord, "implausible record lengths");
  }
  *size = encoded_record_size(key_len, val_len < 0 ? 0 :uint64_t(val_len));
  return Status::OK();
}

Status decode_record(std::span<const uint8_t> bytes, Record& out,
                     uint64_t* consumed) {
  uint64_t size = 0;
  Status s = peek_record_size(bytes, &size);
  if (!s.ok()) return s;
  if (bytes.size() < size) {
    return Status::make(Code::kCorruptRecord, "record extends past data end");
  }

  const uint32_t stored_crc = decode_u32(bytes.data() + 4);
  const uint32_t actual_crc = crc32c_extend(0, bytes.data() + 8, size - 8);
  if (stored_crc != actual_crc) {
    return Status::make(Code::kCorruptRecord, "record checksum mismatch");
  }

  const uint32_t key_len = decode_u32(bytes.data() + 16);
  const int32_t val_len = decode_i32(bytes.data() + 20);
  out.link = decode_u64(bytes.data() + 8);
  out.tombstone = val_len < 0;
  out.key.assign(reinterpret_cast<const char*>(bytes.data()) +
                     kRecordHeaderSize,
                 key_len);
  if (out.tombstone) {
    out.value.clear();
  } else {
    out.value.assign(reinterpret_cast<const char*>(bytes.data()) +
                         kRecordHeaderSize + key_len,
                     static_cast<uint32_t>(val_len));
  }
  if (consumed != nullptr) *consumed = size;
  return Status::OK();
}

}  // namespace flashmap
