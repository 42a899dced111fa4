// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <string>

namespace flashmap {

// Little-endian fixed-width integer coding. All on-disk formats are
// little-endian regardless of host byte order.

inline void encode_u32(uint8_t* dst, uint32_t v) {
  dst[0] = static_cast<uint8_t>(v);
  dst[1] = static_cast<uint8_t>(v >> 8);
  dst[2] = static_cast<uint8_t>(v >> 16);
  dst[3] = static_cast<uint8_t>(v >> 24);
}

inline void encode_u64(uint8_t* dst, uint64_t v) {
  encode_u32(dst, static_cast<uint32_t>(v));
  encode_u32(dst + 4, static_cast<uint32_t>(v >> 32));
}

inline uint32_t decode_u32(const uint8_t* src) {
  return static_cast<uint32_t>(src[0]) | (static_cast<uint32_t>(src[1]) << 8) |
         (static_cast<uint32_t>(src[2]) << 16) |
         (static_cast<uint32_t>(src[3]) << 24);
}

inline uint64_t decode_u64(const uint8_t* src) {
  return static_cast<uint64_t>(decode_u32(src)) |
         (static_cast<uint64_t>(decode_u32(src + 4)) << 32);
}

inline void encode_i32(uint8_t* dst, int32_t v) {
  encode_u32(dst, static_cast<uint32_t>(v));
}

inline int32_t decode_i32(const uint8_t* src) {
  return static_cast<int32_t>(decode_u32(src));
}

inline void append_u32(std::string& dst, uint32_t v) {
  uint8_t buf[4];
  encode_u32(buf, v);
  dst.append(reinterpret_cast<const char*>(buf), sizeof(buf));
}

inline void append_u64(std::string& dst, uint64_t v) {
  uint8_t buf[8];
  encode_u64(buf, v);
  dst.append(reinterpret_cast<const char*>(buf), sizeof(buf));
}

inline void append_i32(std::string& dst, int32_t v) {
  append_u32(dst, static_cast<uint32_t>(v));
}

}  // namespace flashmap
