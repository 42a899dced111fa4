// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace flashmap {

// CRC-32C (Castagnoli, polynomial 0x1EDC6F41, reflected 0x82F63B78).
// Software slice-by-8 implementation; crc32c("123456789") == 0xE3069283.

uint32_t crc32c_extend(uint32_t crc, const void* data, size_t n);

inline uint32_t crc32c(const void* data, size_t n) {
  return crc32c_extend(0, data, n);
}

inline uint32_t crc32c(std::string_view data) {
  return crc32c(data.data(), data.size());
}

}  // namespace flashmap
