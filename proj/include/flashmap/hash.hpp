// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace flashmap {

// XXH64: seeded 64-bit hash used for key routing. The seed is persisted in
// the store manifest, so routing is stable across restarts. Must never
// change behavior once a store has been created with it.
inline constexpr std::string_view kHashId = "xxh64";

uint64_t xxh64(const void* data, size_t len, uint64_t seed);

inline uint64_t xxh64(std::string_view data, uint64_t seed) {
  return xxh64(data.data(), data.size(), seed);
}

}  // namespace flashmap
