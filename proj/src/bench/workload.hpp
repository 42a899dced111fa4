// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flashmap/status.hpp"
#include "flashmap/store.hpp"

namespace flashmap::bench {

enum class Phase { kPopulate, kLookupSeq, kLookupRand, kDelete, kMixed };

const char* phase_name(Phase phase);
std::optional<Phase> parse_phase(std::string_view name);

struct WorkloadSpec {
  Phase phase = Phase::kPopulate;
  uint64_t pair_count = 100000;
  uint32_t key_size = 16;   // >= 8 guarantees distinct keys
  uint32_t value_size = 84; // 16 + 84 = the default 100-byte pair
  uint32_t threads = 1;
  uint32_t update_pct = 20;  // mixed phase
  uint64_t op_count = 0;     // mixed phase; 0 means pair_count ops
  uint64_t seed = 42;
  // Check every looked-up value against the deterministic generator and
  // abort on the first mismatch.
  bool verify = true;
  // Per-thread latency sample cap (reservoir sampling); 0 keeps everything.
  uint64_t latency_reservoir = 1ull << 20;
};

struct BenchReport {
  std::string phase;
  uint32_t threads = 0;
  uint32_t value_size = 0;
  uint64_t ops = 0;
  double secs = 0;
  double ops_per_sec = 0;
  double p95_us = 0;
  double p99_us = 0;
  double p999_us = 0;
  // Mixed-phase breakdown.
  uint64_t updates = 0;
  uint64_t lookups = 0;
  // Order-independent digest of the issued operation sequence; equal specs
  // and seeds must produce equal digests.
  uint64_t sequence_hash = 0;

  static std::string csv_header();
  std::string csv_row() const;
};

// Deterministic workload data. Keys embed a bijective mix of the ordinal,
// so any two ordinals yield distinct keys (for key_size >= 8); values are
// a pure function of (seed, key), which keeps verification valid across
// arbitrary update interleavings.
std::string bench_key(uint64_t seed, uint64_t ordinal, uint32_t key_size);
std::string bench_value(uint64_t seed, std::string_view key,
                        uint32_t value_size);

// Runs one workload phase against an open store with spec.threads workers.
// Read phases require a populated store (PhaseOrderViolation otherwise).
Status run_phase(const WorkloadSpec& spec, Store& store, BenchReport* report);

// Nearest-rank percentile: the ceil(level*n)-th smallest value (1-indexed).
Status percentile(std::span<const uint64_t> sorted, double level,
                  uint64_t* out);

struct SweepSpec {
  std::vector<uint32_t> pair_sizes;  // total key+value bytes per pair
  uint64_t pair_count = 100000;
  uint32_t key_size = 16;
  uint32_t threads = 1;
  uint32_t update_pct = 20;
  uint64_t seed = 42;
  bool verify = true;
};

struct SweepRow {
  uint32_t pair_size = 0;
  double ops_per_sec = 0;
  double mb_per_sec = 0;  // ops_per_sec * pair_size / 1e6
  BenchReport mixed;
};

// Runs populate + mixed on a fresh store per pair size. The factory
// receives the pair size so callers can place each store somewhere fresh.
Status run_sweep(
    const SweepSpec& spec,
    const std::function<Status(uint32_t pair_size, std::unique_ptr<Store>&)>&
        store_factory,
    std::vector<SweepRow>* rows);

}  // namespace flashmap::bench
