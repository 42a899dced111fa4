// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#include "workload.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstring>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "flashmap/hash.hpp"

namespace flashmap::bench {

namespace {

using Clock = std::chrono::steady_clock;

inline uint64_t splitmix_fin(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void fill_stream(uint8_t* out, size_t n, uint64_t state) {
  size_t i = 0;
  while (i < n) {
    state += 0x9E3779B97F4A7C15ull;
    const uint64_t word = splitmix_fin(state);
    const size_t take = std::min<size_t>(8, n - i);
    std::memcpy(out + i, &word, take);
    i += take;
  }
}

// Bounded latency sample set (reservoir sampling).
class Reservoir {
 public:
  Reservoir(uint64_t cap, uint64_t seed) : cap_(cap), rng_(seed) {}

  void add(uint64_t ns) {
    ++seen_;
    if (cap_ == 0 || samples_.size() < cap_) {
      samples_.push_back(ns);
      return;
    }
    const uint64_t j = rng_() % seen_;
    if (j < cap_) samples_[j] = ns;
  }

  std::vector<uint64_t>& samples() { return samples_; }

 private:
  uint64_t cap_;
  uint64_t seen_ = 0;
  std::mt19937_64 rng_;
  std::vector<uint64_t> samples_;
};

struct WorkerResult {
  Status status;
  uint64_t ops = 0;
  uint64_t updates = 0;
  uint64_t lookups = 0;
  uint64_t sequence_hash = 0;
  std::vector<uint64_t> latencies_ns;
};

}  // namespace

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::kPopulate: return "populate";
    case Phase::kLookupSeq: return "lookup_seq";
    case Phase::kLookupRand: return "lookup_rand";
    case Phase::kDelete: return "delete";
    case Phase::kMixed: return "mixed";
  }
  return "?";
}

std::optional<Phase> parse_phase(std::string_view name) {
  if (name == "populate") return Phase::kPopulate;
  if (name == "lookup_seq") return Phase::kLookupSeq;
  if (name == "lookup_rand") return Phase::kLookupRand;
  if (name == "delete") return Phase::kDelete;
  if (name == "mixed") return Phase::kMixed;
  return std::nullopt;
}

std::string bench_key(uint64_t seed, uint64_t ordinal, uint32_t key_size) {
  std::string key(key_size, '\0');
  auto* out = reinterpret_cast<uint8_t*>(key.data());
  // splitmix_fin is a bijection of the ordinal, so keys of >= 8 bytes are
  // guaranteed unique while still hashing like random data.
  const uint64_t mixed = splitmix_fin(ordinal ^ xxh64("key", 3, seed));
  const size_t head = std::min<size_t>(8, key_size);
  std::memcpy(out, &mixed, head);
  if (key_size > 8) {
    fill_stream(out + 8, key_size - 8, mixed ^ seed);
  }
  return key;
}

std::string bench_value(uint64_t seed, std::string_view key,
                        uint32_t value_size) {
  std::string value(value_size, '\0');
  fill_stream(reinterpret_cast<uint8_t*>(value.data()), value_size,
              xxh64(key, seed ^ 0x76616C75ull));
  return value;
}

Status percentile(std::span<const uint64_t> sorted, double level,
                  uint64_t* out) {
  if (sorted.empty()) {
    return Status::make(Code::kEmpty, "no latency samples");
  }
  size_t rank = static_cast<size_t>(
      std::ceil(level * static_cast<double>(sorted.size())));
  rank = std::clamp<size_t>(rank, 1, sorted.size());
  *out = sorted[rank - 1];
  return Status::OK();
}

std::string BenchReport::csv_header() {
  return "phase,threads,value_size,ops,secs,ops_per_sec,p95_us,p99_us,"
         "p999_us";
}

std::string BenchReport::csv_row() const {
  std::ostringstream os;
  os << phase << ',' << threads << ',' << value_size << ',' << ops << ','
     << secs << ',' << static_cast<uint64_t>(ops_per_sec) << ',' << p95_us
     << ',' << p99_us << ',' << p999_us;
  return os.str();
}

Status run_phase(const WorkloadSpec& spec, Store& store,
                 BenchReport* report) {
  if (spec.pair_count == 0 || spec.threads == 0) {
    return Status::make(Code::kInvalidArgument, "empty workload");
  }
  if (spec.update_pct > 100) {
    return Status::make(Code::kInvalidArgument, "update_pct > 100");
  }
  if (spec.phase != Phase::kPopulate && store.key_count() == 0) {
    return Status::make(Code::kPhaseOrderViolation,
                        "store is empty; run populate first");
  }

  const uint32_t threads = spec.threads;
  std::vector<WorkerResult> results(threads);
  std::atomic<bool> stop{false};
  std::barrier sync(static_cast<std::ptrdiff_t>(threads) + 1);

  auto worker = [&](uint32_t tid) {
    WorkerResult& res = results[tid];
    Reservoir reservoir(spec.latency_reservoir,
                        spec.seed ^ (0x1000 + tid));

    // Contiguous ordinal partition for this worker.
    const uint64_t per = spec.pair_count / threads;
    const uint64_t extra = spec.pair_count % threads;
    const uint64_t lo = tid * per + std::min<uint64_t>(tid, extra);
    const uint64_t hi = lo + per + (tid < extra ? 1 : 0);

    const uint64_t mixed_total =
        spec.op_count == 0 ? spec.pair_count : spec.op_count;
    const uint64_t mixed_ops =
        mixed_total / threads + (tid < mixed_total % threads ? 1 : 0);

    std::mt19937_64 rng(spec.seed ^ (0x9E3779B97F4A7C15ull * (tid + 1)) ^
                        static_cast<uint64_t>(spec.phase));

    std::vector<uint64_t> order;
    if (spec.phase == Phase::kLookupRand) {
      order.reserve(hi - lo);
      for (uint64_t i = lo; i < hi; ++i) order.push_back(i);
      std::shuffle(order.begin(), order.end(), rng);
    }

    std::string value;
    uint64_t seq_hash = 0xFEEDFACECAFEBEEFull ^ tid;
    auto note_op = [&](uint64_t kind, uint64_t ordinal) {
      uint64_t word[2] = {kind, ordinal};
      seq_hash = xxh64(word, sizeof(word), seq_hash);
    };

    auto one_op = [&](uint64_t kind, uint64_t ordinal) -> Status {
      note_op(kind, ordinal);
      const std::string key = bench_key(spec.seed, ordinal, spec.key_size);
      Status s;
      const auto t0 = Clock::now();
      switch (kind) {
        case 0:  // populate insert
          s = store.insert(key,
                           bench_value(spec.seed, key, spec.value_size));
          break;
        case 1:  // lookup
          s = store.lookup(key, &value);
          break;
        case 2:  // delete
          s = store.erase(key);
          break;
        case 3:  // mixed update
          s = store.update(key,
                           bench_value(spec.seed, key, spec.value_size));
          break;
      }
      const auto t1 = Clock::now();
      reservoir.add(static_cast<uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0)
              .count()));
      if (s.ok() && kind == 1 && spec.verify &&
          value != bench_value(spec.seed, key, spec.value_size)) {
        return Status::make(Code::kCorruptStore,
                            "lookup returned an unexpected value");
      }
      if (kind == 1) {
        ++res.lookups;
      } else if (kind == 3) {
        ++res.updates;
      }
      ++res.ops;
      return s;
    };

    sync.arrive_and_wait();

    Status s;
    switch (spec.phase) {
      case Phase::kPopulate:
        for (uint64_t i = lo; i < hi && !stop.load(std::memory_order_relaxed);
             ++i) {
          s = one_op(0, i);
          if (!s.ok()) break;
        }
        break;
      case Phase::kLookupSeq:
        for (uint64_t i = lo; i < hi && !stop.load(std::memory_order_relaxed);
             ++i) {
          s = one_op(1, i);
          if (!s.ok()) break;
        }
        break;
      case Phase::kLookupRand:
        for (uint64_t i : order) {
          if (stop.load(std::memory_order_relaxed)) break;
          s = one_op(1, i);
          if (!s.ok()) break;
        }
        break;
      case Phase::kDelete:
        for (uint64_t i = lo; i < hi && !stop.load(std::memory_order_relaxed);
             ++i) {
          s = one_op(2, i);
          if (!s.ok()) break;
        }
        break;
      case Phase::kMixed:
        for (uint64_t n = 0;
             n < mixed_ops && !stop.load(std::memory_order_relaxed); ++n) {
          const uint64_t ordinal = rng() % spec.pair_count;
          const bool is_update = rng() % 100 < spec.update_pct;
          s = one_op(is_update ? 3 : 1, ordinal);
          if (!s.ok()) break;
        }
        break;
    }
    if (!s.ok()) {
      res.status = s;
      stop.store(true, std::memory_order_relaxed);
    }
    res.sequence_hash = seq_hash;
    res.latencies_ns = std::move(reservoir.samples());
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (uint32_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
  sync.arrive_and_wait();
  const auto t0 = Clock::now();
  for (auto& t : pool) t.join();
  const auto t1 = Clock::now();

  std::vector<uint64_t> all;
  for (auto& res : results) {
    if (!res.status.ok()) return res.status;
    all.insert(all.end(), res.latencies_ns.begin(), res.latencies_ns.end());
  }
  std::sort(all.begin(), all.end());

  report->phase = phase_name(spec.phase);
  report->threads = threads;
  report->value_size = spec.value_size;
  report->ops = 0;
  report->updates = 0;
  report->lookups = 0;
  report->sequence_hash = 0;
  for (const auto& res : results) {
    report->ops += res.ops;
    report->updates += res.updates;
    report->lookups += res.lookups;
    report->sequence_hash ^= res.sequence_hash;
  }
  report->secs =
      std::chrono::duration_cast<std::chrono::duration<double>>(t1 - t0)
          .count();
  report->ops_per_sec =
      report->secs > 0 ? static_cast<double>(report->ops) / report->secs : 0;
  uint64_t p95 = 0, p99 = 0, p999 = 0;
  Status s = percentile(all, 0.95, &p95);
  if (s.ok()) s = percentile(all, 0.99, &p99);
  if (s.ok()) s = percentile(all, 0.999, &p999);
  if (!s.ok()) return s;
  report->p95_us = static_cast<double>(p95) / 1000.0;
  report->p99_us = static_cast<double>(p99) / 1000.0;
  report->p999_us = static_cast<double>(p999) / 1000.0;
  return Status::OK();
}

Status run_sweep(
    const SweepSpec& spec,
    const std::function<Status(uint32_t pair_size, std::unique_ptr<Store>&)>&
        store_factory,
    std::vector<SweepRow>* rows) {
  rows->clear();
  for (const uint32_t pair_size : spec.pair_sizes) {
    if (pair_size <= spec.key_size) {
      return Status::make(Code::kInvalidArgument,
                          "pair size must exceed key size");
    }
    std::unique_ptr<Store> store;
    Status s = store_factory(pair_size, store);
    if (!s.ok()) return s;

    WorkloadSpec phase;
    phase.pair_count = spec.pair_count;
    phase.key_size = spec.key_size;
    phase.value_size = pair_size - spec.key_size;
    phase.threads = spec.threads;
    phase.update_pct = spec.update_pct;
    phase.seed = spec.seed;
    phase.verify = spec.verify;

    BenchReport populate;
    phase.phase = Phase::kPopulate;
    s = run_phase(phase, *store, &populate);
    if (!s.ok()) return s;

    BenchReport mixed;
    phase.phase = Phase::kMixed;
    s = run_phase(phase, *store, &mixed);
    if (!s.ok()) return s;

    SweepRow row;
    row.pair_size = pair_size;
    row.ops_per_sec = mixed.ops_per_sec;
    row.mb_per_sec = mixed.ops_per_sec * pair_size / 1e6;
    row.mixed = mixed;
    rows->push_back(std::move(row));

    s = store->close();
    if (!s.ok()) return s;
  }
  return Status::OK();
}

}  // namespace flashmap::bench
