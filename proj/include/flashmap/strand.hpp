// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "flashmap/record.hpp"
#include "flashmap/status.hpp"
#include "flashmap/storage.hpp"

namespace flashmap {

// Strand header, 64 bytes at region offset 0, little-endian:
//   bytes  0..3   magic "FMS1"
//   bytes  4..7   format version (= 1)
//   bytes  8..11  slot (kSpareSlot when not mounted)
//   bytes 12..19  generation
//   bytes 20..27  capacity
//   bytes 28..63  zero
inline constexpr size_t kStrandHeaderSize = 64;
inline constexpr char kStrandMagic[4] = {'F', 'M', 'S', '1'};
inline constexpr uint32_t kStrandFormatVersion = 1;
inline constexpr uint32_t kSpareSlot = 0xFFFFFFFFu;

struct StrandHeader {
  uint32_t version = kStrandFormatVersion;
  uint32_t slot = kSpareSlot;
  uint64_t generation = 0;
  uint64_t capacity = 0;
};

void encode_strand_header(const StrandHeader& h,
                          uint8_t out[kStrandHeaderSize]);
Status decode_strand_header(std::span<const uint8_t> bytes, StrandHeader& out);

struct StrandOptions {
  // Appends are staged here and drained to the region in one large
  // sequential write. 0 writes records straight through.
  uint64_t write_buffer_bytes = 32ull << 20;
  // Decoded-record cache for point reads. 0 disables caching.
  uint64_t read_cache_bytes = 0;
};

// An append-only, log-structured array of records over one Region.
// Records never move within a generation; reset() trims the region and
// starts the next generation.
//
// Concurrency: one appender at a time; any number of concurrent readers;
// reset/remount require exclusive access (enforced by the store).
class Strand {
 public:
  using RecordFn = std::function<bool(uint64_t offset, const Record& rec)>;

  // Initializes a fresh strand: writes the header and flushes it.
  static Status create(std::unique_ptr<Region> region, uint32_t slot,
                       uint64_t generation, const StrandOptions& opts,
                       std::unique_ptr<Strand>& out);

  // Reopens an existing strand from its header. The tail is unknown until
  // recover() scans the log.
  static Status open_existing(std::unique_ptr<Region> region,
                              const StrandOptions& opts,
                              std::unique_ptr<Strand>& out);

  // Determines the tail by scanning records until the first corruption
  // (torn final write or erased tail). Each fully recovered record is
  // handed to `replay` when given. With `scrub_garbage`, any non-zero
  // bytes past the recovered tail are zeroed so that partially persisted
  // writes from a previous run can never alias future record boundaries.
  Status recover(bool scrub_garbage, const RecordFn* replay = nullptr);

  // Appends a record, staging it in the write buffer. Returns the record's
  // offset; offsets strictly increase within a generation.
  Status append(const Record& rec, uint64_t* offset);

  // Point read. Served from the record cache when present; reads through
  // the write buffer, so records are visible before any flush.
  Status read(uint64_t offset, Record* out) const;

  // Visits records of [begin, end) in append order. The callback returns
  // false to stop early. Corruption inside the range is an error.
  Status for_each(uint64_t begin, uint64_t end, const RecordFn& fn) const;

  // Full scan of [kStrandHeaderSize, tail).
  Status scan(const RecordFn& fn) const;

  // Drains the write buffer and makes the region durable.
  Status flush();

  // Trims the whole region and starts generation + 1 at the same slot.
  // Write buffer and record cache are dropped.
  Status reset();

  // Trims and re-identifies the strand (GC repurposes spares with the
  // target generation before copying into them).
  Status reset_as(uint32_t slot, uint64_t generation);

  // Rewrites the header with a new slot, keeping data and generation.
  // This is the GC swap commit point; callers flush data first.
  Status remount(uint32_t slot);

  uint64_t tail() const { return tail_.load(std::memory_order_acquire); }
  uint64_t capacity() const { return region_->capacity(); }
  uint64_t remaining() const { return capacity() - tail(); }
  double utilization() const {
    return static_cast<double>(tail()) / static_cast<double>(capacity());
  }
  uint32_t slot() const { return slot_.load(std::memory_order_acquire); }
  bool is_spare() const { return slot() == kSpareSlot; }
  uint64_t generation() const {
    return generation_.load(std::memory_order_acquire);
  }
  uint64_t cache_hits() const {
    return cache_hits_.load(std::memory_order_relaxed);
  }
  uint64_t cache_misses() const {
    return cache_misses_.load(std::memory_order_relaxed);
  }
  const Region& region() const { return *region_; }

 private:
  class RecordCache {
   public:
    explicit RecordCache(uint64_t capacity_bytes) : cap_(capacity_bytes) {}
    bool get(uint64_t gen, uint64_t off, Record* out);
    void put(uint64_t gen, uint64_t off, const Record& rec);
    void clear();

   private:
    struct Key {
      uint64_t gen, off;
      bool operator==(const Key&) const = default;
    };
    struct KeyHash {
      size_t operator()(const Key& k) const {
        return std::hash<uint64_t>()(k.off * 0x9E3779B97F4A7C15ull ^ k.gen);
      }
    };
    struct Entry {
      Key key;
      Record rec;
      size_t charge;
    };

    std::mutex mu_;
    std::list<Entry> lru_;
    std::unordered_map<Key, std::list<Entry>::iterator, KeyHash> map_;
    uint64_t cap_;
    uint64_t used_ = 0;
  };

  Strand(std::unique_ptr<Region> region, const StrandOptions& opts);

  Status write_header_locked();
  Status drain_locked();
  // Reads [offset, offset+out.size()), transparently covering bytes still
  // in the write buffer.
  Status read_raw(uint64_t offset, std::span<uint8_t> out) const;
  Status scan_range(uint64_t begin, uint64_t end, const RecordFn& fn,
                    bool stop_at_corruption, uint64_t* stopped_at) const;
  Status scrub_tail_garbage();
  Status reset_locked(uint32_t slot, uint64_t generation);

  std::unique_ptr<Region> region_;
  StrandOptions opts_;

  std::atomic<uint32_t> slot_{kSpareSlot};
  std::atomic<uint64_t> generation_{0};
  std::atomic<uint64_t> tail_{kStrandHeaderSize};
  // Bytes below `flushed_` live in the region; [flushed_, tail_) in buf_.
  std::atomic<uint64_t> flushed_{kStrandHeaderSize};

  mutable std::mutex append_mu_;
  std::string buf_;

  mutable RecordCache cache_;
  mutable std::atomic<uint64_t> cache_hits_{0};
  mutable std::atomic<uint64_t> cache_misses_{0};
};

}  // namespace flashmap
