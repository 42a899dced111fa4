// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashmap/strand.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "flashmap/coding.hpp"

namespace flashmap {

namespace {
constexpr uint64_t kScanChunk = 256 * 1024;
constexpr uint64_t kScrubChunk = 1 << 20;
constexpr size_t kCacheEntryOverhead = 64;
}  // namespace

void encode_strand_header(const StrandHeader& h,
                          uint8_t out[kStrandHeaderSize]) {
  std::memset(out, 0, kStrandHeaderSize);
  std::memcpy(out, kStrandMagic, sizeof(kStrandMagic));
  encode_u32(out + 4, h.version);
  encode_u32(out + 8, h.slot);
  encode_u64(out + 12, h.generation);
  encode_u64(out + 20, h.capacity);
}

Status decode_strand_header(std::span<const uint8_t> bytes,
                            StrandHeader& out) {
  if (bytes.size() < kStrandHeaderSize) {
    return Status::make(Code::kCorruptRecord, "short strand header");
  }
  if (std::memcmp(bytes.data(), kStrandMagic, sizeof(kStrandMagic)) != 0) {
    return Status::make(Code::kCorruptRecord, "bad strand magic");
  }
  out.version = decode_u32(bytes.data() + 4);
  if (out.version != kStrandFormatVersion) {
    return Status::make(Code::kCorruptRecord, "unsupported strand version");
  }
  out.slot = decode_u32(bytes.data() + 8);
  out.generation = decode_u64(bytes.data() + 12);
  out.capacity = decode_u64(bytes.data() + 20);
  return Status::OK();
}

// ---------------------------------------------------------------- cache

bool Strand::RecordCache::get(uint64_t gen, uint64_t off, Record* out) {
  if (cap_ == 0) return false;
  std::lock_guard lock(mu_);
  auto it = map_.find(Key{gen, off});
  if (it == map_.end()) return false;
  lru_.splice(lru_.begin(), lru_, it->second);
  *out = it->second->rec;
  return true;
}

void Strand::RecordCache::put(uint64_t gen, uint64_t off, const Record& rec) {
  if (cap_ == 0) return;
  const size_t charge =
      rec.key.size() + rec.value.size() + kCacheEntryOverhead;
  if (charge > cap_) return;
  std::lock_guard lock(mu_);
  const Key key{gen, off};
  if (auto it = map_.find(key); it != map_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  lru_.push_front(Entry{key, rec, charge});
  map_[key] = lru_.begin();
  used_ += charge;
  while (used_ > cap_ && !lru_.empty()) {
    const Entry& victim = lru_.back();
    used_ -= victim.charge;
    map_.erase(victim.key);
    lru_.pop_back();
  }
}

void Strand::RecordCache::clear() {
  std::lock_guard lock(mu_);
  lru_.clear();
  map_.clear();
  used_ = 0;
}

// ---------------------------------------------------------------- strand

Strand::Strand(std::unique_ptr<Region> region, const StrandOptions& opts)
    : region_(std::move(region)), opts_(opts), cache_(opts.read_cache_bytes) {}

Status Strand::create(std::unique_ptr<Region> region, uint32_t slot,
                      uint64_t generation, const StrandOptions& opts,
                      std::unique_ptr<Strand>& out) {
  if (region->capacity() < kStrandHeaderSize + kRecordHeaderSize) {
    return Status::make(Code::kInvalidArgument, "region too small");
  }
  auto strand = std::unique_ptr<Strand>(new Strand(std::move(region), opts));
  strand->slot_.store(slot, std::memory_order_release);
  strand->generation_.store(generation, std::memory_order_release);
  std::lock_guard lock(strand->append_mu_);
  Status s = strand->write_header_locked();
  if (!s.ok()) return s;
  s = strand->region_->flush();
  if (!s.ok()) return s;
  out = std::move(strand);
  return Status::OK();
}

Status Strand::open_existing(std::unique_ptr<Region> region,
                             const StrandOptions& opts,
                             std::unique_ptr<Strand>& out) {
  uint8_t raw[kStrandHeaderSize];
  Status s = region->read(0, raw);
  if (!s.ok()) return s;
  StrandHeader hdr;
  s = decode_strand_header(raw, hdr);
  if (!s.ok()) return s;
  if (hdr.capacity != region->capacity()) {
    return Status::make(Code::kCapacityMismatch,
                        "strand header capacity does not match region");
  }
  auto strand = std::unique_ptr<Strand>(new Strand(std::move(region), opts));
  strand->slot_.store(hdr.slot, std::memory_order_release);
  strand->generation_.store(hdr.generation, std::memory_order_release);
  // Tail unknown until recover(); expose the full region to read_raw so the
  // recovery scan can reach it.
  strand->tail_.store(strand->region_->capacity(), std::memory_order_release);
  strand->flushed_.store(strand->region_->capacity(),
                         std::memory_order_release);
  out = std::move(strand);
  return Status::OK();
}

Status Strand::recover(bool scrub_garbage, const RecordFn* replay) {
  uint64_t recovered_tail = kStrandHeaderSize;
  RecordFn noop = [](uint64_t, const Record&) { return true; };
  Status s = scan_range(kStrandHeaderSize, capacity(),
                        replay != nullptr ? *replay : noop,
                        /*stop_at_corruption=*/true, &recovered_tail);
  if (!s.ok()) return s;
  tail_.store(recovered_tail, std::memory_order_release);
  flushed_.store(recovered_tail, std::memory_order_release);
  if (scrub_garbage) {
    s = scrub_tail_garbage();
    if (!s.ok()) return s;
  }
  return Status::OK();
}

Status Strand::scrub_tail_garbage() {
  std::vector<uint8_t> chunk(kScrubChunk);
  std::vector<uint8_t> zeros;
  uint64_t pos = tail();
  bool wrote = false;
  while (pos < capacity()) {
    const uint64_t n = std::min<uint64_t>(kScrubChunk, capacity() - pos);
    Status s = region_->read(pos, std::span(chunk.data(), n));
    if (!s.ok()) return s;
    const bool dirty =
        std::any_of(chunk.begin(), chunk.begin() + static_cast<long>(n),
                    [](uint8_t b) { return b != 0; });
    if (dirty) {
      if (zeros.empty()) zeros.assign(kScrubChunk, 0);
      s = region_->write(pos, std::span(zeros.data(), n));
      if (!s.ok()) return s;
      wrote = true;
    }
    pos += n;
  }
  return wrote ? region_->flush() : Status::OK();
}

Status Strand::write_header_locked() {
  StrandHeader hdr;
  hdr.slot = slot_.load(std::memory_order_relaxed);
  hdr.generation = generation_.load(std::memory_order_relaxed);
  hdr.capacity = region_->capacity();
  uint8_t raw[kStrandHeaderSize];
  encode_strand_header(hdr, raw);
  return region_->write(0, raw);
}

Status Strand::drain_locked() {
  if (buf_.empty()) return Status::OK();
  const uint64_t base = flushed_.load(std::memory_order_relaxed);
  Status s = region_->write(
      base, std::span(reinterpret_cast<const uint8_t*>(buf_.data()),
                      buf_.size()));
  if (!s.ok()) return s;
  flushed_.store(base + buf_.size(), std::memory_order_release);
  buf_.clear();
  return Status::OK();
}

Status Strand::append(const Record& rec, uint64_t* offset) {
  const uint64_t size = encoded_record_size(rec);
  std::lock_guard lock(append_mu_);
  const uint64_t at = tail_.load(std::memory_order_relaxed);
  if (size > capacity() - at) {
    return Status::make(Code::kStrandFull, "strand has no room for record");
  }

  if (opts_.write_buffer_bytes == 0) {
    std::string scratch;
    Status s = encode_record(rec, scratch);
    if (!s.ok()) return s;
    s = region_->write(at,
                       std::span(reinterpret_cast<const uint8_t*>(
                                     scratch.data()),
                                 scratch.size()));
    if (!s.ok()) return s;
    flushed_.store(at + size, std::memory_order_release);
  } else {
    if (buf_.size() + size > opts_.write_buffer_bytes) {
      Status s = drain_locked();
      if (!s.ok()) return s;
    }
    if (size > opts_.write_buffer_bytes) {
      // Oversized record: bypass the buffer (it was just drained).
      std::string scratch;
      Status s = encode_record(rec, scratch);
      if (!s.ok()) return s;
      s = region_->write(at, std::span(reinterpret_cast<const uint8_t*>(
                                           scratch.data()),
                                       scratch.size()));
      if (!s.ok()) return s;
      flushed_.store(at + size, std::memory_order_release);
    } else {
      Status s = encode_record(rec, buf_);
      if (!s.ok()) return s;
    }
  }

  tail_.store(at + size, std::memory_order_release);
  if (offset != nullptr) *offset = at;
  return Status::OK();
}

Status Strand::read_raw(uint64_t offset, std::span<uint8_t> out) const {
  const uint64_t f = flushed_.load(std::memory_order_acquire);
  if (offset + out.size() <= f) {
    return region_->read(offset, out);
  }
  // Part of the range may still be buffered; resolve under the append
  // lock. A concurrent drain can advance flushed_ past the sample above,
  // so the region-served portion must be clamped to the span.
  std::lock_guard lock(append_mu_);
  const uint64_t base = flushed_.load(std::memory_order_relaxed);
  const uint64_t end = offset + out.size();
  if (end > base + buf_.size()) {
    return Status::make(Code::kBadAddress, "read past strand tail");
  }
  const uint64_t n_region =
      offset < base ? std::min<uint64_t>(base - offset, out.size()) : 0;
  if (n_region > 0) {
    Status s = region_->read(offset, out.subspan(0, n_region));
    if (!s.ok()) return s;
  }
  if (out.size() > n_region) {
    std::memcpy(out.data() + n_region,
                buf_.data() + (offset + n_region - base),
                out.size() - n_region);
  }
  return Status::OK();
}

Status Strand::read(uint64_t offset, Record* out) const {
  const uint64_t limit = tail();
  if (offset < kStrandHeaderSize || offset >= limit) {
    return Status::make(Code::kBadAddress, "offset outside strand log");
  }
  const uint64_t gen = generation();
  if (cache_.get(gen, offset, out)) {
    cache_hits_.fetch_add(1, std::memory_order_relaxed);
    return Status::OK();
  }
  cache_misses_.fetch_add(1, std::memory_order_relaxed);

  uint8_t hdr[kRecordHeaderSize];
  Status s = read_raw(offset, hdr);
  if (!s.ok()) return s;
  uint64_t size = 0;
  s = peek_record_size(hdr, &size);
  if (!s.ok()) return s;
  if (size > limit - offset) {
    return Status::make(Code::kBadAddress, "record extends past tail");
  }

  std::vector<uint8_t> raw(size);
  s = read_raw(offset, raw);
  if (!s.ok()) return s;
  s = decode_record(raw, *out);
  if (!s.ok()) return s;
  cache_.put(gen, offset, *out);
  return Status::OK();
}

Status Strand::scan_range(uint64_t begin, uint64_t end, const RecordFn& fn,
                          bool stop_at_corruption,
                          uint64_t* stopped_at) const {
  std::vector<uint8_t> win;
  uint64_t win_off = 0;
  uint64_t win_len = 0;

  // Loads [pos, pos + need) into the window, reading ahead up to a chunk.
  auto load = [&](uint64_t pos, uint64_t need) -> Status {
    const uint64_t len = std::min(std::max(need, kScanChunk), end - pos);
    win.resize(len);
    Status s = read_raw(pos, std::span(win.data(), len));
    if (!s.ok()) return s;
    win_off = pos;
    win_len = len;
    return Status::OK();
  };
  auto in_window = [&](uint64_t pos, uint64_t need) {
    return pos >= win_off && pos + need <= win_off + win_len;
  };

  uint64_t pos = begin;
  Record rec;
  while (pos + kRecordHeaderSize <= end) {
    if (!in_window(pos, kRecordHeaderSize)) {
      Status s = load(pos, kRecordHeaderSize);
      if (!s.ok()) return s;
    }
    const uint8_t* base = win.data() + (pos - win_off);
    uint64_t size = 0;
    Status s = peek_record_size({base, win_len - (pos - win_off)}, &size);
    if (s.ok() && pos + size > end) {
      s = Status::make(Code::kCorruptRecord, "record extends past scan end");
    }
    if (s.ok() && !in_window(pos, size)) {
      s = load(pos, size);
      base = win.data();
      if (s.ok()) {
        s = decode_record({base, win_len}, rec);
      }
    } else if (s.ok()) {
      s = decode_record({base, win_len - (pos - win_off)}, rec);
    }
    if (!s.ok()) {
      if (stop_at_corruption && s.is(Code::kCorruptRecord)) break;
      return s;
    }
    if (!fn(pos, rec)) {
      pos += size;
      if (stopped_at != nullptr) *stopped_at = pos;
      return Status::OK();
    }
    pos += size;
  }
  if (stopped_at != nullptr) *stopped_at = pos;
  return Status::OK();
}

Status Strand::for_each(uint64_t begin, uint64_t end,
                        const RecordFn& fn) const {
  return scan_range(begin, end, fn, /*stop_at_corruption=*/false, nullptr);
}

Status Strand::scan(const RecordFn& fn) const {
  return for_each(kStrandHeaderSize, tail(), fn);
}

Status Strand::flush() {
  std::lock_guard lock(append_mu_);
  Status s = drain_locked();
  if (!s.ok()) return s;
  return region_->flush();
}

Status Strand::reset_locked(uint32_t slot, uint64_t generation) {
  Status s = region_->trim(0, capacity());
  if (!s.ok()) return s;
  slot_.store(slot, std::memory_order_release);
  generation_.store(generation, std::memory_order_release);
  buf_.clear();
  tail_.store(kStrandHeaderSize, std::memory_order_release);
  flushed_.store(kStrandHeaderSize, std::memory_order_release);
  cache_.clear();
  s = write_header_locked();
  if (!s.ok()) return s;
  return region_->flush();
}

Status Strand::reset() {
  std::lock_guard lock(append_mu_);
  return reset_locked(slot_.load(std::memory_order_relaxed),
                      generation_.load(std::memory_order_relaxed) + 1);
}

Status Strand::reset_as(uint32_t slot, uint64_t generation) {
  std::lock_guard lock(append_mu_);
  return reset_locked(slot, generation);
}

Status Strand::remount(uint32_t slot) {
  std::lock_guard lock(append_mu_);
  slot_.store(slot, std::memory_order_release);
  Status s = write_header_locked();
  if (!s.ok()) return s;
  return region_->flush();
}

}  // namespace flashmap
