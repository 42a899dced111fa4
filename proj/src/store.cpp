// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashmap/store.hpp"

#include <fcntl.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "flashmap/hash.hpp"

namespace flashmap {

namespace {

constexpr std::string_view kManifestFile = "manifest";
constexpr std::string_view kSnapshotFile = "index.snap";

Status write_file_atomic(const std::filesystem::path& dir,
                         std::string_view file, std::string_view contents) {
  const auto tmp = dir / (std::string(file) + ".tmp");
  const auto final_path = dir / file;
  const int fd =
      ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) {
    return Status::make(Code::kSpecUnusable, "cannot write " + tmp.string() +
                                                 ": " + std::strerror(errno));
  }
  const char* p = contents.data();
  size_t n = contents.size();
  while (n > 0) {
    const ssize_t w = ::write(fd, p, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      return Status::make(Code::kIoFailure,
                          std::string("write: ") + std::strerror(errno));
    }
    p += w;
    n -= static_cast<size_t>(w);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    return Status::make(Code::kIoFailure,
                        std::string("fsync: ") + std::strerror(errno));
  }
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp, final_path, ec);
  if (ec) {
    return Status::make(Code::kIoFailure, "rename: " + ec.message());
  }
  // Make the rename itself durable.
  const int dirfd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dirfd >= 0) {
    ::fsync(dirfd);
    ::close(dirfd);
  }
  return Status::OK();
}

bool read_file(const std::filesystem::path& path, std::string* out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  *out = ss.str();
  return true;
}

}  // namespace

// ------------------------------------------------------------- config

Status StoreConfig::validate() const {
  if (n_active < 1) {
    return Status::make(Code::kInvalidArgument, "n_active must be >= 1");
  }
  if (m_spare < 1) {
    return Status::make(Code::kInvalidArgument, "m_spare must be >= 1");
  }
  if (strand_size < kMinRegionCapacity) {
    return Status::make(Code::kInvalidArgument, "strand_size below minimum");
  }
  if (!(gc_trigger_fraction > 0.0 && gc_trigger_fraction < 1.0)) {
    return Status::make(Code::kInvalidArgument,
                        "gc_trigger_fraction must be in (0, 1)");
  }
  return Status::OK();
}

uint64_t StoreConfig::strand_size_for_capacity(uint64_t capacity_bytes,
                                               uint32_t n_active,
                                               uint32_t m_spare) {
  return capacity_bytes / (static_cast<uint64_t>(n_active) + m_spare);
}

// ------------------------------------------------------------ lifecycle

Store::Store(StorageSpec spec, std::string name, StoreConfig cfg)
    : spec_(std::move(spec)), name_(std::move(name)), cfg_(cfg) {}

Store::~Store() {
  if (is_open()) {
    (void)close();
  } else {
    stop_gc_workers();
  }
}

Status Store::open(const StorageSpec& spec, std::string_view name,
                   const StoreConfig& config, std::unique_ptr<Store>& out) {
  Status s = config.validate();
  if (!s.ok()) return s;
  if (name.empty()) {
    return Status::make(Code::kInvalidArgument, "store name must not be empty");
  }
  auto store = std::unique_ptr<Store>(
      new Store(spec, std::string(name), config));
  s = store->open_impl();
  if (!s.ok()) return s;
  out = std::move(store);
  return Status::OK();
}

StrandOptions Store::strand_options() const {
  StrandOptions o;
  o.write_buffer_bytes = cfg_.write_buffer_bytes;
  o.read_cache_bytes = cfg_.read_cache_bytes / cfg_.n_active;
  return o;
}

Status Store::open_impl() {
  Status s;
  if (spec_.is_directory() &&
      std::filesystem::exists(spec_.path / kManifestFile)) {
    s = open_existing_dir();
  } else {
    if (spec_.is_directory() &&
        std::filesystem::exists(spec_.path / region_file_name(0))) {
      return Status::make(Code::kCorruptStore,
                          "strand files present but manifest missing");
    }
    s = create_fresh();
  }
  if (!s.ok()) return s;

  gc_running_.assign(cfg_.n_active, 0);
  gc_queued_.assign(cfg_.n_active, 0);
  open_.store(true, std::memory_order_release);
  if (cfg_.background_gc) {
    for (uint32_t i = 0; i < cfg_.m_spare; ++i) {
      gc_workers_.emplace_back([this] { gc_worker(); });
    }
  }
  return Status::OK();
}

Status Store::create_fresh() {
  if (spec_.is_directory()) {
    std::error_code ec;
    std::filesystem::create_directories(spec_.path, ec);
    if (ec) {
      return Status::make(Code::kSpecUnusable,
                          "cannot create " + spec_.path.string() + ": " +
                              ec.message());
    }
    Status s = write_manifest();
    if (!s.ok()) return s;
  }

  const uint32_t total = cfg_.n_active + cfg_.m_spare;
  slots_.clear();
  for (uint32_t id = 0; id < total; ++id) {
    std::unique_ptr<Region> region;
    Status s = open_region(spec_, id, cfg_.strand_size, region);
    if (!s.ok()) return s;
    const uint32_t slot = id < cfg_.n_active ? id : kSpareSlot;
    std::unique_ptr<Strand> strand;
    s = Strand::create(std::move(region), slot, 0, strand_options(), strand);
    if (!s.ok()) return s;
    if (slot == kSpareSlot) {
      spares_.push_back(std::move(strand));
    } else {
      auto holder = std::make_unique<Slot>();
      holder->strand = std::move(strand);
      slots_.push_back(std::move(holder));
    }
  }
  recovery_mode_ = RecoveryMode::kFresh;
  return Status::OK();
}

Status Store::open_existing_dir() {
  Status s = read_manifest();
  if (!s.ok()) return s;

  const uint32_t total = cfg_.n_active + cfg_.m_spare;

  struct Opened {
    std::unique_ptr<Region> region;
    bool has_header = false;
    StrandHeader header;
  };
  std::vector<Opened> files(total);
  for (uint32_t id = 0; id < total; ++id) {
    s = open_region(spec_, id, cfg_.strand_size, files[id].region);
    if (!s.ok()) {
      if (s.is(Code::kSpecUnusable)) return s;
      return Status::make(Code::kCorruptStore, s.to_string());
    }
    uint8_t raw[kStrandHeaderSize];
    s = files[id].region->read(0, raw);
    if (!s.ok()) return s;
    files[id].has_header =
        decode_strand_header(raw, files[id].header).ok() &&
        files[id].header.capacity == cfg_.strand_size;
  }

  // Resolve which file serves each slot: the claimant with the highest
  // generation wins (an interrupted GC can leave the retired strand still
  // claiming its old slot). Losers are demoted to spares.
  std::vector<int> winner(cfg_.n_active, -1);
  for (uint32_t id = 0; id < total; ++id) {
    if (!files[id].has_header) continue;
    const uint32_t slot = files[id].header.slot;
    if (slot == kSpareSlot) continue;
    if (slot >= cfg_.n_active) {
      return Status::make(Code::kCorruptStore,
                          "strand header claims slot out of range");
    }
    if (winner[slot] < 0 ||
        files[id].header.generation >
            files[winner[slot]].header.generation) {
      winner[slot] = static_cast<int>(id);
    }
  }

  const bool any_claims =
      std::any_of(winner.begin(), winner.end(), [](int w) { return w >= 0; });
  for (uint32_t slot = 0; slot < cfg_.n_active; ++slot) {
    if (winner[slot] < 0 && any_claims) {
      // Tolerable only while the store is still being created; with real
      // claims elsewhere, data for this slot is gone.
      return Status::make(Code::kCorruptStore,
                          "no strand claims slot " + std::to_string(slot));
    }
  }

  // Load the index snapshot first: its validity decides whether we can
  // trust a clean shutdown (which in turn decides tail scrubbing).
  Index snapshot_index;
  std::vector<uint64_t> snapshot_gens;
  bool snapshot_valid = false;
  {
    std::string blob;
    if (read_file(spec_.path / kSnapshotFile, &blob)) {
      snapshot_valid =
          deserialize_index(
              {reinterpret_cast<const uint8_t*>(blob.data()), blob.size()},
              &snapshot_index, &snapshot_gens)
              .ok() &&
          snapshot_gens.size() == cfg_.n_active;
      if (snapshot_valid) {
        for (uint32_t slot = 0; slot < cfg_.n_active; ++slot) {
          snapshot_valid = snapshot_valid && winner[slot] >= 0 &&
                           files[winner[slot]].header.generation ==
                               snapshot_gens[slot];
        }
      }
      // The snapshot describes this exact shutdown only. Whatever happens
      // next session, a stale copy must never be trusted again, so remove
      // it now; close() writes a fresh one.
      std::error_code ec;
      std::filesystem::remove(spec_.path / kSnapshotFile, ec);
    }
  }

  // Mount winners, recovering each tail by scan. Without a valid snapshot
  // the previous run may have died mid-write: scrub residue past the tail
  // so stale bytes can never masquerade as future records.
  slots_.clear();
  slots_.resize(cfg_.n_active);
  for (uint32_t slot = 0; slot < cfg_.n_active; ++slot) {
    auto holder = std::make_unique<Slot>();
    if (winner[slot] >= 0) {
      std::unique_ptr<Strand> strand;
      s = Strand::open_existing(std::move(files[winner[slot]].region),
                                strand_options(), strand);
      if (!s.ok()) return s;
      s = strand->recover(/*scrub_garbage=*/!snapshot_valid);
      if (!s.ok()) return s;
      holder->strand = std::move(strand);
    }
    slots_[slot] = std::move(holder);
  }
  // Remaining files (spare claims, demoted claimants, unreadable headers)
  // become the spare pool.
  spares_.clear();
  for (uint32_t id = 0; id < total; ++id) {
    if (!files[id].region) continue;
    std::unique_ptr<Strand> strand;
    if (files[id].has_header && files[id].header.slot == kSpareSlot) {
      s = Strand::open_existing(std::move(files[id].region),
                                strand_options(), strand);
      if (!s.ok()) return s;
      s = strand->recover(/*scrub_garbage=*/false);
      if (!s.ok()) return s;
    } else {
      // Demoted or half-initialized: wipe before reuse.
      const uint64_t gen =
          files[id].has_header ? files[id].header.generation + 1 : 0;
      std::unique_ptr<Region> region = std::move(files[id].region);
      s = region->trim(0, region->capacity());
      if (!s.ok()) return s;
      s = Strand::create(std::move(region), kSpareSlot, gen,
                         strand_options(), strand);
      if (!s.ok()) return s;
    }
    spares_.push_back(std::move(strand));
  }
  // Fill any slot that never got a strand (creation crashed before the
  // file existed). any_claims==false here, so the store is empty.
  for (uint32_t slot = 0; slot < cfg_.n_active; ++slot) {
    if (slots_[slot]->strand != nullptr) continue;
    if (spares_.empty()) {
      return Status::make(Code::kCorruptStore, "missing strand files");
    }
    std::shared_ptr<Strand> strand = std::move(spares_.back());
    spares_.pop_back();
    s = strand->reset_as(slot, 0);
    if (!s.ok()) return s;
    slots_[slot]->strand = std::move(strand);
  }
  if (spares_.size() != cfg_.m_spare) {
    return Status::make(Code::kCorruptStore, "spare strand count mismatch");
  }

  if (snapshot_valid) {
    index_ = std::move(snapshot_index);
    recovery_mode_ = RecoveryMode::kSnapshot;
    return Status::OK();
  }

  // Rebuild by replaying each strand in append order: updates overwrite,
  // tombstones remove. A key's versions all live in one strand (routing is
  // deterministic), so per-strand order is per-key order.
  index_.clear();
  for (uint32_t slot = 0; slot < cfg_.n_active; ++slot) {
    s = slots_[slot]->strand->scan([&](uint64_t off, const Record& rec) {
      if (rec.tombstone) {
        index_.remove(rec.key);
      } else {
        index_.update(rec.key, Address{slot, off});
      }
      return true;
    });
    if (!s.ok()) return s;
  }
  recovery_mode_ = RecoveryMode::kScan;
  return Status::OK();
}

Status Store::read_manifest() {
  std::string blob;
  if (!read_file(spec_.path / kManifestFile, &blob)) {
    return Status::make(Code::kCorruptStore, "manifest unreadable");
  }
  const auto j = nlohmann::json::parse(blob, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    return Status::make(Code::kCorruptStore, "manifest is not valid JSON");
  }
  if (j.value("format_version", 0) != 1) {
    return Status::make(Code::kCorruptStore, "unsupported manifest version");
  }
  if (j.value("hash", "") != kHashId) {
    return Status::make(Code::kCorruptStore, "unknown hash function id");
  }
  if (!j.contains("name") || !j["name"].is_string()) {
    return Status::make(Code::kCorruptStore, "manifest missing name");
  }
  if (j["name"].get<std::string>() != name_) {
    return Status::make(Code::kNameMismatch,
                        "store is named '" + j["name"].get<std::string>() +
                            "', not '" + name_ + "'");
  }
  // Structural parameters always come from the manifest; the caller's
  // config keeps only runtime knobs (buffers, cache, GC tuning).
  if (!j.contains("n_active") || !j.contains("m_spare") ||
      !j.contains("strand_size") || !j.contains("hash_seed")) {
    return Status::make(Code::kCorruptStore, "manifest missing fields");
  }
  cfg_.n_active = j["n_active"].get<uint32_t>();
  cfg_.m_spare = j["m_spare"].get<uint32_t>();
  cfg_.strand_size = j["strand_size"].get<uint64_t>();
  cfg_.hash_seed = j["hash_seed"].get<uint64_t>();
  return cfg_.validate();
}

Status Store::write_manifest() {
  nlohmann::json j;
  j["format_version"] = 1;
  j["name"] = name_;
  j["n_active"] = cfg_.n_active;
  j["m_spare"] = cfg_.m_spare;
  j["strand_size"] = cfg_.strand_size;
  j["hash"] = kHashId;
  j["hash_seed"] = cfg_.hash_seed;
  return write_file_atomic(spec_.path, kManifestFile, j.dump(2) + "\n");
}

Status Store::write_snapshot() {
  std::vector<uint64_t> gens;
  gens.reserve(cfg_.n_active);
  for (const auto& slot : slots_) gens.push_back(slot->strand->generation());
  std::string blob;
  {
    std::shared_lock ix(index_mu_);
    blob = serialize_index(index_, gens);
  }
  return write_file_atomic(spec_.path, kSnapshotFile, blob);
}

Status Store::close() {
  if (!open_.exchange(false, std::memory_order_acq_rel)) {
    return Status::make(Code::kInvalidHandle, "store already closed");
  }
  stop_gc_workers();
  {
    // Wait out any foreground collection still in flight.
    std::unique_lock l(gc_mu_);
    gc_cv_.wait(l, [&] {
      return std::all_of(gc_running_.begin(), gc_running_.end(),
                         [](uint8_t r) { return r == 0; });
    });
  }
  spare_cv_.notify_all();
  std::unique_lock gate(txn_gate_);

  Status result;
  for (auto& slot : slots_) {
    std::shared_lock op(slot->op_mu);
    Status s = slot->strand->flush();
    if (!s.ok() && result.ok()) result = s;
  }
  if (spec_.is_directory() && result.ok()) {
    Status s = write_snapshot();
    if (!s.ok()) result = s;
  }
  return result;
}

Status Store::flush() {
  Status s = check_open();
  if (!s.ok()) return s;
  for (auto& slot : slots_) {
    std::shared_lock op(slot->op_mu);
    Status fs = slot->strand->flush();
    if (!fs.ok()) return fs;
  }
  return Status::OK();
}

void Store::testing_abandon() {
  open_.store(false, std::memory_order_release);
  stop_gc_workers();
  spare_cv_.notify_all();
}

void Store::testing_set_gc_pause(std::function<void()> hook) {
  gc_pause_hook_ = std::move(hook);
}

void Store::testing_set_commit_pause(std::function<void()> hook) {
  commit_pause_hook_ = std::move(hook);
}

Status Store::check_open() const {
  if (!is_open()) {
    return Status::make(Code::kInvalidHandle, "store is not open");
  }
  return Status::OK();
}

// --------------------------------------------------------- point ops

uint32_t Store::route(std::string_view key) const {
  return static_cast<uint32_t>(xxh64(key, cfg_.hash_seed) % cfg_.n_active);
}

Status Store::insert(std::string_view key, std::string_view value) {
  return mutate(key, value, MutationKind::kInsert);
}

Status Store::update(std::string_view key, std::string_view value) {
  return mutate(key, value, MutationKind::kUpdate);
}

Status Store::replace(std::string_view key, std::string_view value) {
  return mutate(key, value, MutationKind::kReplace);
}

Status Store::erase(std::string_view key) {
  return mutate(key, {}, MutationKind::kErase);
}

Status Store::mutate(std::string_view key, std::string_view value,
                     MutationKind kind) {
  Status s = check_open();
  if (!s.ok()) return s;
  std::shared_lock gate(txn_gate_);
  return mutate_ungated(key, value, kind);
}

Status Store::mutate_ungated(std::string_view key, std::string_view value,
                             MutationKind kind) {
  if (key.empty()) {
    return Status::make(Code::kInvalidArgument, "key must not be empty");
  }
  const uint32_t slot = route(key);
  for (int attempt = 0; attempt < 3; ++attempt) {
    Status s = mutate_once(key, value, kind);
    if (!s.is(Code::kStrandFull)) {
      if (s.ok()) maybe_trigger_gc(slot);
      return s;
    }
    // The strand is out of room; collect it synchronously and retry.
    s = force_gc(slot);
    if (!s.ok()) return s;
  }
  return Status::make(Code::kStrandFull,
                      "live data exceeds strand capacity for slot " +
                          std::to_string(slot));
}

Status Store::mutate_once(std::string_view key, std::string_view value,
                          MutationKind kind) {
  const uint32_t slot = route(key);
  auto& sl = *slots_[slot];
  std::shared_lock op(sl.op_mu);
  std::lock_guard write(sl.write_mu);

  Address prior;
  bool exists = false;
  if (kind != MutationKind::kInsert) {
    std::shared_lock ix(index_mu_);
    exists = index_.lookup(key, &prior).ok();
  }
  if (kind == MutationKind::kReplace && !exists) {
    return Status::make(Code::kReplaceMissing, "replace of absent key");
  }
  if (kind == MutationKind::kErase && !exists) {
    return Status::make(Code::kDeleteMissing, "delete of absent key");
  }

  Record rec;
  rec.key.assign(key);
  rec.link = exists ? prior.offset : kNilLink;
  if (kind == MutationKind::kErase) {
    rec.tombstone = true;
  } else {
    rec.value.assign(value);
  }

  uint64_t offset = 0;
  Status s = sl.strand->append(rec, &offset);
  if (!s.ok()) return s;

  std::unique_lock ix(index_mu_);
  if (kind == MutationKind::kErase) {
    index_.remove(key);
  } else {
    index_.update(key, Address{slot, offset});
  }
  return Status::OK();
}

Status Store::read_value_at(const Address& addr, std::string_view expect_key,
                            std::string* value) const {
  // Caller holds slots_[addr.slot]->op_mu (shared), which pins the mounted
  // strand against GC swaps.
  Record rec;
  Status s = slots_[addr.slot]->strand->read(addr.offset, &rec);
  if (!s.ok()) return s;
  if (rec.key != expect_key || rec.tombstone) {
    return Status::make(Code::kCorruptStore,
                        "index points at record of a different key");
  }
  *value = std::move(rec.value);
  return Status::OK();
}

Status Store::lookup(std::string_view key, std::string* value) const {
  Status s = check_open();
  if (!s.ok()) return s;
  if (key.empty()) {
    return Status::make(Code::kInvalidArgument, "key must not be empty");
  }
  auto& sl = *slots_[route(key)];
  std::shared_lock op(sl.op_mu);
  Address addr;
  {
    std::shared_lock ix(index_mu_);
    if (!index_.lookup(key, &addr).ok()) {
      return Status::make(Code::kKeyNotFound);
    }
  }
  return read_value_at(addr, key, value);
}

Status Store::neighbor(bool forward, std::optional<std::string_view> key,
                       std::string* out_key, std::string* out_value) const {
  Status s = check_open();
  if (!s.ok()) return s;
  for (;;) {
    std::string k;
    Address addr;
    {
      std::shared_lock ix(index_mu_);
      s = forward ? index_.next(key, &k, &addr)
                  : index_.prev(key, &k, &addr);
      if (!s.ok()) return s;  // Exhausted
    }
    if (addr.slot >= slots_.size()) {
      return Status::make(Code::kCorruptStore, "address slot out of range");
    }
    auto& sl = *slots_[addr.slot];
    std::shared_lock op(sl.op_mu);
    {
      // The entry may have moved (concurrent mutation or GC relocation)
      // between the index step and pinning the slot; recheck and retry
      // from the original key if so.
      std::shared_lock ix(index_mu_);
      Address cur;
      if (!index_.lookup(k, &cur).ok() || !(cur == addr)) continue;
    }
    s = read_value_at(addr, k, out_value);
    if (!s.ok()) return s;
    *out_key = std::move(k);
    return Status::OK();
  }
}

Status Store::next(std::optional<std::string_view> key, std::string* out_key,
                   std::string* out_value) const {
  return neighbor(/*forward=*/true, key, out_key, out_value);
}

Status Store::prev(std::optional<std::string_view> key, std::string* out_key,
                   std::string* out_value) const {
  return neighbor(/*forward=*/false, key, out_key, out_value);
}

// ------------------------------------------------------ introspection

size_t Store::key_count() const {
  std::shared_lock ix(index_mu_);
  return index_.count();
}

Status Store::index_memory_per_key(double* out) const {
  std::shared_lock ix(index_mu_);
  return index_.memory_per_key(out);
}

uint64_t Store::cache_hits() const {
  uint64_t total = 0;
  for (const auto& slot : slots_) {
    std::shared_lock op(slot->op_mu);
    total += slot->strand->cache_hits();
  }
  return total;
}

uint64_t Store::cache_misses() const {
  uint64_t total = 0;
  for (const auto& slot : slots_) {
    std::shared_lock op(slot->op_mu);
    total += slot->strand->cache_misses();
  }
  return total;
}

Status Store::slot_stats(uint32_t slot, SlotStats* out) const {
  Status s = check_open();
  if (!s.ok()) return s;
  if (slot >= slots_.size()) {
    return Status::make(Code::kInvalidArgument, "slot out of range");
  }
  auto& sl = *slots_[slot];
  std::shared_lock op(sl.op_mu);
  out->tail = sl.strand->tail();
  out->capacity = sl.strand->capacity();
  out->generation = sl.strand->generation();
  out->records = 0;
  out->live_records = 0;
  out->live_bytes = 0;
  return sl.strand->scan([&](uint64_t off, const Record& rec) {
    ++out->records;
    Address cur;
    std::shared_lock ix(index_mu_);
    if (index_.lookup(rec.key, &cur).ok() && cur.slot == slot &&
        cur.offset == off) {
      ++out->live_records;
      out->live_bytes += encoded_record_size(rec);
    }
    return true;
  });
}

Status Store::inspect(std::string_view key, Address* addr,
                      Record* rec) const {
  Status s = check_open();
  if (!s.ok()) return s;
  auto& sl = *slots_[route(key)];
  std::shared_lock op(sl.op_mu);
  {
    std::shared_lock ix(index_mu_);
    s = index_.lookup(key, addr);
    if (!s.ok()) return s;
  }
  return sl.strand->read(addr->offset, rec);
}

// -------------------------------------------------------------- GC

bool Store::maybe_trigger_gc(uint32_t slot) {
  if (!is_open() || slot >= cfg_.n_active) return false;
  {
    std::shared_lock op(slots_[slot]->op_mu);
    if (slots_[slot]->strand->utilization() < cfg_.gc_trigger_fraction) {
      return false;
    }
  }
  if (!cfg_.background_gc) return false;
  {
    std::lock_guard sp(spares_mu_);
    if (spares_.empty()) return false;
  }
  {
    std::lock_guard l(gc_mu_);
    if (gc_shutdown_ || gc_running_[slot] || gc_queued_[slot]) return false;
    gc_queued_[slot] = 1;
    gc_queue_.push_back(slot);
  }
  gc_cv_.notify_all();
  return true;
}

Status Store::gc(uint32_t slot) {
  Status s = check_open();
  if (!s.ok()) return s;
  if (slot >= cfg_.n_active) {
    return Status::make(Code::kInvalidArgument, "slot out of range");
  }
  {
    std::lock_guard l(gc_mu_);
    if (gc_running_[slot]) {
      return Status::make(Code::kSpareBusy, "slot is already collecting");
    }
    gc_running_[slot] = 1;
  }
  std::shared_ptr<Strand> spare;
  {
    std::lock_guard sp(spares_mu_);
    if (!spares_.empty()) {
      spare = std::move(spares_.back());
      spares_.pop_back();
    }
  }
  if (!spare) {
    {
      std::lock_guard l(gc_mu_);
      gc_running_[slot] = 0;
    }
    gc_cv_.notify_all();
    return Status::make(Code::kSpareBusy, "no spare strand available");
  }
  return run_gc(slot, std::move(spare));
}

Status Store::force_gc(uint32_t slot) {
  {
    std::unique_lock l(gc_mu_);
    if (gc_running_[slot]) {
      // A collection is already reclaiming this slot; ride on it.
      gc_cv_.wait(l, [&] { return !gc_running_[slot]; });
      return Status::OK();
    }
    gc_running_[slot] = 1;
  }
  std::shared_ptr<Strand> spare;
  {
    std::unique_lock sp(spares_mu_);
    spare_cv_.wait(sp, [&] { return !spares_.empty() || !is_open(); });
    if (spares_.empty()) {
      {
        std::lock_guard l(gc_mu_);
        gc_running_[slot] = 0;
      }
      gc_cv_.notify_all();
      return Status::make(Code::kInvalidHandle, "store closing");
    }
    spare = std::move(spares_.back());
    spares_.pop_back();
  }
  return run_gc(slot, std::move(spare));
}

void Store::finish_gc(uint32_t slot, std::shared_ptr<Strand> to_pool) {
  {
    std::lock_guard sp(spares_mu_);
    spares_.push_back(std::move(to_pool));
  }
  spare_cv_.notify_all();
  {
    std::lock_guard l(gc_mu_);
    gc_running_[slot] = 0;
  }
  gc_cv_.notify_all();
}

Status Store::run_gc(uint32_t slot_id, std::shared_ptr<Strand> spare) {
  auto& sl = *slots_[slot_id];
  std::shared_ptr<Strand> src;
  {
    std::shared_lock op(sl.op_mu);
    src = sl.strand;
  }

  struct Reloc {
    std::string key;
    uint64_t old_off;
    uint64_t new_off;
  };
  std::vector<Reloc> relocs;
  Status inner;

  // Copies the record when it is live, i.e. the index still points at the
  // exact address being scanned. Superseded versions and tombstoned keys
  // are dropped; copies start fresh version chains.
  auto copy_live = [&](uint64_t off, const Record& rec) -> bool {
    if (rec.tombstone) return true;
    {
      Address cur;
      std::shared_lock ix(index_mu_);
      if (!index_.lookup(rec.key, &cur).ok() || cur.slot != slot_id ||
          cur.offset != off) {
        return true;
      }
    }
    uint64_t new_off = 0;
    Status s = spare->append(Record::put(rec.key, rec.value), &new_off);
    if (!s.ok()) {
      inner = s;
      return false;
    }
    relocs.push_back(Reloc{rec.key, off, new_off});
    return true;
  };

  auto abort_gc = [&](Status why) {
    (void)spare->reset_as(kSpareSlot, spare->generation() + 1);
    finish_gc(slot_id, std::move(spare));
    return why;
  };

  Status s = spare->reset_as(kSpareSlot, src->generation() + 1);
  if (!s.ok()) return abort_gc(s);

  // Phase 1: concurrent copy of everything appended so far. Appends keep
  // landing in the source strand meanwhile.
  const uint64_t phase1_end = src->tail();
  s = src->for_each(kStrandHeaderSize, phase1_end, copy_live);
  if (!s.ok()) return abort_gc(s);
  if (!inner.ok()) return abort_gc(inner);

  if (gc_pause_hook_) gc_pause_hook_();

  // Phase 2: block operations on this slot, catch up with the records
  // appended during phase 1, repoint the index, and swap.
  std::unique_lock op(sl.op_mu);
  const uint64_t phase2_end = src->tail();
  s = src->for_each(phase1_end, phase2_end, copy_live);
  if (!s.ok() || !inner.ok()) {
    op.unlock();
    return abort_gc(s.ok() ? inner : s);
  }
  s = spare->flush();
  if (!s.ok()) {
    op.unlock();
    return abort_gc(s);
  }
  {
    std::unique_lock ix(index_mu_);
    for (const auto& r : relocs) {
      Address cur;
      if (index_.lookup(r.key, &cur).ok() && cur.slot == slot_id &&
          cur.offset == r.old_off) {
        index_.update(r.key, Address{slot_id, r.new_off});
      }
      // Otherwise the key was updated or deleted after the copy; the
      // catch-up pass handled its latest version.
    }
  }
  // Commit point: the spare claims the slot with a higher generation.
  s = spare->remount(slot_id);
  if (!s.ok()) {
    // The index already points into the spare; without the remount the
    // store state on disk is still consistent (old strand wins recovery),
    // but this process can no longer serve reads safely.
    op.unlock();
    return abort_gc(s);
  }
  std::shared_ptr<Strand> retired = sl.strand;
  sl.strand = std::move(spare);
  op.unlock();

  (void)retired->reset_as(kSpareSlot, retired->generation() + 1);
  finish_gc(slot_id, std::move(retired));
  return Status::OK();
}

void Store::gc_worker() {
  // Collection competes with foreground traffic only for spare I/O; keep
  // it off the critical path.
#ifdef __linux__
  errno = 0;
  ::setpriority(PRIO_PROCESS, 0, 10);
#endif
  for (;;) {
    uint32_t slot = 0;
    {
      std::unique_lock l(gc_mu_);
      gc_cv_.wait(l, [&] { return gc_shutdown_ || !gc_queue_.empty(); });
      if (gc_shutdown_) return;
      slot = gc_queue_.front();
      gc_queue_.pop_front();
      gc_queued_[slot] = 0;
      if (gc_running_[slot]) continue;
      gc_running_[slot] = 1;
    }
    std::shared_ptr<Strand> spare;
    {
      std::lock_guard sp(spares_mu_);
      if (!spares_.empty()) {
        spare = std::move(spares_.back());
        spares_.pop_back();
      }
    }
    if (!spare) {
      // All spares busy; drop the request. Utilization stays high, so the
      // next mutation re-triggers.
      std::lock_guard l(gc_mu_);
      gc_running_[slot] = 0;
      gc_cv_.notify_all();
      continue;
    }
    (void)run_gc(slot, std::move(spare));
  }
}

void Store::stop_gc_workers() {
  {
    std::lock_guard l(gc_mu_);
    gc_shutdown_ = true;
    gc_queue_.clear();
  }
  gc_cv_.notify_all();
  for (auto& t : gc_workers_) {
    if (t.joinable()) t.join();
  }
  gc_workers_.clear();
  {
    std::lock_guard l(gc_mu_);
    gc_shutdown_ = false;
  }
}

}  // namespace flashmap
