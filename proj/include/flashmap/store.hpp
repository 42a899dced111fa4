// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "flashmap/index.hpp"
#include "flashmap/status.hpp"
#include "flashmap/storage.hpp"
#include "flashmap/strand.hpp"

namespace flashmap {

class Txn;

struct StoreConfig {
  uint32_t n_active = 8;   // strands serving hash-routed traffic
  uint32_t m_spare = 1;    // strands reserved for garbage collection
  uint64_t strand_size = 64ull << 20;
  uint64_t hash_seed = 0x464D5331;
  uint64_t write_buffer_bytes = 32ull << 20;  // per strand
  uint64_t read_cache_bytes = 1ull << 30;     // total, split across slots
  double gc_trigger_fraction = 0.75;
  // Run garbage collection on background workers when a slot crosses the
  // trigger. Off, GC still runs synchronously when a strand fills up.
  bool background_gc = true;

  Status validate() const;
  // S from a total device capacity: capacity / (N + M).
  static uint64_t strand_size_for_capacity(uint64_t capacity_bytes,
                                           uint32_t n_active,
                                           uint32_t m_spare);
};

// How open() arrived at the store's contents.
enum class RecoveryMode {
  kFresh,     // newly created
  kSnapshot,  // index.snap matched all strand generations
  kScan,      // index rebuilt by scanning every strand
};

// The key-value store: N active strands plus M spares, an in-memory
// ordered index, hash routing of keys to slots, copy-forward garbage
// collection, and snapshot-fork transactions (see txn.hpp).
//
// Point operations are safe from many threads. close() (or destruction)
// waits for in-flight GC and flushes everything.
class Store {
 public:
  static Status open(const StorageSpec& spec, std::string_view name,
                     const StoreConfig& config, std::unique_ptr<Store>& out);
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  Status close();

  // Unconditionally stores the pair, replacing any existing one.
  Status insert(std::string_view key, std::string_view value);
  // Like insert, but chains the new record to the key's previous version.
  Status update(std::string_view key, std::string_view value);
  // Stores the pair only if the key already exists (ReplaceMissing
  // otherwise; nothing is appended on failure).
  Status replace(std::string_view key, std::string_view value);
  // Appends a tombstone for an existing key (DeleteMissing otherwise).
  Status erase(std::string_view key);

  Status lookup(std::string_view key, std::string* value) const;

  // Neighborhood search: strict lexicographic successor/predecessor; the
  // search key need not exist. next() without a key returns the largest
  // pair, prev() without a key the smallest. Exhausted when past the end.
  Status next(std::optional<std::string_view> key, std::string* out_key,
              std::string* out_value) const;
  Status prev(std::optional<std::string_view> key, std::string* out_key,
              std::string* out_value) const;

  // Forks a child store holding a snapshot of the current contents.
  Status transact(std::unique_ptr<Txn>& out);

  // Deterministic slot for a key; stable across restarts.
  uint32_t route(std::string_view key) const;

  // Copy-forward collection of one slot into a spare strand. Runs
  // concurrently with normal operations except for a brief swap lock.
  // SpareBusy when no spare is free or the slot is already collecting.
  Status gc(uint32_t slot);

  // Schedules background GC when the slot crossed gc_trigger_fraction and
  // a spare is free. Returns whether a run was scheduled.
  bool maybe_trigger_gc(uint32_t slot);

  // Drains write buffers and fsyncs all strands without writing an index
  // snapshot (so a subsequent open exercises scan recovery).
  Status flush();

  bool is_open() const { return open_.load(std::memory_order_acquire); }
  size_t key_count() const;
  RecoveryMode recovery_mode() const { return recovery_mode_; }
  const StoreConfig& config() const { return cfg_; }
  const std::string& name() const { return name_; }

  struct SlotStats {
    uint64_t tail = 0;
    uint64_t capacity = 0;
    uint64_t generation = 0;
    uint64_t records = 0;       // records physically present in the strand
    uint64_t live_records = 0;  // records the index currently points at
    uint64_t live_bytes = 0;    // encoded size of live records
  };
  Status slot_stats(uint32_t slot, SlotStats* out) const;
  Status index_memory_per_key(double* out) const;
  uint64_t cache_hits() const;
  uint64_t cache_misses() const;

  // Record-level view of a key (address, link chain entry). Debugging aid.
  Status inspect(std::string_view key, Address* addr, Record* rec) const;

  // --- test instrumentation -------------------------------------------
  // Drops the handle as a simulated crash: nothing is flushed, no
  // snapshot is written, background workers stop without finishing.
  void testing_abandon();
  // Invoked between GC phase 1 (concurrent copy) and phase 2 (locked
  // catch-up), so tests can interleave updates.
  void testing_set_gc_pause(std::function<void()> hook);
  // Invoked by Txn::commit() after each applied mutation.
  void testing_set_commit_pause(std::function<void()> hook);

 private:
  friend class Txn;

  struct Slot {
    std::shared_ptr<Strand> strand;
    // Held shared by point operations touching this slot, exclusively by
    // the GC swap. Blocks only operations routed here, only briefly.
    mutable std::shared_mutex op_mu;
    // Serializes read-modify-write mutations within the slot.
    std::mutex write_mu;
  };

  Store(StorageSpec spec, std::string name, StoreConfig cfg);

  Status open_impl();
  Status create_fresh();
  Status open_existing_dir();
  Status read_manifest();
  Status write_manifest();
  Status write_snapshot();
  StrandOptions strand_options() const;

  enum class MutationKind { kInsert, kUpdate, kReplace, kErase };
  Status mutate(std::string_view key, std::string_view value,
                MutationKind kind);
  // Same, without taking txn_gate_ (Txn::commit already holds it).
  Status mutate_ungated(std::string_view key, std::string_view value,
                        MutationKind kind);
  Status mutate_once(std::string_view key, std::string_view value,
                     MutationKind kind);
  Status read_value_at(const Address& addr, std::string_view expect_key,
                       std::string* value) const;
  Status neighbor(bool forward, std::optional<std::string_view> key,
                  std::string* out_key, std::string* out_value) const;

  Status run_gc(uint32_t slot_id, std::shared_ptr<Strand> spare);
  void finish_gc(uint32_t slot_id, std::shared_ptr<Strand> retired);
  // Foreground backstop: a full strand blocks the mutation until the slot
  // has been collected (waiting out a concurrent run if there is one).
  Status force_gc(uint32_t slot_id);
  void gc_worker();
  void stop_gc_workers();
  Status check_open() const;

  const StorageSpec spec_;
  const std::string name_;
  StoreConfig cfg_;
  RecoveryMode recovery_mode_ = RecoveryMode::kFresh;

  std::vector<std::unique_ptr<Slot>> slots_;

  mutable std::shared_mutex index_mu_;
  Index index_;

  // Taken shared by every mutation, exclusively by transact() and
  // Txn::commit() so forks and merges see a mutation-stable parent.
  std::shared_mutex txn_gate_;

  std::mutex spares_mu_;
  std::condition_variable spare_cv_;
  std::vector<std::shared_ptr<Strand>> spares_;

  std::mutex gc_mu_;
  std::condition_variable gc_cv_;
  std::vector<uint8_t> gc_running_;  // per slot
  std::vector<uint8_t> gc_queued_;   // per slot
  std::deque<uint32_t> gc_queue_;
  std::vector<std::thread> gc_workers_;
  bool gc_shutdown_ = false;

  std::atomic<bool> open_{false};
  std::function<void()> gc_pause_hook_;
  std::function<void()> commit_pause_hook_;
};

}  // namespace flashmap
