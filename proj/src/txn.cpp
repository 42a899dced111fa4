// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashmap/txn.hpp"

#include <mutex>
#include <shared_mutex>
#include <vector>

namespace flashmap {

namespace {

StoreConfig child_config(const StoreConfig& parent) {
  StoreConfig cfg = parent;
  // Same routing (strand count and seed) so live data per slot fits the
  // same strand size. Memory-to-memory appends gain nothing from staging
  // or caching, and the child never runs background workers.
  cfg.write_buffer_bytes = 0;
  cfg.read_cache_bytes = 0;
  cfg.background_gc = false;
  return cfg;
}

}  // namespace

Status Store::transact(std::unique_ptr<Txn>& out) {
  Status s = check_open();
  if (!s.ok()) return s;

  std::unique_ptr<Store> child;
  s = Store::open(StorageSpec::in_memory(), name_, child_config(cfg_), child);
  if (!s.ok()) return s;

  // Mutation-stable point: mutations wait while the snapshot is copied;
  // readers continue unhindered.
  std::unique_lock gate(txn_gate_);
  for (uint32_t slot = 0; slot < cfg_.n_active; ++slot) {
    auto& sl = *slots_[slot];
    std::shared_lock op(sl.op_mu);
    Status inner;
    s = sl.strand->scan([&](uint64_t off, const Record& rec) {
      if (rec.tombstone) return true;
      {
        Address cur;
        std::shared_lock ix(index_mu_);
        if (!index_.lookup(rec.key, &cur).ok() || cur.slot != slot ||
            cur.offset != off) {
          return true;  // superseded or deleted
        }
      }
      inner = child->insert(rec.key, rec.value);
      return inner.ok();
    });
    if (s.ok()) s = inner;
    if (!s.ok()) return s;
  }

  out = std::unique_ptr<Txn>(new Txn(this, std::move(child)));
  return Status::OK();
}

Txn::Txn(Store* parent, std::unique_ptr<Store> child)
    : parent_(parent), child_(std::move(child)) {}

Txn::~Txn() {
  if (state_ == State::kActive) {
    (void)discard();
  }
}

Status Txn::check_active() const {
  if (state_ != State::kActive) {
    return Status::make(Code::kInvalidHandle,
                        state_ == State::kCommitted
                            ? "transaction already committed"
                            : "transaction already discarded");
  }
  return Status::OK();
}

Status Txn::insert(std::string_view key, std::string_view value) {
  Status s = check_active();
  return s.ok() ? child_->insert(key, value) : s;
}

Status Txn::update(std::string_view key, std::string_view value) {
  Status s = check_active();
  return s.ok() ? child_->update(key, value) : s;
}

Status Txn::replace(std::string_view key, std::string_view value) {
  Status s = check_active();
  return s.ok() ? child_->replace(key, value) : s;
}

Status Txn::erase(std::string_view key) {
  Status s = check_active();
  return s.ok() ? child_->erase(key) : s;
}

Status Txn::lookup(std::string_view key, std::string* value) const {
  Status s = check_active();
  return s.ok() ? child_->lookup(key, value) : s;
}

Status Txn::next(std::optional<std::string_view> key, std::string* out_key,
                 std::string* out_value) const {
  Status s = check_active();
  return s.ok() ? child_->next(key, out_key, out_value) : s;
}

Status Txn::prev(std::optional<std::string_view> key, std::string* out_key,
                 std::string* out_value) const {
  Status s = check_active();
  return s.ok() ? child_->prev(key, out_key, out_value) : s;
}

size_t Txn::key_count() const {
  return state_ == State::kActive ? child_->key_count() : 0;
}

Status Txn::discard() {
  Status s = check_active();
  if (!s.ok()) return s;
  (void)child_->close();
  child_.reset();
  state_ = State::kDiscarded;
  return Status::OK();
}

Status Txn::commit() {
  Status s = check_active();
  if (!s.ok()) return s;
  s = parent_->check_open();
  if (!s.ok()) return s;

  // Merge plan: one sorted walk over both key sets. Identical pairs are
  // left untouched so an identity merge appends nothing.
  struct Op {
    bool is_erase;
    std::string key;
    std::string value;
  };
  std::vector<Op> ops;

  std::unique_lock gate(parent_->txn_gate_);

  // Parent keys, snapshotted up front: the walk below mutates nothing, but
  // collecting first keeps index iteration free of lock-order knots.
  std::vector<std::string> parent_keys;
  {
    std::shared_lock ix(parent_->index_mu_);
    parent_keys.reserve(parent_->index_.count());
    parent_->index_.for_each([&](std::string_view key, Address) {
      parent_keys.emplace_back(key);
      return true;
    });
  }

  std::vector<std::pair<std::string, std::string>> child_pairs;
  child_pairs.reserve(child_->key_count());
  {
    std::string k, v, cursor;
    bool walking = false;
    for (;;) {
      Status n = walking ? child_->next(cursor, &k, &v)
                         : child_->prev(std::nullopt, &k, &v);
      if (n.is(Code::kExhausted)) break;
      if (!n.ok()) return n;
      cursor = k;
      walking = true;
      child_pairs.emplace_back(std::move(k), std::move(v));
    }
  }

  size_t pi = 0, ci = 0;
  std::string parent_value;
  while (pi < parent_keys.size() || ci < child_pairs.size()) {
    int cmp;
    if (pi == parent_keys.size()) {
      cmp = 1;
    } else if (ci == child_pairs.size()) {
      cmp = -1;
    } else {
      cmp = parent_keys[pi].compare(child_pairs[ci].first);
      cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
    }
    if (cmp < 0) {
      // Exists only in the parent: removed by the merge.
      ops.push_back(Op{true, parent_keys[pi], {}});
      ++pi;
    } else if (cmp > 0) {
      // Exists only in the child: added.
      ops.push_back(Op{false, child_pairs[ci].first,
                       std::move(child_pairs[ci].second)});
      ++ci;
    } else {
      s = parent_->lookup(parent_keys[pi], &parent_value);
      if (!s.ok()) return s;
      if (parent_value != child_pairs[ci].second) {
        // Same key, different values: the child's wins.
        ops.push_back(Op{false, child_pairs[ci].first,
                         std::move(child_pairs[ci].second)});
      }
      ++pi;
      ++ci;
    }
  }

  for (const Op& op : ops) {
    s = op.is_erase
            ? parent_->mutate_ungated(op.key, {}, Store::MutationKind::kErase)
            : parent_->mutate_ungated(op.key, op.value,
                                      Store::MutationKind::kInsert);
    if (!s.ok()) return s;
    if (parent_->commit_pause_hook_) parent_->commit_pause_hook_();
  }

  gate.unlock();
  (void)child_->close();
  child_.reset();
  state_ = State::kCommitted;
  return Status::OK();
}

}  // namespace flashmap
