// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "flashmap/status.hpp"
#include "flashmap/store.hpp"

namespace flashmap {

// A fork of a store: a child store over in-memory storage seeded with a
// snapshot of the parent's contents at transact() time. Parent and child
// evolve separately until commit() or discard().
//
// commit() merges the child back: identical pairs stay, conflicting keys
// take the child's value, child-only pairs are inserted, parent-only pairs
// are deleted. Net effect: the parent's visible contents become exactly
// the child's. The merge excludes parent mutations; a concurrent reader
// sees the old or new value of any single key, never a torn one.
//
// A handle is single-owner and becomes unusable after commit or discard.
class Txn {
 public:
  ~Txn();

  Txn(const Txn&) = delete;
  Txn& operator=(const Txn&) = delete;

  Status insert(std::string_view key, std::string_view value);
  Status update(std::string_view key, std::string_view value);
  Status replace(std::string_view key, std::string_view value);
  Status erase(std::string_view key);
  Status lookup(std::string_view key, std::string* value) const;
  Status next(std::optional<std::string_view> key, std::string* out_key,
              std::string* out_value) const;
  Status prev(std::optional<std::string_view> key, std::string* out_key,
              std::string* out_value) const;

  Status commit();
  Status discard();

  bool active() const { return state_ == State::kActive; }
  size_t key_count() const;

 private:
  friend class Store;

  enum class State { kActive, kCommitted, kDiscarded };

  Txn(Store* parent, std::unique_ptr<Store> child);

  Status check_active() const;

  Store* parent_;
  std::unique_ptr<Store> child_;
  State state_ = State::kActive;
};

}  // namespace flashmap
