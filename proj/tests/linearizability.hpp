// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "flashmap/hash.hpp"
#include "flashmap/status.hpp"

namespace flashmap::testing {

// A completed point operation with its real-time interval. Timestamps come
// from one global atomic counter, so op A precedes op B iff A.ret < B.inv.
struct HistOp {
  enum Kind { kInsert, kUpdate, kReplace, kErase, kLookup };
  Kind kind;
  std::string key;
  std::string arg;  // stored value for mutations
  Code result = Code::kOk;
  std::string result_value;  // lookup output
  uint64_t inv = 0;
  uint64_t ret = 0;
};

// Decides whether `history` is linearizable against the ordered-map
// semantics of the point operations: a DFS over all orderings that respect
// real-time precedence, with memoized dead states.
class LinChecker {
 public:
  using Model = std::map<std::string, std::string>;

  // `initial` is the store's (sequential) state when the history began.
  explicit LinChecker(std::vector<HistOp> history, Model initial = {})
      : ops_(std::move(history)), initial_(std::move(initial)) {}

  bool linearizable() {
    if (ops_.size() > 63) return false;  // bitmask bound; keep runs small
    dead_.clear();
    Model model = initial_;
    return search(0, model);
  }

 private:

  static bool apply(const HistOp& op, Model& model) {
    switch (op.kind) {
      case HistOp::kInsert:
      case HistOp::kUpdate:
        if (op.result != Code::kOk) return false;
        model[op.key] = op.arg;
        return true;
      case HistOp::kReplace:
        if (model.contains(op.key)) {
          if (op.result != Code::kOk) return false;
          model[op.key] = op.arg;
          return true;
        }
        return op.result == Code::kReplaceMissing;
      case HistOp::kErase:
        if (model.contains(op.key)) {
          if (op.result != Code::kOk) return false;
          model.erase(op.key);
          return true;
        }
        return op.result == Code::kDeleteMissing;
      case HistOp::kLookup: {
        auto it = model.find(op.key);
        if (it == model.end()) return op.result == Code::kKeyNotFound;
        return op.result == Code::kOk && op.result_value == it->second;
      }
    }
    return false;
  }

  uint64_t state_key(uint64_t mask, const Model& model) const {
    uint64_t h = xxh64(&mask, sizeof(mask), 0x11C5);
    for (const auto& [k, v] : model) {
      h = xxh64(k.data(), k.size(), h);
      h = xxh64(v.data(), v.size(), h);
    }
    return h;
  }

  bool search(uint64_t mask, Model& model) {
    if (mask == (uint64_t(1) << ops_.size()) - 1) return true;
    const uint64_t key = state_key(mask, model);
    if (dead_.contains(key)) return false;

    // An op may linearize next only if no pending op finished before it
    // was invoked.
    uint64_t min_pending_ret = ~uint64_t(0);
    for (size_t i = 0; i < ops_.size(); ++i) {
      if (!(mask & (uint64_t(1) << i))) {
        min_pending_ret = std::min(min_pending_ret, ops_[i].ret);
      }
    }
    for (size_t i = 0; i < ops_.size(); ++i) {
      if (mask & (uint64_t(1) << i)) continue;
      if (ops_[i].inv > min_pending_ret) continue;
      Model next = model;
      if (!apply(ops_[i], next)) continue;
      if (search(mask | (uint64_t(1) << i), next)) return true;
    }
    dead_.insert(key);
    return false;
  }

  std::vector<HistOp> ops_;
  Model initial_;
  std::unordered_set<uint64_t> dead_;
};

}  // namespace flashmap::testing
