// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "flashmap/status.hpp"
#include "flashmap/store.hpp"

namespace flashmap::testing {

using OracleMap = std::map<std::string, std::string>;

// One randomized operation applied to both the store and a reference
// ordered map, checking equivalent outcomes. Returns false and fills
// `err` on the first divergence.
class ModelHarness {
 public:
  ModelHarness(uint64_t seed, size_t key_space, size_t max_value_len)
      : rng_(seed), key_space_(key_space), max_value_len_(max_value_len) {}

  bool step(Store& store, OracleMap& oracle, std::string* err) {
    const int op = static_cast<int>(rng_() % 10);
    const std::string key = pick_key();
    switch (op) {
      case 0:
      case 1: {  // insert
        const std::string value = pick_value();
        Status s = store.insert(key, value);
        if (!s.ok()) return fail(err, "insert", key, s.to_string());
        oracle[key] = value;
        return true;
      }
      case 2: {  // update
        const std::string value = pick_value();
        Status s = store.update(key, value);
        if (!s.ok()) return fail(err, "update", key, s.to_string());
        oracle[key] = value;
        return true;
      }
      case 3: {  // replace
        const std::string value = pick_value();
        Status s = store.replace(key, value);
        const bool exists = oracle.contains(key);
        if (exists) {
          if (!s.ok()) return fail(err, "replace", key, s.to_string());
          oracle[key] = value;
        } else if (!s.is(Code::kReplaceMissing)) {
          return fail(err, "replace-missing", key, s.to_string());
        }
        return true;
      }
      case 4: {  // erase
        Status s = store.erase(key);
        const bool exists = oracle.contains(key);
        if (exists) {
          if (!s.ok()) return fail(err, "erase", key, s.to_string());
          oracle.erase(key);
        } else if (!s.is(Code::kDeleteMissing)) {
          return fail(err, "erase-missing", key, s.to_string());
        }
        return true;
      }
      case 5:
      case 6:
      case 7: {  // lookup
        std::string value;
        Status s = store.lookup(key, &value);
        auto it = oracle.find(key);
        if (it == oracle.end()) {
          if (!s.is(Code::kKeyNotFound)) {
            return fail(err, "lookup-missing", key, s.to_string());
          }
        } else {
          if (!s.ok()) return fail(err, "lookup", key, s.to_string());
          if (value != it->second) {
            return fail(err, "lookup-value", key, "value mismatch");
          }
        }
        return true;
      }
      case 8:  // next
        return check_neighbor(store, oracle, /*forward=*/true, key, err);
      default:  // prev
        return check_neighbor(store, oracle, /*forward=*/false, key, err);
    }
  }

  // Full contents comparison via a forward walk.
  static bool contents_equal(const Store& store, const OracleMap& oracle,
                             std::string* err) {
    std::string k, v;
    size_t seen = 0;
    Status s = store.prev(std::nullopt, &k, &v);
    auto it = oracle.begin();
    while (s.ok()) {
      if (it == oracle.end()) return fail(err, "walk", k, "extra store key");
      if (k != it->first || v != it->second) {
        return fail(err, "walk", k, "mismatch vs oracle key " + it->first);
      }
      ++seen;
      ++it;
      std::string nk, nv;
      s = store.next(k, &nk, &nv);
      k = std::move(nk);
      v = std::move(nv);
    }
    if (!s.is(Code::kExhausted)) return fail(err, "walk", k, s.to_string());
    if (it != oracle.end()) {
      return fail(err, "walk", it->first, "missing store key");
    }
    if (seen != oracle.size() || store.key_count() != oracle.size()) {
      return fail(err, "walk", "", "count mismatch");
    }
    return true;
  }

 private:
  bool check_neighbor(Store& store, const OracleMap& oracle, bool forward,
                      const std::string& key, std::string* err) {
    const bool omit = rng_() % 6 == 0;
    std::string got_key, got_value;
    Status s = forward
                   ? store.next(omit ? std::nullopt
                                     : std::optional<std::string_view>(key),
                                &got_key, &got_value)
                   : store.prev(omit ? std::nullopt
                                     : std::optional<std::string_view>(key),
                                &got_key, &got_value);
    OracleMap::const_iterator it;
    bool has = false;
    if (forward) {
      if (omit) {
        // next() without a key: the largest pair.
        has = !oracle.empty();
        if (has) it = std::prev(oracle.end());
      } else {
        it = oracle.upper_bound(key);
        has = it != oracle.end();
      }
    } else {
      if (omit) {
        has = !oracle.empty();
        if (has) it = oracle.begin();
      } else {
        it = oracle.lower_bound(key);
        has = it != oracle.begin();
        if (has) --it;
      }
    }
    if (!has) {
      if (!s.is(Code::kExhausted)) {
        return fail(err, forward ? "next" : "prev", key, s.to_string());
      }
      return true;
    }
    if (!s.ok()) return fail(err, forward ? "next" : "prev", key, s.to_string());
    if (got_key != it->first || got_value != it->second) {
      return fail(err, forward ? "next" : "prev", key,
                  "expected " + it->first + ", got " + got_key);
    }
    return true;
  }

  std::string pick_key() {
    std::ostringstream os;
    os << "key-" << rng_() % key_space_;
    return os.str();
  }

  std::string pick_value() {
    const size_t n = rng_() % (max_value_len_ + 1);
    std::string v(n, '\0');
    for (auto& c : v) c = static_cast<char>('a' + rng_() % 26);
    return v;
  }

  static bool fail(std::string* err, const std::string& op,
                   const std::string& key, const std::string& detail) {
    if (err != nullptr) {
      *err = "op " + op + " key '" + key + "': " + detail;
    }
    return false;
  }

  std::mt19937_64 rng_;
  size_t key_space_;
  size_t max_value_len_;
};

}  // namespace flashmap::testing
