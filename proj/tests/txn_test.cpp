// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <random>
#include <thread>

#include "flashmap/txn.hpp"
#include "model.hpp"
#include "test_util.hpp"

using namespace flashmap;
using flashmap::testing::ModelHarness;
using flashmap::testing::OracleMap;
using flashmap::testing::TempDir;

namespace {

StoreConfig txn_config() {
  StoreConfig cfg;
  cfg.n_active = 4;
  cfg.m_spare = 1;
  cfg.strand_size = 2 << 20;
  cfg.write_buffer_bytes = 32 << 10;
  cfg.read_cache_bytes = 4 << 20;
  cfg.background_gc = false;
  return cfg;
}

std::unique_ptr<Store> open_mem() {
  std::unique_ptr<Store> store;
  REQUIRE(Store::open(StorageSpec::in_memory(), "txn", txn_config(), store)
              .ok());
  return store;
}

}  // namespace

TEST_CASE("fork of an empty parent is empty") {
  auto parent = open_mem();
  std::unique_ptr<Txn> txn;
  REQUIRE(parent->transact(txn).ok());
  CHECK(txn->key_count() == 0);
  std::string k, v;
  CHECK(txn->prev(std::nullopt, &k, &v).is(Code::kExhausted));
  REQUIRE(txn->discard().ok());
}

TEST_CASE("parent and child evolve separately") {
  auto parent = open_mem();
  REQUIRE(parent->insert("a", "1").ok());
  std::unique_ptr<Txn> txn;
  REQUIRE(parent->transact(txn).ok());

  // Parent mutation after the fork is invisible to the child.
  REQUIRE(parent->update("a", "2").ok());
  std::string v;
  REQUIRE(txn->lookup("a", &v).ok());
  CHECK(v == "1");

  // Child mutation is invisible to the parent.
  REQUIRE(txn->insert("b", "3").ok());
  CHECK(parent->lookup("b", &v).is(Code::kKeyNotFound));

  REQUIRE(txn->discard().ok());
  REQUIRE(parent->lookup("a", &v).ok());
  CHECK(v == "2");
}

TEST_CASE("child supports the full point-op surface") {
  auto parent = open_mem();
  REQUIRE(parent->insert("x", "px").ok());
  std::unique_ptr<Txn> txn;
  REQUIRE(parent->transact(txn).ok());

  CHECK(txn->replace("nope", "v").is(Code::kReplaceMissing));
  REQUIRE(txn->replace("x", "cx").ok());
  CHECK(txn->erase("nope").is(Code::kDeleteMissing));
  REQUIRE(txn->insert("y", "cy").ok());
  REQUIRE(txn->update("z", "cz").ok());
  REQUIRE(txn->erase("z").ok());

  std::string k, v;
  REQUIRE(txn->prev(std::nullopt, &k, &v).ok());
  CHECK(k == "x");
  REQUIRE(txn->next("x", &k, &v).ok());
  CHECK(k == "y");
  CHECK(txn->next("y", &k, &v).is(Code::kExhausted));
  REQUIRE(txn->discard().ok());
}

TEST_CASE("commit: child value overrides the parent") {
  auto parent = open_mem();
  REQUIRE(parent->insert("a", "parent").ok());
  std::unique_ptr<Txn> txn;
  REQUIRE(parent->transact(txn).ok());
  REQUIRE(txn->update("a", "child").ok());
  REQUIRE(txn->commit().ok());
  std::string v;
  REQUIRE(parent->lookup("a", &v).ok());
  CHECK(v == "child");
}

TEST_CASE("commit: parent-only pairs are removed") {
  auto parent = open_mem();
  REQUIRE(parent->insert("kept", "1").ok());
  std::unique_ptr<Txn> txn;
  REQUIRE(parent->transact(txn).ok());
  // Inserted into the parent after the fork: exists only in the parent.
  REQUIRE(parent->insert("post-fork", "2").ok());
  REQUIRE(txn->commit().ok());
  std::string v;
  REQUIRE(parent->lookup("kept", &v).ok());
  CHECK(parent->lookup("post-fork", &v).is(Code::kKeyNotFound));
}

TEST_CASE("commit: child-only pairs are added") {
  auto parent = open_mem();
  std::unique_ptr<Txn> txn;
  REQUIRE(parent->transact(txn).ok());
  REQUIRE(txn->insert("new", "value").ok());
  REQUIRE(txn->commit().ok());
  std::string v;
  REQUIRE(parent->lookup("new", &v).ok());
  CHECK(v == "value");
}

TEST_CASE("identity merge appends nothing") {
  auto parent = open_mem();
  REQUIRE(parent->insert("a", "1").ok());
  REQUIRE(parent->insert("b", "2").ok());
  std::vector<uint64_t> tails_before;
  for (uint32_t s = 0; s < parent->config().n_active; ++s) {
    Store::SlotStats stats;
    REQUIRE(parent->slot_stats(s, &stats).ok());
    tails_before.push_back(stats.tail);
  }
  std::unique_ptr<Txn> txn;
  REQUIRE(parent->transact(txn).ok());
  REQUIRE(txn->commit().ok());
  for (uint32_t s = 0; s < parent->config().n_active; ++s) {
    Store::SlotStats stats;
    REQUIRE(parent->slot_stats(s, &stats).ok());
    CHECK(stats.tail == tails_before[s]);
  }
  std::string v;
  REQUIRE(parent->lookup("a", &v).ok());
  CHECK(v == "1");
}

TEST_CASE("handles are single-shot") {
  auto parent = open_mem();
  std::unique_ptr<Txn> txn;
  REQUIRE(parent->transact(txn).ok());
  REQUIRE(txn->commit().ok());
  CHECK(txn->commit().is(Code::kInvalidHandle));
  CHECK(txn->discard().is(Code::kInvalidHandle));
  CHECK(txn->insert("x", "y").is(Code::kInvalidHandle));
  std::string v;
  CHECK(txn->lookup("x", &v).is(Code::kInvalidHandle));

  std::unique_ptr<Txn> txn2;
  REQUIRE(parent->transact(txn2).ok());
  REQUIRE(txn2->discard().ok());
  CHECK(txn2->discard().is(Code::kInvalidHandle));
  CHECK(txn2->commit().is(Code::kInvalidHandle));
}

TEST_CASE("post-commit parent equals pre-commit child, randomized") {
  std::mt19937_64 rng(2025);
  for (int trial = 0; trial < 100; ++trial) {
    auto parent = open_mem();
    OracleMap parent_oracle;
    ModelHarness setup(rng(), 200, 32);
    std::string err;
    const int setup_ops = static_cast<int>(rng() % 300);
    for (int i = 0; i < setup_ops; ++i) {
      REQUIRE_MESSAGE(setup.step(*parent, parent_oracle, &err), err);
    }

    std::unique_ptr<Txn> txn;
    REQUIRE(parent->transact(txn).ok());
    OracleMap child_oracle = parent_oracle;

    // Parent ops P and child ops C, interleaved arbitrarily.
    ModelHarness parent_ops(rng(), 200, 32);
    std::mt19937_64 mix(rng());
    for (int i = 0; i < 200; ++i) {
      if (mix() % 2 == 0) {
        REQUIRE_MESSAGE(parent_ops.step(*parent, parent_oracle, &err), err);
      } else {
        const std::string key = "key-" + std::to_string(mix() % 200);
        switch (mix() % 3) {
          case 0: {
            const std::string value = "c" + std::to_string(mix());
            REQUIRE(txn->insert(key, value).ok());
            child_oracle[key] = value;
            break;
          }
          case 1:
            if (child_oracle.contains(key)) {
              REQUIRE(txn->erase(key).ok());
              child_oracle.erase(key);
            }
            break;
          case 2: {
            std::string v;
            Status s = txn->lookup(key, &v);
            if (child_oracle.contains(key)) {
              REQUIRE(s.ok());
              REQUIRE(v == child_oracle[key]);
            } else {
              REQUIRE(s.is(Code::kKeyNotFound));
            }
            break;
          }
        }
      }
    }

    const bool do_commit = mix() % 2 == 0;
    if (do_commit) {
      REQUIRE(txn->commit().ok());
      CHECK_MESSAGE(
          ModelHarness::contents_equal(*parent, child_oracle, &err), err);
    } else {
      REQUIRE(txn->discard().ok());
      CHECK_MESSAGE(
          ModelHarness::contents_equal(*parent, parent_oracle, &err), err);
    }
  }
}

TEST_CASE("commit is atomic for concurrent single-key readers") {
  auto parent = open_mem();
  const int keys = 50;
  for (int i = 0; i < keys; ++i) {
    REQUIRE(parent->insert("k" + std::to_string(i), "pre").ok());
  }
  std::unique_ptr<Txn> txn;
  REQUIRE(parent->transact(txn).ok());
  for (int i = 0; i < keys; ++i) {
    REQUIRE(txn->update("k" + std::to_string(i), "post").ok());
  }

  std::atomic<bool> done{false};
  std::atomic<int> torn{0};
  std::thread reader([&] {
    std::mt19937_64 rng(1);
    std::string v;
    while (!done.load(std::memory_order_relaxed)) {
      const std::string key = "k" + std::to_string(rng() % keys);
      if (parent->lookup(key, &v).ok()) {
        if (v != "pre" && v != "post") torn.fetch_add(1);
      } else {
        torn.fetch_add(1);  // keys never vanish in this merge
      }
    }
  });

  parent->testing_set_commit_pause(
      [] { std::this_thread::sleep_for(std::chrono::microseconds(200)); });
  REQUIRE(txn->commit().ok());
  done.store(true);
  reader.join();
  parent->testing_set_commit_pause(nullptr);
  CHECK(torn.load() == 0);
  std::string v;
  REQUIRE(parent->lookup("k0", &v).ok());
  CHECK(v == "post");
}

TEST_CASE("commit excludes concurrent parent mutations") {
  auto parent = open_mem();
  for (int i = 0; i < 20; ++i) {
    REQUIRE(parent->insert("k" + std::to_string(i), "pre").ok());
  }
  std::unique_ptr<Txn> txn;
  REQUIRE(parent->transact(txn).ok());
  REQUIRE(txn->update("k0", "child").ok());

  // A mutator hammering the parent while commit runs; the merge holds the
  // gate, so every one of these lands entirely before or after it. Since
  // the child snapshot predates them, any that land before are erased by
  // the merge; any after survive.
  std::atomic<bool> start{false};
  std::atomic<bool> stop{false};
  std::atomic<int> accepted{0};
  std::thread mutator([&] {
    while (!start.load()) std::this_thread::yield();
    int i = 0;
    while (!stop.load(std::memory_order_relaxed)) {
      if (parent->update("racer-" + std::to_string(i++ % 8), "x").ok()) {
        accepted.fetch_add(1);
      }
    }
  });
  parent->testing_set_commit_pause(
      [] { std::this_thread::sleep_for(std::chrono::microseconds(100)); });
  start.store(true);
  std::this_thread::sleep_for(std::chrono::milliseconds(2));
  REQUIRE(txn->commit().ok());
  stop.store(true);
  mutator.join();
  parent->testing_set_commit_pause(nullptr);
  CHECK(accepted.load() > 0);

  // The snapshot keys all exist with their merged values.
  std::string v;
  REQUIRE(parent->lookup("k0", &v).ok());
  CHECK(v == "child");
  for (int i = 1; i < 20; ++i) {
    REQUIRE(parent->lookup("k" + std::to_string(i), &v).ok());
    CHECK(v == "pre");
  }
}

TEST_CASE("dropping an active handle discards it") {
  auto parent = open_mem();
  REQUIRE(parent->insert("a", "1").ok());
  {
    std::unique_ptr<Txn> txn;
    REQUIRE(parent->transact(txn).ok());
    REQUIRE(txn->insert("b", "2").ok());
    // txn destroyed without commit/discard
  }
  std::string v;
  CHECK(parent->lookup("b", &v).is(Code::kKeyNotFound));
  REQUIRE(parent->lookup("a", &v).ok());
}

TEST_CASE("commit is durable through the parent's append path") {
  TempDir dir("txn-durable");
  OracleMap expect;
  {
    std::unique_ptr<Store> parent;
    REQUIRE(Store::open(StorageSpec::directory(dir), "txn", txn_config(),
                        parent)
                .ok());
    REQUIRE(parent->insert("stays", "1").ok());
    REQUIRE(parent->insert("killed", "2").ok());
    std::unique_ptr<Txn> txn;
    REQUIRE(parent->transact(txn).ok());
    REQUIRE(txn->update("stays", "merged").ok());
    REQUIRE(txn->erase("killed").ok());
    REQUIRE(txn->insert("added", "3").ok());
    REQUIRE(txn->commit().ok());
    expect["stays"] = "merged";
    expect["added"] = "3";
    REQUIRE(parent->flush().ok());
    parent->testing_abandon();  // crash after commit
  }
  std::unique_ptr<Store> parent;
  REQUIRE(
      Store::open(StorageSpec::directory(dir), "txn", txn_config(), parent)
          .ok());
  std::string err;
  CHECK_MESSAGE(ModelHarness::contents_equal(*parent, expect, &err), err);
}
