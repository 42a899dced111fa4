// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0
//
// flashmap CLI: benchmark workloads and ad-hoc store inspection.
//
//   flashmap bench --dir /data/fm --pairs 1000000 --threads 4 --phase all
//   flashmap kv put --dir /data/fm mykey myvalue
//   flashmap kv scan --dir /data/fm
//
// Exit codes: 0 on success, otherwise the numeric value of the failing
// status code (see include/flashmap/status.hpp).

#include <CLI11.hpp>
#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "../src/bench/workload.hpp"
#include "flashmap/status.hpp"
#include "flashmap/store.hpp"
#include "flashmap/txn.hpp"

namespace {

using flashmap::Code;
using flashmap::Status;
using flashmap::Store;
using flashmap::StoreConfig;
using flashmap::StorageSpec;

struct StoreOpts {
  std::string dir;
  bool in_memory = false;
  std::string name = "default";
  StoreConfig config;
  uint64_t capacity = 0;  // when set, derives strand_size
};

void add_store_opts(CLI::App* cmd, StoreOpts* o) {
  cmd->add_option("--dir", o->dir, "store directory");
  cmd->add_flag("--mem", o->in_memory, "use in-memory storage");
  cmd->add_option("--name", o->name, "logical store name");
  cmd->add_option("--strands", o->config.n_active, "active strands (N)");
  cmd->add_option("--spares", o->config.m_spare, "spare strands (M)");
  cmd->add_option("--strand-size", o->config.strand_size,
                  "bytes per strand (S)");
  cmd->add_option("--capacity", o->capacity,
                  "total capacity; sets strand size to capacity/(N+M)");
  cmd->add_option("--hash-seed", o->config.hash_seed, "routing hash seed");
  cmd->add_option("--write-buffer", o->config.write_buffer_bytes,
                  "write buffer bytes per strand");
  cmd->add_option("--read-cache", o->config.read_cache_bytes,
                  "total read cache bytes");
  cmd->add_option("--gc-fraction", o->config.gc_trigger_fraction,
                  "strand utilization that triggers GC");
  cmd->add_flag("!--no-background-gc", o->config.background_gc,
                "collect only when a strand fills");
}

int fail(const Status& s) {
  std::fprintf(stderr, "error: %s\n", s.to_string().c_str());
  return static_cast<int>(s.code());
}

Status open_store(const StoreOpts& o, std::unique_ptr<Store>& out) {
  if (!o.in_memory && o.dir.empty()) {
    return Status::make(Code::kInvalidArgument, "pass --dir or --mem");
  }
  StoreConfig cfg = o.config;
  if (o.capacity > 0) {
    cfg.strand_size = StoreConfig::strand_size_for_capacity(
        o.capacity, cfg.n_active, cfg.m_spare);
  }
  const StorageSpec spec = o.in_memory ? StorageSpec::in_memory()
                                       : StorageSpec::directory(o.dir);
  return Store::open(spec, o.name, cfg, out);
}

void print_report(const flashmap::bench::BenchReport& r) {
  std::printf("%-12s threads=%-3u ops=%-10" PRIu64
              " %10.0f ops/s   p95=%.2fus p99=%.2fus p99.9=%.2fus\n",
              r.phase.c_str(), r.threads, r.ops, r.ops_per_sec, r.p95_us,
              r.p99_us, r.p999_us);
}

Status append_csv(const std::string& path,
                  const flashmap::bench::BenchReport& r) {
  const bool fresh =
      !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) {
    return Status::make(Code::kIoFailure, "cannot open csv file " + path);
  }
  if (fresh) out << flashmap::bench::BenchReport::csv_header() << '\n';
  out << r.csv_row() << '\n';
  return Status::OK();
}

std::string printable_key(const std::string& key) {
  const bool clean = std::all_of(key.begin(), key.end(), [](char c) {
    return std::isprint(static_cast<unsigned char>(c));
  });
  if (clean) return key;
  static const char* hex = "0123456789abcdef";
  std::string out = "0x";
  for (unsigned char c : key) {
    out += hex[c >> 4];
    out += hex[c & 0xF];
  }
  return out;
}

int run_bench(const StoreOpts& opts, flashmap::bench::WorkloadSpec spec,
              const std::string& phase_arg, const std::string& csv,
              const std::vector<uint32_t>& sweep_sizes) {
  using namespace flashmap::bench;

  if (phase_arg == "sweep") {
    SweepSpec sweep;
    sweep.pair_sizes = sweep_sizes;
    sweep.pair_count = spec.pair_count;
    sweep.key_size = spec.key_size;
    sweep.threads = spec.threads;
    sweep.update_pct = spec.update_pct;
    sweep.seed = spec.seed;
    sweep.verify = spec.verify;
    std::vector<SweepRow> rows;
    Status s = run_sweep(
        sweep,
        [&](uint32_t pair_size, std::unique_ptr<Store>& out) {
          StoreOpts per = opts;
          if (!per.in_memory) {
            // Each size gets a fresh store under <dir>/sweep-<size>.
            per.dir = (std::filesystem::path(opts.dir) /
                       ("sweep-" + std::to_string(pair_size)))
                          .string();
            std::filesystem::remove_all(per.dir);
          }
          return open_store(per, out);
        },
        &rows);
    if (!s.ok()) return fail(s);
    std::printf("%10s %14s %12s\n", "pair_size", "ops_per_sec", "mb_per_sec");
    for (const auto& row : rows) {
      std::printf("%10u %14.0f %12.2f\n", row.pair_size, row.ops_per_sec,
                  row.mb_per_sec);
      if (!csv.empty()) {
        s = append_csv(csv, row.mixed);
        if (!s.ok()) return fail(s);
      }
    }
    return 0;
  }

  std::vector<Phase> phases;
  if (phase_arg == "all") {
    phases = {Phase::kPopulate, Phase::kLookupSeq, Phase::kLookupRand,
              Phase::kDelete};
  } else if (auto p = parse_phase(phase_arg)) {
    phases = {*p};
  } else {
    return fail(Status::make(Code::kInvalidArgument,
                             "unknown phase " + phase_arg));
  }

  std::unique_ptr<Store> store;
  Status s = open_store(opts, store);
  if (!s.ok()) return fail(s);

  for (Phase phase : phases) {
    spec.phase = phase;
    BenchReport report;
    s = run_phase(spec, *store, &report);
    if (!s.ok()) return fail(s);
    print_report(report);
    if (!csv.empty()) {
      s = append_csv(csv, report);
      if (!s.ok()) return fail(s);
    }
  }

  double mem_per_key = 0;
  if (store->index_memory_per_key(&mem_per_key).ok()) {
    std::printf("index: %zu keys, ~%.1f bytes/key\n", store->key_count(),
                mem_per_key);
  }
  std::printf("cache: %" PRIu64 " hits, %" PRIu64 " misses\n",
              store->cache_hits(), store->cache_misses());
  s = store->close();
  if (!s.ok()) return fail(s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flashmap: flash-aware log-structured key-value store"};
  app.require_subcommand(1);

  // ---- kv ------------------------------------------------------------
  auto* kv = app.add_subcommand("kv", "point operations on a store");
  kv->require_subcommand(1);
  StoreOpts kv_opts;
  std::string arg_key, arg_value;
  bool scan_values = false;

  auto* kv_get = kv->add_subcommand("get", "print the value for a key");
  add_store_opts(kv_get, &kv_opts);
  kv_get->add_option("key", arg_key)->required();

  auto* kv_put = kv->add_subcommand("put", "store a key-value pair");
  add_store_opts(kv_put, &kv_opts);
  kv_put->add_option("key", arg_key)->required();
  kv_put->add_option("value", arg_value)->required();

  auto* kv_del = kv->add_subcommand("del", "delete a key");
  add_store_opts(kv_del, &kv_opts);
  kv_del->add_option("key", arg_key)->required();

  auto* kv_scan = kv->add_subcommand("scan", "list keys in order");
  add_store_opts(kv_scan, &kv_opts);
  kv_scan->add_flag("--values", scan_values, "print values too");

  // ---- bench ---------------------------------------------------------
  auto* bench = app.add_subcommand("bench", "run benchmark workloads");
  StoreOpts bench_opts;
  add_store_opts(bench, &bench_opts);
  flashmap::bench::WorkloadSpec spec;
  std::string phase_arg = "all";
  std::string csv;
  std::vector<uint32_t> sweep_sizes = {100, 256, 1024, 4096, 16384, 65536};
  bool no_verify = false;
  bool full_latency = false;
  bench->add_option("--pairs", spec.pair_count, "key-value pairs");
  bench->add_option("--key-size", spec.key_size, "key bytes (>= 8)");
  bench->add_option("--value-size", spec.value_size, "value bytes");
  bench->add_option("--threads", spec.threads, "worker threads");
  bench->add_option("--update-pct", spec.update_pct,
                    "mixed phase update percentage");
  bench->add_option("--ops", spec.op_count,
                    "mixed phase operation count (default: --pairs)");
  bench->add_option("--seed", spec.seed, "workload seed");
  bench->add_option(
      "--phase", phase_arg,
      "populate|lookup_seq|lookup_rand|delete|mixed|sweep|all");
  bench->add_option("--csv", csv, "append reports to this CSV file");
  bench->add_option("--sweep-sizes", sweep_sizes,
                    "pair sizes for --phase sweep")
      ->delimiter(',');
  bench->add_flag("--no-verify", no_verify, "skip value verification");
  bench->add_flag("--full-latency", full_latency,
                  "keep every latency sample (default: 2^20 reservoir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (bench->parsed()) {
    spec.verify = !no_verify;
    if (full_latency) spec.latency_reservoir = 0;
    return run_bench(bench_opts, spec, phase_arg, csv, sweep_sizes);
  }

  // kv subcommands
  std::unique_ptr<Store> store;
  Status s = open_store(kv_opts, store);
  if (!s.ok()) return fail(s);

  if (kv_get->parsed()) {
    std::string value;
    s = store->lookup(arg_key, &value);
    if (!s.ok()) return fail(s);
    std::fwrite(value.data(), 1, value.size(), stdout);
    std::fputc('\n', stdout);
  } else if (kv_put->parsed()) {
    s = store->update(arg_key, arg_value);
    if (!s.ok()) return fail(s);
  } else if (kv_del->parsed()) {
    s = store->erase(arg_key);
    if (!s.ok()) return fail(s);
  } else if (kv_scan->parsed()) {
    std::string key, value;
    std::string cursor;
    bool walking = false;
    for (;;) {
      s = walking ? store->next(cursor, &key, &value)
                  : store->prev(std::nullopt, &key, &value);
      if (s.is(Code::kExhausted)) break;
      if (!s.ok()) return fail(s);
      if (scan_values) {
        std::printf("%s\t%s\n", printable_key(key).c_str(), value.c_str());
      } else {
        std::printf("%s\t%zu\n", printable_key(key).c_str(), value.size());
      }
      cursor = key;
      walking = true;
    }
  }

  s = store->close();
  if (!s.ok()) return fail(s);
  return 0;
}
