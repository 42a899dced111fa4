// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashmap/storage.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <system_error>
#include <vector>

namespace flashmap {

Status Region::write(uint64_t offset, std::span<const uint8_t> data) {
  if (offset > capacity_ || data.size() > capacity_ - offset) {
    return Status::make(Code::kOutOfBounds, "write past region end");
  }
  if (data.empty()) return Status::OK();
  return do_write(offset, data);
}

Status Region::read(uint64_t offset, std::span<uint8_t> out) const {
  if (offset > capacity_ || out.size() > capacity_ - offset) {
    return Status::make(Code::kOutOfBounds, "read past region end");
  }
  if (out.empty()) return Status::OK();
  return do_read(offset, out);
}

Status Region::trim(uint64_t offset, uint64_t length) {
  if (offset > capacity_ || length > capacity_ - offset) {
    return Status::make(Code::kOutOfBounds, "trim past region end");
  }
  trim_events_.fetch_add(1, std::memory_order_relaxed);
  if (length == 0) return Status::OK();
  return do_trim(offset, length);
}

Status Region::flush() { return do_flush(); }

std::string region_file_name(uint32_t region_id) {
  return "strand-" + std::to_string(region_id) + ".dat";
}

namespace {

// Anonymous memory region. Pages are allocated on first write so that large
// capacities cost nothing until used; trim releases whole pages again.
class MemRegion final : public Region {
 public:
  static constexpr uint64_t kPageBits = 16;  // 64 KiB pages
  static constexpr uint64_t kPageSize = 1ull << kPageBits;

  MemRegion(uint32_t id, uint64_t capacity)
      : Region(id, capacity),
        pages_((capacity + kPageSize - 1) >> kPageBits) {
    for (auto& p : pages_) p.store(nullptr, std::memory_order_relaxed);
  }

  ~MemRegion() override {
    for (auto& p : pages_) delete[] p.load(std::memory_order_relaxed);
  }

 protected:
  Status do_write(uint64_t offset, std::span<const uint8_t> data) override {
    const uint8_t* src = data.data();
    uint64_t n = data.size();
    while (n > 0) {
      const uint64_t page = offset >> kPageBits;
      const uint64_t in_page = offset & (kPageSize - 1);
      const uint64_t chunk = std::min(n, kPageSize - in_page);
      std::memcpy(page_for_write(page) + in_page, src, chunk);
      src += chunk;
      offset += chunk;
      n -= chunk;
    }
    return Status::OK();
  }

  Status do_read(uint64_t offset, std::span<uint8_t> out) const override {
    uint8_t* dst = out.data();
    uint64_t n = out.size();
    while (n > 0) {
      const uint64_t page = offset >> kPageBits;
      const uint64_t in_page = offset & (kPageSize - 1);
      const uint64_t chunk = std::min(n, kPageSize - in_page);
      const uint8_t* p = pages_[page].load(std::memory_order_acquire);
      if (p == nullptr) {
        std::memset(dst, 0, chunk);
      } else {
        std::memcpy(dst, p + in_page, chunk);
      }
      dst += chunk;
      offset += chunk;
      n -= chunk;
    }
    return Status::OK();
  }

  Status do_trim(uint64_t offset, uint64_t length) override {
    uint64_t end = offset + length;
    while (offset < end) {
      const uint64_t page = offset >> kPageBits;
      const uint64_t in_page = offset & (kPageSize - 1);
      const uint64_t chunk = std::min(end - offset, kPageSize - in_page);
      if (in_page == 0 && chunk == kPageSize) {
        delete[] pages_[page].exchange(nullptr, std::memory_order_acq_rel);
      } else if (uint8_t* p = pages_[page].load(std::memory_order_acquire)) {
        std::memset(p + in_page, 0, chunk);
      }
      offset += chunk;
    }
    return Status::OK();
  }

  Status do_flush() override { return Status::OK(); }

 private:
  uint8_t* page_for_write(uint64_t page) {
    uint8_t* p = pages_[page].load(std::memory_order_acquire);
    if (p == nullptr) {
      auto* fresh = new uint8_t[kPageSize]();
      if (pages_[page].compare_exchange_strong(p, fresh,
                                               std::memory_order_acq_rel)) {
        return fresh;
      }
      delete[] fresh;  // concurrent allocation won; p now holds it
    }
    return p;
  }

  std::vector<std::atomic<uint8_t*>> pages_;
};

class FileRegion final : public Region {
 public:
  FileRegion(uint32_t id, uint64_t capacity, int fd)
      : Region(id, capacity), fd_(fd) {}

  ~FileRegion() override {
    if (fd_ >= 0) ::close(fd_);
  }

 protected:
  Status do_write(uint64_t offset, std::span<const uint8_t> data) override {
    const uint8_t* p = data.data();
    size_t n = data.size();
    while (n > 0) {
      const ssize_t w = ::pwrite(fd_, p, n, static_cast<off_t>(offset));
      if (w < 0) {
        if (errno == EINTR) continue;
        return Status::make(Code::kIoFailure,
                            std::string("pwrite: ") + std::strerror(errno));
      }
      p += w;
      offset += static_cast<uint64_t>(w);
      n -= static_cast<size_t>(w);
    }
    return Status::OK();
  }

  Status do_read(uint64_t offset, std::span<uint8_t> out) const override {
    uint8_t* p = out.data();
    size_t n = out.size();
    while (n > 0) {
      const ssize_t r = ::pread(fd_, p, n, static_cast<off_t>(offset));
      if (r < 0) {
        if (errno == EINTR) continue;
        return Status::make(Code::kIoFailure,
                            std::string("pread: ") + std::strerror(errno));
      }
      if (r == 0) {
        // Hole at the end of a sparse file: defined as zeros.
        std::memset(p, 0, n);
        break;
      }
      p += r;
      offset += static_cast<uint64_t>(r);
      n -= static_cast<size_t>(r);
    }
    return Status::OK();
  }

  Status do_trim(uint64_t offset, uint64_t length) override {
#ifdef FALLOC_FL_PUNCH_HOLE
    if (::fallocate(fd_, FALLOC_FL_PUNCH_HOLE | FALLOC_FL_KEEP_SIZE,
                    static_cast<off_t>(offset),
                    static_cast<off_t>(length)) == 0) {
      return Status::OK();
    }
    // Filesystem may not support hole punching; fall through to zeroing.
#endif
    static const std::vector<uint8_t> zeros(1 << 20, 0);
    while (length > 0) {
      const uint64_t chunk = std::min<uint64_t>(length, zeros.size());
      Status s = do_write(offset, std::span(zeros.data(), chunk));
      if (!s.ok()) return s;
      offset += chunk;
      length -= chunk;
    }
    return Status::OK();
  }

  Status do_flush() override {
    if (::fdatasync(fd_) != 0) {
      return Status::make(Code::kIoFailure,
                          std::string("fdatasync: ") + std::strerror(errno));
    }
    return Status::OK();
  }

 private:
  int fd_;
};

Status open_file_region(const std::filesystem::path& dir, uint32_t region_id,
                        uint64_t capacity, std::unique_ptr<Region>& out) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return Status::make(Code::kSpecUnusable,
                        "cannot create " + dir.string() + ": " + ec.message());
  }

  const auto path = dir / region_file_name(region_id);
  const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) {
    return Status::make(Code::kSpecUnusable,
                        "cannot open " + path.string() + ": " +
                            std::strerror(errno));
  }

  struct stat st{};
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    return Status::make(Code::kIoFailure,
                        std::string("fstat: ") + std::strerror(errno));
  }
  const auto size = static_cast<uint64_t>(st.st_size);
  if (size == 0) {
    // Fresh region: a sparse file of exactly capacity bytes, reading as
    // zeros until written.
    if (::ftruncate(fd, static_cast<off_t>(capacity)) != 0) {
      ::close(fd);
      return Status::make(Code::kIoFailure,
                          std::string("ftruncate: ") + std::strerror(errno));
    }
  } else if (size != capacity) {
    ::close(fd);
    return Status::make(Code::kCapacityMismatch,
                        path.string() + " is " + std::to_string(size) +
                            " bytes, expected " + std::to_string(capacity));
  }

  out = std::make_unique<FileRegion>(region_id, capacity, fd);
  return Status::OK();
}

}  // namespace

Status open_region(const StorageSpec& spec, uint32_t region_id,
                   uint64_t capacity_bytes, std::unique_ptr<Region>& out) {
  if (capacity_bytes < kMinRegionCapacity) {
    return Status::make(Code::kInvalidArgument,
                        "region capacity below minimum");
  }
  switch (spec.kind) {
    case StorageSpec::Kind::kInMemory:
      out = std::make_unique<MemRegion>(region_id, capacity_bytes);
      return Status::OK();
    case StorageSpec::Kind::kDirectory:
      return open_file_region(spec.path, region_id, capacity_bytes, out);
  }
  return Status::make(Code::kInvalidArgument, "unknown storage kind");
}

}  // namespace flashmap
