// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

namespace flashmap {

// Error taxonomy for the whole engine. Codes map 1:1 onto CLI exit codes
// (see tools/flashmap.cpp).
enum class Code : uint8_t {
  kOk = 0,
  kSpecUnusable,
  kCapacityMismatch,
  kOutOfBounds,
  kIoFailure,
  kKeyTooLarge,
  kValueTooLarge,
  kCorruptRecord,
  kBadAddress,
  kStrandFull,
  kKeyNotFound,
  kExhausted,
  kCorruptSnapshot,
  kEmpty,
  kCorruptStore,
  kNameMismatch,
  kInvalidHandle,
  kReplaceMissing,
  kDeleteMissing,
  kSpareBusy,
  kInvalidArgument,
  kPhaseOrderViolation,
  kOutOfMemory,
};

std::string_view code_name(Code code);

class [[nodiscard]] Status {
 public:
  Status() = default;

  static Status OK() { return {}; }
  static Status make(Code code, std::string msg = {}) {
    return Status(code, std::move(msg));
  }

  bool ok() const { return code_ == Code::kOk; }
  bool is(Code c) const { return code_ == c; }
  Code code() const { return code_; }
  const std::string& message() const { return msg_; }
  std::string to_string() const;

 private:
  Status(Code code, std::string msg) : code_(code), msg_(std::move(msg)) {}

  Code code_ = Code::kOk;
  std::string msg_;
};

}  // namespace flashmap
