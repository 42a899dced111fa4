// Copyright 2026 The flashmap Authors
// SPDX-License-Identifier: Apache-2.0

#include "flashmap/status.hpp"

namespace flashmap {

std::string_view code_name(Code code) {
  switch (code) {
    case Code::kOk: return "ok";
    case Code::kSpecUnusable: return "spec_unusable";
    case Code::kCapacityMismatch: return "capacity_mismatch";
    case Code::kOutOfBounds: return "out_of_bounds";
    case Code::kIoFailure: return "io_failure";
    case Code::kKeyTooLarge: return "key_too_large";
    case Code::kValueTooLarge: return "value_too_large";
    case Code::kCorruptRecord: return "corrupt_record";
    case Code::kBadAddress: return "bad_address";
    case Code::kStrandFull: return "strand_full";
    case Code::kKeyNotFound: return "key_not_found";
    case Code::kExhausted: return "exhausted";
    case Code::kCorruptSnapshot: return "corrupt_snapshot";
    case Code::kEmpty: return "empty";
    case Code::kCorruptStore: return "corrupt_store";
    case Code::kNameMismatch: return "name_mismatch";
    case Code::kInvalidHandle: return "invalid_handle";
    case Code::kReplaceMissing: return "replace_missing";
    case Code::kDeleteMissing: return "delete_missing";
    case Code::kSpareBusy: return "spare_busy";
    case Code::kInvalidArgument: return "invalid_argument";
    case Code::kPhaseOrderViolation: return "phase_order_violation";
    case Code::kOutOfMemory: return "out_of_memory";
  }
  return "unknown";
}

std::string Status::to_string() const {
  std::string s(code_name(code_));
  if (!msg_.empty()) {
    s += ": ";
    s += msg_;
  }
  return s;
}

}  // namespace flashmap
