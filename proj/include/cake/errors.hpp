// Copyright 2026 The cakekm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CAKE_ERRORS_HPP
#define CAKE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cake {

enum class Err {
  // crt_lock
  kNotCoprime,
  kNotPairwiseCoprime,
  kResidueOutOfRange,
  kEmptyEntries,
  kBadBitLength,
  kEntropyFailure,
  // crypto
  kPayloadTooLong,
  kMalformedPublicValue,
  kAuthTagMismatch,
  // key_tree
  kTreeFull,
  kDepthExceeded,
  kDuplicateMember,
  kUnknownMember,
  kUnknownAddress,
  kAddressCollision,
  kBadAddress,
  // messages
  kTruncated,
  kBadReserved,
  kBadKind,
  kTrailingBytes,
  kOversize,
  // controller / client
  kAuthFailed,
  kUnknownGroup,
  kNotMember,
  kOverCapacity,
  kEmptySubgroup,
  kInvalidPartition,
  kStaleEpoch,
  // transport
  kUnknownEndpoint,
  kNonTermination,
};

inline const char* err_name(Err e) {
  switch (e) {
    case Err::kNotCoprime: return "not_coprime";
    case Err::kNotPairwiseCoprime: return "not_pairwise_coprime";
    case Err::kResidueOutOfRange: return "residue_out_of_range";
    case Err::kEmptyEntries: return "empty_entries";
    case Err::kBadBitLength: return "bad_bit_length";
    case Err::kEntropyFailure: return "entropy_failure";
    case Err::kPayloadTooLong: return "payload_too_long";
    case Err::kMalformedPublicValue: return "malformed_public_value";
    case Err::kAuthTagMismatch: return "auth_tag_mismatch";
    case Err::kTreeFull: return "tree_full";
    case Err::kDepthExceeded: return "depth_exceeded";
    case Err::kDuplicateMember: return "duplicate_member";
    case Err::kUnknownMember: return "unknown_member";
    case Err::kUnknownAddress: return "unknown_address";
    case Err::kAddressCollision: return "address_collision";
    case Err::kBadAddress: return "bad_address";
    case Err::kTruncated: return "truncated";
    case Err::kBadReserved: return "bad_reserved";
    case Err::kBadKind: return "bad_kind";
    case Err::kTrailingBytes: return "trailing_bytes";
    case Err::kOversize: return "oversize";
    case Err::kAuthFailed: return "auth_failed";
    case Err::kUnknownGroup: return "unknown_group";
    case Err::kNotMember: return "not_member";
    case Err::kOverCapacity: return "over_capacity";
    case Err::kEmptySubgroup: return "empty_subgroup";
    case Err::kInvalidPartition: return "invalid_partition";
    case Err::kStaleEpoch: return "stale_epoch";
    case Err::kUnknownEndpoint: return "unknown_endpoint";
    case Err::kNonTermination: return "non_termination";
  }
  return "unknown";
}

// Single exception type for contract violations across the library. The
// code pins which precondition or invariant failed; the message adds
// context for test diagnostics.
class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what),
        code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace cake

#endif  // CAKE_ERRORS_HPP
