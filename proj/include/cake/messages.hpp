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
//
// Payload wire formats. All fields big-endian; every payload is
// self-delimiting, so a message is a plain concatenation of payloads
// with zero envelope overhead.
//
// Keys substructure (8-byte fixed header + two blobs):
//   key_id:2  reserved:2(=0)  size_crt:2  size_m:2  crt_blob  m_blob
// The crt blob is a serialized lock (value padded to the modulus-product
// length; size_crt is its on-wire length field). The m blob is the
// delivered pair's modulus wrapped under the delivered key; empty for
// root-addressed substructures, whose modulus is never used.
//
// Arrays (4-byte header: kind:1 reserved:1 count:2)
//   download / update:  header + count * KeysSubstructure
//   readdress:          header + count * (old:2, new:2)
// Leave array (6-byte header: kind:1 reserved:1 n_keys:2 n_leaves:2)
//   header + n_leaves * marked_address:2 + n_keys * KeysSubstructure
// KD payload (12-byte header + material)
//   kind:1 key_type:1 group_id:4 epoch:2 reserved:2 length:2
// Policy payload (11 bytes)
//   kind:1 group_id:4 kek_algorithm:2 lifetime_s:4

#ifndef CAKE_MESSAGES_HPP
#define CAKE_MESSAGES_HPP

#include <cstdint>
#include <variant>
#include <vector>

#include "cake/bytes.hpp"
#include "cake/key_tree.hpp"

namespace cake {

enum class PayloadKind : uint8_t {
  kDownloadArray = 0x01,
  kUpdateArray = 0x02,
  kReaddressArray = 0x03,
  kLeaveArray = 0x04,
  kKd = 0x05,
  kGsaPolicy = 0x06,
};

// Header size constants; these three values produce every header figure
// reported by the benchmark.
constexpr size_t kArrayHeaderLen = 4;
constexpr size_t kKeysSubHeaderLen = 8;
constexpr size_t kKdHeaderLen = 12;
constexpr size_t kLeaveArrayHeaderLen = kArrayHeaderLen + 2;
constexpr size_t kPolicyLen = 11;

// KD payload roles. The wrapping key for each role is fixed by the
// protocol: group pairs under the current GKEK (rekey / merge), under
// the personal key (join unicast), or under the session key
// (registration); the TEK under the GKEK established by the same
// message's lock.
enum class KdType : uint8_t {
  kGroupPairUnderGkek = 0x01,   // gkek' || gtek' wrapped under current gkek
  kGtekUnderGkek = 0x02,        // gtek' wrapped under the new gkek
  kRekeyNotice = 0x03,          // no material: derive both keys forward
  kGroupPairUnderPersonal = 0x04,
  kPersonalPair = 0x05,         // m(41) || key(16) || address(2), session-wrapped
  kDhInit = 0x06,
  kDhResp = 0x07,
  kAuthRequest = 0x08,          // credential wrapped under session key
  kAuthFail = 0x09,
  kKeyUpdate = 0x0a,            // epoch sync marker for deferred path repair
  kGroupDissolve = 0x0b,
};

// KEK management algorithm registry carried by the policy payload.
constexpr uint16_t kKekAlgNone = 0;
constexpr uint16_t kKekAlgLkh = 1;
constexpr uint16_t kKekAlgCake = 2;

struct KeysSubstructure {
  TreeAddress key_id;
  Bytes crt_blob;
  Bytes m_blob;

  bool operator==(const KeysSubstructure&) const = default;
};

struct DownloadArray {
  std::vector<KeysSubstructure> keys;
  bool operator==(const DownloadArray&) const = default;
};

struct UpdateArray {
  std::vector<KeysSubstructure> keys;
  bool operator==(const UpdateArray&) const = default;
};

struct ReaddressArray {
  std::vector<std::pair<TreeAddress, TreeAddress>> moves;
  bool operator==(const ReaddressArray&) const = default;
};

struct LeaveArray {
  std::vector<TreeAddress> leaves;  // marked addresses
  std::vector<KeysSubstructure> keys;
  bool operator==(const LeaveArray&) const = default;
};

struct KdPayload {
  KdType key_type = KdType::kRekeyNotice;
  uint32_t group_id = 0;
  uint16_t epoch = 0;
  Bytes material;
  bool operator==(const KdPayload&) const = default;
};

struct GsaPolicy {
  uint32_t group_id = 0;
  uint16_t kek_algorithm = kKekAlgCake;
  uint32_t lifetime_s = 86400;
  bool operator==(const GsaPolicy&) const = default;
};

using CakePayload = std::variant<DownloadArray, UpdateArray, ReaddressArray,
                                 LeaveArray, KdPayload, GsaPolicy>;

// Deterministic serialization. Throws kOversize when a count or blob
// exceeds its 16-bit field.
Bytes encode(const CakePayload& p);
// Exact size of encode(p) without building it.
size_t measure(const CakePayload& p);
// Rejects truncation, nonzero reserved fields, unknown kinds, and
// trailing bytes.
CakePayload decode(const Bytes& b);
// A message is a concatenation of payloads.
std::vector<CakePayload> decode_sequence(const Bytes& b);
Bytes encode_sequence(const std::vector<CakePayload>& ps);

}  // namespace cake

#endif  // CAKE_MESSAGES_HPP
