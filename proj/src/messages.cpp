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

#include "cake/messages.hpp"

#include "cake/errors.hpp"

namespace cake {

namespace {

void require(bool ok, Err code, const char* what) {
  if (!ok) fail(code, what);
}

uint16_t checked_u16(size_t v, const char* what) {
  require(v <= 0xffff, Err::kOversize, what);
  return static_cast<uint16_t>(v);
}

void encode_sub(Bytes& out, const KeysSubstructure& s) {
  put_u16(out, s.key_id.code());
  put_u16(out, 0);
  put_u16(out, checked_u16(s.crt_blob.size(), "crt blob length"));
  put_u16(out, checked_u16(s.m_blob.size(), "m blob length"));
  put_bytes(out, s.crt_blob);
  put_bytes(out, s.m_blob);
}

KeysSubstructure decode_sub(ByteReader& r) {
  require(r.remaining() >= kKeysSubHeaderLen, Err::kTruncated,
          "keys substructure header");
  KeysSubstructure s;
  s.key_id = TreeAddress(r.u16());
  require(r.u16() == 0, Err::kBadReserved, "keys substructure reserved");
  size_t size_crt = r.u16();
  size_t size_m = r.u16();
  require(r.remaining() >= size_crt + size_m, Err::kTruncated,
          "keys substructure blobs");
  s.crt_blob = r.take(size_crt);
  s.m_blob = r.take(size_m);
  return s;
}

size_t sub_size(const KeysSubstructure& s) {
  return kKeysSubHeaderLen + s.crt_blob.size() + s.m_blob.size();
}

void encode_array_header(Bytes& out, PayloadKind kind, size_t count) {
  put_u8(out, static_cast<uint8_t>(kind));
  put_u8(out, 0);
  put_u16(out, checked_u16(count, "array count"));
}

// Decodes one payload starting at the reader's position.
CakePayload decode_one(ByteReader& r) {
  require(r.remaining() >= 1, Err::kTruncated, "payload kind");
  uint8_t kind = r.u8();
  switch (kind) {
    case static_cast<uint8_t>(PayloadKind::kDownloadArray):
    case static_cast<uint8_t>(PayloadKind::kUpdateArray): {
      require(r.remaining() >= kArrayHeaderLen - 1, Err::kTruncated,
              "array header");
      require(r.u8() == 0, Err::kBadReserved, "array reserved");
      size_t count = r.u16();
      std::vector<KeysSubstructure> keys;
      keys.reserve(count);
      for (size_t i = 0; i < count; ++i) keys.push_back(decode_sub(r));
      if (kind == static_cast<uint8_t>(PayloadKind::kDownloadArray)) {
        return DownloadArray{std::move(keys)};
      }
      return UpdateArray{std::move(keys)};
    }
    case static_cast<uint8_t>(PayloadKind::kReaddressArray): {
      require(r.remaining() >= kArrayHeaderLen - 1, Err::kTruncated,
              "readdress header");
      require(r.u8() == 0, Err::kBadReserved, "readdress reserved");
      size_t count = r.u16();
      require(r.remaining() >= count * 4, Err::kTruncated, "readdress moves");
      ReaddressArray a;
      a.moves.reserve(count);
      for (size_t i = 0; i < count; ++i) {
        TreeAddress from(r.u16());
        TreeAddress to(r.u16());
        a.moves.emplace_back(from, to);
      }
      return a;
    }
    case static_cast<uint8_t>(PayloadKind::kLeaveArray): {
      require(r.remaining() >= kLeaveArrayHeaderLen - 1, Err::kTruncated,
              "leave header");
      require(r.u8() == 0, Err::kBadReserved, "leave reserved");
      size_t n_keys = r.u16();
      size_t n_leaves = r.u16();
      require(r.remaining() >= n_leaves * 2, Err::kTruncated,
              "marked addresses");
      LeaveArray a;
      a.leaves.reserve(n_leaves);
      for (size_t i = 0; i < n_leaves; ++i) a.leaves.emplace_back(r.u16());
      a.keys.reserve(n_keys);
      for (size_t i = 0; i < n_keys; ++i) a.keys.push_back(decode_sub(r));
      return a;
    }
    case static_cast<uint8_t>(PayloadKind::kKd): {
      require(r.remaining() >= kKdHeaderLen - 1, Err::kTruncated,
              "kd header");
      KdPayload p;
      p.key_type = static_cast<KdType>(r.u8());
      require(p.key_type >= KdType::kGroupPairUnderGkek &&
                  p.key_type <= KdType::kGroupDissolve,
              Err::kBadKind, "kd key type");
      p.group_id = r.u32();
      p.epoch = r.u16();
      require(r.u16() == 0, Err::kBadReserved, "kd reserved");
      size_t length = r.u16();
      require(r.remaining() >= length, Err::kTruncated, "kd material");
      p.material = r.take(length);
      return p;
    }
    case static_cast<uint8_t>(PayloadKind::kGsaPolicy): {
      require(r.remaining() >= kPolicyLen - 1, Err::kTruncated, "policy");
      GsaPolicy p;
      p.group_id = r.u32();
      p.kek_algorithm = r.u16();
      p.lifetime_s = r.u32();
      return p;
    }
    default:
      fail(Err::kBadKind, "unknown payload kind");
  }
}

}  // namespace

Bytes encode(const CakePayload& p) {
  Bytes out;
  std::visit(
      [&out](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DownloadArray>) {
          encode_array_header(out, PayloadKind::kDownloadArray,
                              v.keys.size());
          for (const auto& s : v.keys) encode_sub(out, s);
        } else if constexpr (std::is_same_v<T, UpdateArray>) {
          encode_array_header(out, PayloadKind::kUpdateArray, v.keys.size());
          for (const auto& s : v.keys) encode_sub(out, s);
        } else if constexpr (std::is_same_v<T, ReaddressArray>) {
          encode_array_header(out, PayloadKind::kReaddressArray,
                              v.moves.size());
          for (const auto& [from, to] : v.moves) {
            put_u16(out, from.code());
            put_u16(out, to.code());
          }
        } else if constexpr (std::is_same_v<T, LeaveArray>) {
          put_u8(out, static_cast<uint8_t>(PayloadKind::kLeaveArray));
          put_u8(out, 0);
          put_u16(out, checked_u16(v.keys.size(), "leave key count"));
          put_u16(out, checked_u16(v.leaves.size(), "leave mark count"));
          for (TreeAddress a : v.leaves) put_u16(out, a.code());
          for (const auto& s : v.keys) encode_sub(out, s);
        } else if constexpr (std::is_same_v<T, KdPayload>) {
          put_u8(out, static_cast<uint8_t>(PayloadKind::kKd));
          put_u8(out, static_cast<uint8_t>(v.key_type));
          put_u32(out, v.group_id);
          put_u16(out, v.epoch);
          put_u16(out, 0);
          put_u16(out, checked_u16(v.material.size(), "kd material length"));
          put_bytes(out, v.material);
        } else if constexpr (std::is_same_v<T, GsaPolicy>) {
          put_u8(out, static_cast<uint8_t>(PayloadKind::kGsaPolicy));
          put_u32(out, v.group_id);
          put_u16(out, v.kek_algorithm);
          put_u32(out, v.lifetime_s);
        }
      },
      p);
  return out;
}

size_t measure(const CakePayload& p) {
  return std::visit(
      [](const auto& v) -> size_t {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, DownloadArray> ||
                      std::is_same_v<T, UpdateArray>) {
          size_t n = kArrayHeaderLen;
          for (const auto& s : v.keys) n += sub_size(s);
          return n;
        } else if constexpr (std::is_same_v<T, ReaddressArray>) {
          return kArrayHeaderLen + 4 * v.moves.size();
        } else if constexpr (std::is_same_v<T, LeaveArray>) {
          size_t n = kLeaveArrayHeaderLen + 2 * v.leaves.size();
          for (const auto& s : v.keys) n += sub_size(s);
          return n;
        } else if constexpr (std::is_same_v<T, KdPayload>) {
          return kKdHeaderLen + v.material.size();
        } else {
          return kPolicyLen;
        }
      },
      p);
}

CakePayload decode(const Bytes& b) {
  ByteReader r(b);
  CakePayload p = decode_one(r);
  require(r.done(), Err::kTrailingBytes, "bytes after payload");
  return p;
}

std::vector<CakePayload> decode_sequence(const Bytes& b) {
  ByteReader r(b);
  std::vector<CakePayload> out;
  while (!r.done()) out.push_back(decode_one(r));
  return out;
}

Bytes encode_sequence(const std::vector<CakePayload>& ps) {
  Bytes out;
  for (const auto& p : ps) put_bytes(out, encode(p));
  return out;
}

}  // namespace cake
