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

#include <string>

#include "cake/errors.hpp"
#include "cake/rng.hpp"
#include "doctest.h"

using namespace cake;

namespace {

Err code_of(const Bytes& wire) {
  try {
    decode(wire);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected decode to throw");
  return Err::kTruncated;
}

KeysSubstructure sample_sub() {
  KeysSubstructure s;
  s.key_id = TreeAddress(0x1000);
  s.crt_blob = {0xaa, 0xbb};
  s.m_blob = {0xcc};
  return s;
}

}  // namespace

TEST_CASE("golden encodings, hand-assembled") {
  GsaPolicy pol;
  pol.group_id = 0x11223344;
  pol.kek_algorithm = kKekAlgCake;
  pol.lifetime_s = 86400;
  CHECK(to_hex(encode(pol)) == "0611223344000200015180");

  KdPayload notice;
  notice.key_type = KdType::kRekeyNotice;
  notice.group_id = 7;
  notice.epoch = 2;
  CHECK(to_hex(encode(notice)) == "050300000007000200000000");

  KdPayload kd;
  kd.key_type = KdType::kGtekUnderGkek;
  kd.group_id = 1;
  kd.epoch = 3;
  for (int i = 0; i < 16; ++i) kd.material.push_back(static_cast<uint8_t>(i));
  CHECK(to_hex(encode(kd)) ==
        "050200000001000300000010000102030405060708090a0b0c0d0e0f");

  ReaddressArray ra;
  ra.moves.push_back({TreeAddress(0xc001), TreeAddress(0x1000)});
  CHECK(to_hex(encode(ra)) == "03000001c0011000");

  DownloadArray da;
  da.keys.push_back(sample_sub());
  CHECK(to_hex(encode(da)) == "010000011000000000020001aabbcc");

  UpdateArray ua;
  ua.keys.push_back(sample_sub());
  CHECK(to_hex(encode(ua)) == "020000011000000000020001aabbcc");

  LeaveArray la;
  la.leaves = {TreeAddress(0x1400), TreeAddress(0x1000), TreeAddress(0)};
  la.keys.push_back(sample_sub());
  CHECK(to_hex(encode(la)) ==
        "0400000100031400100000001000000000020001aabbcc");
}

TEST_CASE("golden decodings match the structures") {
  auto pol = std::get<GsaPolicy>(decode(from_hex("0611223344000200015180")));
  CHECK(pol.group_id == 0x11223344);
  CHECK(pol.kek_algorithm == kKekAlgCake);
  CHECK(pol.lifetime_s == 86400);

  auto kd = std::get<KdPayload>(decode(from_hex("050300000007000200000000")));
  CHECK(kd.key_type == KdType::kRekeyNotice);
  CHECK(kd.group_id == 7);
  CHECK(kd.epoch == 2);
  CHECK(kd.material.empty());

  auto la = std::get<LeaveArray>(
      decode(from_hex("0400000100031400100000001000000000020001aabbcc")));
  REQUIRE(la.leaves.size() == 3);
  CHECK(la.leaves[0] == TreeAddress(0x1400));
  CHECK(la.leaves[2] == TreeAddress(0));
  REQUIRE(la.keys.size() == 1);
  CHECK(la.keys[0] == sample_sub());
}

TEST_CASE("measure matches encode for every payload shape") {
  std::vector<CakePayload> ps;
  ps.push_back(GsaPolicy{});
  ps.push_back(KdPayload{});
  KdPayload with_material;
  with_material.material.assign(32, 0x5a);
  ps.push_back(with_material);
  ps.push_back(ReaddressArray{});
  DownloadArray da;
  da.keys.push_back(sample_sub());
  da.keys.push_back(sample_sub());
  ps.push_back(da);
  LeaveArray la;
  la.leaves = {TreeAddress(0x2000)};
  la.keys.push_back(sample_sub());
  ps.push_back(la);
  for (const auto& p : ps) CHECK(measure(p) == encode(p).size());
}

TEST_CASE("decode rejects malformed wire bytes") {
  CHECK(code_of({}) == Err::kTruncated);
  CHECK(code_of({0x00}) == Err::kBadKind);
  CHECK(code_of({0x07}) == Err::kBadKind);
  CHECK(code_of({0xff}) == Err::kBadKind);

  Bytes good = encode(GsaPolicy{});
  Bytes cut(good.begin(), good.end() - 1);
  CHECK(code_of(cut) == Err::kTruncated);

  Bytes padded = good;
  padded.push_back(0x00);
  CHECK(code_of(padded) == Err::kTrailingBytes);

  // Reserved bytes must be zero at every layer.
  CHECK(code_of(from_hex("0301000000")) == Err::kBadReserved);  // array
  Bytes sub_reserved = from_hex("010000011000990000020001aabbcc");
  CHECK(code_of(sub_reserved) == Err::kBadReserved);
  Bytes kd_reserved = from_hex("050300000007000200010000");
  CHECK(code_of(kd_reserved) == Err::kBadReserved);

  // KD key types outside the registry.
  CHECK(code_of(from_hex("050000000007000200000000")) == Err::kBadKind);
  CHECK(code_of(from_hex("050c00000007000200000000")) == Err::kBadKind);

  // Counts promising more content than present.
  CHECK(code_of(from_hex("03000002c0011000")) == Err::kTruncated);
  CHECK(code_of(from_hex("0100000210000000000200 01aabbcc")) ==
        Err::kTruncated);
  // KD length field beyond the buffer.
  CHECK(code_of(from_hex("0502000000010003000000 11 000102030405060708090a0b"
                         "0c0d0e0f")) == Err::kTruncated);
}

TEST_CASE("encode rejects counts and blobs beyond 16 bits") {
  ReaddressArray ra;
  ra.moves.assign(65536, {TreeAddress(0x1000), TreeAddress(0x2000)});
  CHECK_THROWS_AS((void)encode(ra), Error);

  KeysSubstructure s;
  s.key_id = TreeAddress(0x1000);
  s.crt_blob.assign(65536, 0);
  DownloadArray da;
  da.keys.push_back(s);
  CHECK_THROWS_AS((void)encode(da), Error);

  KdPayload kd;
  kd.material.assign(65536, 0);
  CHECK_THROWS_AS((void)encode(kd), Error);
}

TEST_CASE("sequences concatenate and split cleanly") {
  std::vector<CakePayload> msg;
  GsaPolicy pol;
  pol.group_id = 9;
  msg.push_back(pol);
  ReaddressArray ra;
  ra.moves.push_back({TreeAddress(0xc000), TreeAddress(0x3000)});
  msg.push_back(ra);
  KdPayload kd;
  kd.key_type = KdType::kGtekUnderGkek;
  kd.group_id = 9;
  kd.epoch = 1;
  kd.material.assign(16, 0x42);
  msg.push_back(kd);

  Bytes wire = encode_sequence(msg);
  CHECK(wire.size() == measure(msg[0]) + measure(msg[1]) + measure(msg[2]));
  auto back = decode_sequence(wire);
  REQUIRE(back.size() == 3);
  CHECK(back == msg);

  CHECK(decode_sequence({}).empty());
  Bytes cut(wire.begin(), wire.end() - 1);
  CHECK_THROWS_AS((void)decode_sequence(cut), Error);
}

TEST_CASE("randomized round-trips") {
  Drbg rng(20260815);
  auto rnd_blob = [&](size_t max_len) {
    return rng.bytes(rng.below(max_len + 1));
  };
  auto rnd_addr = [&] {
    return TreeAddress(static_cast<uint16_t>(rng.next_u64() & 0xffff));
  };
  auto rnd_sub = [&] {
    KeysSubstructure s;
    s.key_id = rnd_addr();
    s.crt_blob = rnd_blob(80);
    s.m_blob = rnd_blob(48);
    return s;
  };

  for (int iter = 0; iter < 1000; ++iter) {
    CakePayload p;
    switch (rng.below(6)) {
      case 0: {
        DownloadArray a;
        size_t n = rng.below(5);
        for (size_t i = 0; i < n; ++i) a.keys.push_back(rnd_sub());
        p = a;
        break;
      }
      case 1: {
        UpdateArray a;
        size_t n = rng.below(5);
        for (size_t i = 0; i < n; ++i) a.keys.push_back(rnd_sub());
        p = a;
        break;
      }
      case 2: {
        ReaddressArray a;
        size_t n = rng.below(6);
        for (size_t i = 0; i < n; ++i) a.moves.push_back({rnd_addr(), rnd_addr()});
        p = a;
        break;
      }
      case 3: {
        LeaveArray a;
        size_t nl = rng.below(6);
        for (size_t i = 0; i < nl; ++i) a.leaves.push_back(rnd_addr());
        size_t nk = rng.below(4);
        for (size_t i = 0; i < nk; ++i) a.keys.push_back(rnd_sub());
        p = a;
        break;
      }
      case 4: {
        KdPayload kd;
        kd.key_type = static_cast<KdType>(1 + rng.below(11));
        kd.group_id = static_cast<uint32_t>(rng.next_u64());
        kd.epoch = static_cast<uint16_t>(rng.next_u64());
        kd.material = rnd_blob(64);
        p = kd;
        break;
      }
      default: {
        GsaPolicy pol;
        pol.group_id = static_cast<uint32_t>(rng.next_u64());
        pol.kek_algorithm = static_cast<uint16_t>(rng.below(3));
        pol.lifetime_s = static_cast<uint32_t>(rng.next_u64());
        p = pol;
        break;
      }
    }
    Bytes wire = encode(p);
    CHECK(wire.size() == measure(p));
    CHECK(decode(wire) == p);
  }
}
