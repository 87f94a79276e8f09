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

#include "cake/crypto.hpp"

#include "cake/errors.hpp"
#include "doctest.h"

using namespace cake;

TEST_CASE("sha256 matches the published test vector") {
  Bytes abc = {'a', 'b', 'c'};
  CHECK(to_hex(sha256(abc)) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(to_hex(sha256(Bytes{})) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("tag8 is the truncated digest") {
  Bytes abc = {'a', 'b', 'c'};
  CHECK(to_hex(tag8(abc)) == "ba7816bf8f01cfea");
  CHECK(tag8(abc).size() == kTagLen);
}

TEST_CASE("wrap is length-preserving and self-inverse") {
  Drbg rng(5);
  SymKey k = random_key(rng);
  for (size_t len : {0u, 1u, 15u, 16u, 31u, 32u, 33u, 1000u}) {
    Bytes payload = rng.bytes(len);
    Bytes wrapped = wrap(k, payload);
    CHECK(wrapped.size() == len);
    CHECK(unwrap(k, wrapped) == payload);
    if (len >= 8) CHECK(wrapped != payload);
  }
  Bytes too_long(kMaxWrapLen + 1, 0);
  CHECK_THROWS_AS(wrap(k, too_long), Error);
  Bytes at_limit(kMaxWrapLen, 0);
  CHECK(wrap(k, at_limit).size() == kMaxWrapLen);
}

TEST_CASE("wrapping under a different key does not invert") {
  Drbg rng(6);
  SymKey k1 = random_key(rng);
  SymKey k2 = random_key(rng);
  Bytes payload = rng.bytes(24);
  CHECK(unwrap(k2, wrap(k1, payload)) != payload);
}

TEST_CASE("derive_next is the truncated hash of the key") {
  Drbg rng(7);
  SymKey k = random_key(rng);
  SymKey next = derive_next(k);
  Bytes digest = sha256(k.data(), k.size());
  CHECK(Bytes(next.begin(), next.end()) ==
        Bytes(digest.begin(), digest.begin() + kSymKeyLen));
  CHECK(derive_next(k) == next);  // deterministic
  CHECK(next != k);
}

TEST_CASE("key byte conversions") {
  Drbg rng(8);
  SymKey k = random_key(rng);
  CHECK(key_from_bytes(key_bytes(k)) == k);
  Bytes longer = rng.bytes(40);
  SymKey mid = key_from_bytes(longer, 10);
  CHECK(Bytes(mid.begin(), mid.end()) ==
        Bytes(longer.begin() + 10, longer.begin() + 26));
  CHECK_THROWS_AS(key_from_bytes(rng.bytes(10)), Error);
}

TEST_CASE("initial key agreement: both ends derive the same session key") {
  Drbg rng_a(100), rng_b(200);
  DhSecret a = dh_generate(rng_a);
  DhSecret b = dh_generate(rng_b);
  SymKey ka = initial_key_agreement(b.public_value, a);
  SymKey kb = initial_key_agreement(a.public_value, b);
  CHECK(ka == kb);

  DhSecret c = dh_generate(rng_a);
  CHECK(initial_key_agreement(c.public_value, a) != ka);
}

TEST_CASE("initial key agreement rejects degenerate public values") {
  Drbg rng(300);
  DhSecret own = dh_generate(rng);
  CHECK_THROWS_AS(initial_key_agreement(0, own), Error);
  CHECK_THROWS_AS(initial_key_agreement(1, own), Error);
  CHECK_THROWS_AS(initial_key_agreement(-5, own), Error);
  // p - 1 and p itself are outside the allowed open interval; recover p
  // from a legitimate exchange being impossible, use a huge value.
  mpz_class huge = mpz_class(1) << 2048;
  CHECK_THROWS_AS(initial_key_agreement(huge, own), Error);
}

TEST_CASE("deterministic generator reproduces and forks independently") {
  Drbg a(42), b(42);
  CHECK(a.bytes(32) == b.bytes(32));
  CHECK(a.next_u64() == b.next_u64());

  Drbg parent(42);
  Drbg f1 = parent.fork("x");
  parent.bytes(100);  // consuming the parent must not shift the fork
  Drbg f2 = parent.fork("x");
  CHECK(f1.bytes(16) == f2.bytes(16));
  CHECK(Drbg(42).fork("x").bytes(16) != Drbg(42).fork("y").bytes(16));

  Drbg c(1);
  for (int i = 0; i < 1000; ++i) {
    uint64_t v = c.below(17);
    CHECK(v < 17);
  }
}
