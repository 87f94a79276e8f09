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
// Symmetric primitives and the initial key agreement.
//
// The cipher is an XOR stream whose keystream blocks are
// SHA-256(key || counter_be32); it is length-preserving, which the wire
// formats rely on (a wrapped 16-byte key occupies exactly 16 bytes).
// Key evolution is one-way: the next key in a chain is the first 16
// bytes of SHA-256(current key). Session keys come from a fixed-group
// Diffie-Hellman exchange.

#ifndef CAKE_CRYPTO_HPP
#define CAKE_CRYPTO_HPP

#include <array>
#include <cstdint>

#include "cake/bignum.hpp"
#include "cake/bytes.hpp"
#include "cake/rng.hpp"

namespace cake {

constexpr size_t kSymKeyLen = 16;
using SymKey = std::array<uint8_t, kSymKeyLen>;

// Maximum wrap() payload; matches the 16-bit length fields used by every
// wire structure that carries wrapped material.
constexpr size_t kMaxWrapLen = 65535;

Bytes sha256(const Bytes& data);
Bytes sha256(const uint8_t* data, size_t len);

// First 8 bytes of SHA-256(data): the slot / blob authentication tag.
constexpr size_t kTagLen = 8;
Bytes tag8(const Bytes& data);

SymKey random_key(Drbg& rng);
Bytes key_bytes(const SymKey& k);
SymKey key_from_bytes(const Bytes& b, size_t offset = 0);

// XOR stream cipher; wrap and unwrap are the same operation.
Bytes wrap(const SymKey& key, const Bytes& payload);
inline Bytes unwrap(const SymKey& key, const Bytes& payload) {
  return wrap(key, payload);
}

// Hash-chain step for the keys-not-compromised rekey path.
SymKey derive_next(const SymKey& key);

// Diffie-Hellman over the fixed 2048-bit MODP group (generator 2).
// Private exponents are 256-bit, drawn from the caller's generator.
struct DhSecret {
  mpz_class exponent;
  mpz_class public_value;
};

DhSecret dh_generate(Drbg& rng);

// Shared secret -> session key (first 16 bytes of SHA-256 of the
// fixed-width shared value). Throws kMalformedPublicValue for peers
// outside (1, p-1).
SymKey initial_key_agreement(const mpz_class& peer_public, const DhSecret& own);

}  // namespace cake

#endif  // CAKE_CRYPTO_HPP
