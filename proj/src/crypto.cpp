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

#include <openssl/evp.h>

#include <cstring>

#include "cake/errors.hpp"

namespace cake {

namespace {

// RFC 3526 group 14 (2048-bit MODP), generator 2.
const char* kModp2048Hex =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

const mpz_class& modp_prime() {
  static const mpz_class p(kModp2048Hex, 16);
  return p;
}

constexpr size_t kModpBytes = 256;
constexpr size_t kDhExponentBits = 256;

}  // namespace

Bytes sha256(const uint8_t* data, size_t len) {
  Bytes out(32);
  unsigned int out_len = 0;
  if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) !=
          1 ||
      out_len != out.size()) {
    fail(Err::kEntropyFailure, "sha256 digest failed");
  }
  return out;
}

Bytes sha256(const Bytes& data) { return sha256(data.data(), data.size()); }

Bytes tag8(const Bytes& data) {
  Bytes d = sha256(data);
  d.resize(kTagLen);
  return d;
}

SymKey random_key(Drbg& rng) {
  SymKey k{};
  rng.fill(k.data(), k.size());
  return k;
}

Bytes key_bytes(const SymKey& k) { return Bytes(k.begin(), k.end()); }

SymKey key_from_bytes(const Bytes& b, size_t offset) {
  if (b.size() < offset + kSymKeyLen) {
    fail(Err::kTruncated, "key_from_bytes: source too short");
  }
  SymKey k{};
  std::memcpy(k.data(), b.data() + offset, kSymKeyLen);
  return k;
}

Bytes wrap(const SymKey& key, const Bytes& payload) {
  if (payload.size() > kMaxWrapLen) {
    fail(Err::kPayloadTooLong, "wrap: payload exceeds 65535 bytes");
  }
  Bytes out(payload.size());
  Bytes block_input(key.begin(), key.end());
  block_input.resize(kSymKeyLen + 4);
  for (size_t off = 0, counter = 0; off < payload.size();
       off += 32, ++counter) {
    block_input[kSymKeyLen + 0] = static_cast<uint8_t>(counter >> 24);
    block_input[kSymKeyLen + 1] = static_cast<uint8_t>(counter >> 16);
    block_input[kSymKeyLen + 2] = static_cast<uint8_t>(counter >> 8);
    block_input[kSymKeyLen + 3] = static_cast<uint8_t>(counter);
    Bytes ks = sha256(block_input);
    size_t n = payload.size() - off < 32 ? payload.size() - off : 32;
    for (size_t i = 0; i < n; ++i) {
      out[off + i] = static_cast<uint8_t>(payload[off + i] ^ ks[i]);
    }
  }
  return out;
}

SymKey derive_next(const SymKey& key) {
  Bytes d = sha256(key.data(), key.size());
  return key_from_bytes(d);
}

DhSecret dh_generate(Drbg& rng) {
  DhSecret s;
  s.exponent = bn::random_bits(rng, kDhExponentBits);
  s.public_value = bn::powm(2, s.exponent, modp_prime());
  return s;
}

SymKey initial_key_agreement(const mpz_class& peer_public,
                             const DhSecret& own) {
  const mpz_class& p = modp_prime();
  if (peer_public <= 1 || peer_public >= p - 1) {
    fail(Err::kMalformedPublicValue, "peer value outside (1, p-1)");
  }
  mpz_class shared = bn::powm(peer_public, own.exponent, p);
  Bytes fixed = bn::to_bytes(shared, kModpBytes);
  return key_from_bytes(sha256(fixed));
}

}  // namespace cake
