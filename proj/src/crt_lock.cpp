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

#include "cake/crt_lock.hpp"

#include "cake/errors.hpp"

namespace cake {

mpz_class mod_inverse(const mpz_class& a, const mpz_class& m) {
  mpz_class inv;
  if (mpz_invert(inv.get_mpz_t(), a.get_mpz_t(), m.get_mpz_t()) == 0) {
    fail(Err::kNotCoprime, "no modular inverse");
  }
  return inv;
}

LockMX build_lock(
    const std::vector<std::pair<mpz_class, mpz_class>>& entries) {
  if (entries.empty()) fail(Err::kEmptyEntries, "lock over zero recipients");

  mpz_class product = 1;
  for (const auto& [m, r] : entries) {
    if (m <= 1) fail(Err::kNotPairwiseCoprime, "modulus must exceed 1");
    if (r < 0 || r >= m) fail(Err::kResidueOutOfRange, "residue not in [0,m)");
    product *= m;
  }
  // Pairwise coprimality via n gcds: gcd(m_i, P/m_i) == 1 iff m_i shares
  // no factor with any other modulus.
  mpz_class rest, g;
  for (const auto& [m, r] : entries) {
    mpz_divexact(rest.get_mpz_t(), product.get_mpz_t(), m.get_mpz_t());
    mpz_gcd(g.get_mpz_t(), m.get_mpz_t(), rest.get_mpz_t());
    if (g != 1) fail(Err::kNotPairwiseCoprime, "moduli share a factor");
  }

  mpz_class x = 0;
  for (const auto& [m, r] : entries) {
    mpz_divexact(rest.get_mpz_t(), product.get_mpz_t(), m.get_mpz_t());
    x += r * rest * mod_inverse(rest, m);
  }
  x %= product;

  LockMX lock;
  lock.lock_value = x;
  lock.element_count = static_cast<uint16_t>(entries.size());
  size_t blen = (bn::bit_length(product) + 7) / 8;
  if (blen > 65535) fail(Err::kOversize, "lock wider than a 16-bit length");
  lock.byte_length = static_cast<uint16_t>(blen);
  return lock;
}

mpz_class solve_lock(const LockMX& lock, const mpz_class& m) {
  mpz_class r;
  mpz_mod(r.get_mpz_t(), lock.lock_value.get_mpz_t(), m.get_mpz_t());
  return r;
}

Bytes lock_to_bytes(const LockMX& lock) {
  return bn::to_bytes(lock.lock_value, lock.byte_length);
}

LockMX lock_from_bytes(const Bytes& b, uint16_t element_count) {
  LockMX lock;
  lock.lock_value = bn::from_bytes(b);
  lock.element_count = element_count;
  lock.byte_length = static_cast<uint16_t>(b.size());
  return lock;
}

Modulus ModulusGenerator::generate(size_t bit_length) {
  if (bit_length < 16) fail(Err::kBadBitLength, "modulus class too narrow");
  // Candidates are odd with the top bit set, so every accepted prime has
  // exactly bit_length bits. 40 Miller-Rabin rounds keep the error below
  // 2^-80 per modulus.
  for (int attempts = 0; attempts < 100000; ++attempts) {
    mpz_class c = bn::random_bits(rng_, bit_length);
    mpz_setbit(c.get_mpz_t(), 0);
    if (mpz_probab_prime_p(c.get_mpz_t(), 40) == 0) continue;
    if (!issued_.insert(c).second) continue;  // already issued, redraw
    return Modulus{c};
  }
  fail(Err::kEntropyFailure, "prime search did not terminate");
}

KeyPair ModulusGenerator::generate_pair(size_t bit_length) {
  KeyPair kp;
  kp.m = generate(bit_length);
  kp.key = random_key(rng_);
  return kp;
}

LockMX seal_to_group(const std::vector<KeyPair>& recipients,
                     const Bytes& payload) {
  if (payload.size() + kTagLen > kSlotMaxBytes) {
    fail(Err::kPayloadTooLong, "slot exceeds the modulus-class headroom");
  }
  Bytes tag = tag8(payload);
  std::vector<std::pair<mpz_class, mpz_class>> entries;
  entries.reserve(recipients.size());
  for (const KeyPair& kp : recipients) {
    Bytes slot = wrap(kp.key, payload);
    put_bytes(slot, tag);
    entries.emplace_back(kp.m.value, bn::from_bytes(slot));
  }
  return build_lock(entries);
}

std::optional<Bytes> open_slot(const LockMX& lock, const KeyPair& recipient,
                               size_t payload_len) {
  size_t slot_len = payload_len + kTagLen;
  mpz_class r = solve_lock(lock, recipient.m.value);
  if ((bn::bit_length(r) + 7) / 8 > slot_len) return std::nullopt;
  Bytes slot = bn::to_bytes(r, slot_len);
  Bytes wrapped(slot.begin(), slot.begin() + payload_len);
  Bytes tag(slot.begin() + payload_len, slot.end());
  Bytes payload = unwrap(recipient.key, wrapped);
  if (tag8(payload) != tag) return std::nullopt;
  return payload;
}

}  // namespace cake
