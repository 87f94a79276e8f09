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
// The secure lock: one big integer that simultaneously holds a private
// ciphertext for every intended recipient. Each recipient i owns a
// secret prime modulus m_i; the lock X is the unique value below the
// product of all moduli with X mod m_i = c_i for every recipient's
// ciphertext c_i (Chinese remainder combination). Opening a lock costs
// one modulo reduction regardless of how many recipients it serves.
//
// Slot layout used by the group protocol: a slot is
//   wrap(key_i, payload) || tag8(payload)
// interpreted as a big-endian integer. Payloads are 16-byte keys, so a
// slot is 24 bytes, always strictly below a 328-bit modulus. The tag
// lets a holder of the wrong modulus (or a stale key) detect that the
// lock was not addressed to it.

#ifndef CAKE_CRT_LOCK_HPP
#define CAKE_CRT_LOCK_HPP

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "cake/crypto.hpp"

namespace cake {

// Uniform modulus class: 328-bit primes, 41 bytes serialized.
constexpr size_t kModulusBits = 328;
constexpr size_t kModulusBytes = 41;
// Residues must stay below any modulus of the class: one full byte of
// headroom below the class bit length.
constexpr size_t kSlotMaxBytes = (kModulusBits - 8) / 8;

struct Modulus {
  mpz_class value;

  bool operator<(const Modulus& o) const { return value < o.value; }
  bool operator==(const Modulus& o) const { return value == o.value; }
};

// A recipient secret: prime modulus plus symmetric key. The modulus
// selects the recipient's congruence in a lock; the key encrypts the
// slot contents.
struct KeyPair {
  Modulus m;
  SymKey key{};
};

struct LockMX {
  mpz_class lock_value;
  uint16_t element_count = 0;
  // ceil(bitlen(product of moduli) / 8): the serialized size.
  uint16_t byte_length = 0;
};

// y with (a * y) mod m = 1, 0 < y < m. Throws kNotCoprime when no
// inverse exists.
mpz_class mod_inverse(const mpz_class& a, const mpz_class& m);

// Chinese remainder combination of (modulus, residue) entries. Moduli
// must be pairwise coprime (validated, O(n) gcds against the product)
// and every residue must lie in [0, m_i).
LockMX build_lock(const std::vector<std::pair<mpz_class, mpz_class>>& entries);

// One modulo reduction; cost depends only on the magnitude of the lock
// value, not on the element count.
mpz_class solve_lock(const LockMX& lock, const mpz_class& m);

Bytes lock_to_bytes(const LockMX& lock);
LockMX lock_from_bytes(const Bytes& b, uint16_t element_count);

// Random primes of exactly bit_length bits, distinct across the lifetime
// of one generator instance. Primality is probabilistic with error below
// 2^-80 (40 Miller-Rabin rounds beyond the base test).
class ModulusGenerator {
 public:
  explicit ModulusGenerator(Drbg rng) : rng_(std::move(rng)) {}

  Modulus generate(size_t bit_length = kModulusBits);
  KeyPair generate_pair(size_t bit_length = kModulusBits);

  size_t issued_count() const { return issued_.size(); }

 private:
  Drbg rng_;
  std::set<mpz_class> issued_;
};

// Slot construction over a set of recipient pairs, all receiving the
// same payload. Payload length is fixed per call site; 16 bytes in every
// protocol flow.
LockMX seal_to_group(const std::vector<KeyPair>& recipients, const Bytes& payload);

// Solve + unwrap + tag check with one recipient pair. Returns nullopt on
// tag mismatch (wrong modulus or wrong key).
std::optional<Bytes> open_slot(const LockMX& lock, const KeyPair& recipient,
                               size_t payload_len);

}  // namespace cake

#endif  // CAKE_CRT_LOCK_HPP
