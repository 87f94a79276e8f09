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

#include "cake/bignum.hpp"

#include "cake/errors.hpp"

namespace cake::bn {

size_t bit_length(const mpz_class& v) {
  if (v == 0) return 0;
  return mpz_sizeinbase(v.get_mpz_t(), 2);
}

Bytes to_bytes(const mpz_class& v, size_t pad_to) {
  if (v < 0) fail(Err::kBadBitLength, "negative value has no wire form");
  size_t min_len = (bit_length(v) + 7) / 8;
  if (min_len == 0) min_len = 1;
  size_t len = pad_to == 0 ? min_len : pad_to;
  if (min_len > len) fail(Err::kOversize, "value wider than pad_to");
  Bytes out(len, 0);
  size_t written = 0;
  mpz_export(out.data() + (len - min_len), &written, 1, 1, 1, 0,
             v.get_mpz_t());
  // mpz_export writes nothing for zero; the buffer is already zeroed.
  (void)written;
  return out;
}

mpz_class from_bytes(const uint8_t* data, size_t len) {
  mpz_class v;
  if (len > 0) mpz_import(v.get_mpz_t(), len, 1, 1, 1, 0, data);
  return v;
}

mpz_class from_bytes(const Bytes& b) { return from_bytes(b.data(), b.size()); }

mpz_class random_bits(Drbg& rng, size_t bits) {
  if (bits < 2) fail(Err::kBadBitLength, "random_bits needs bits >= 2");
  size_t nbytes = (bits + 7) / 8;
  Bytes buf = rng.bytes(nbytes);
  size_t top = bits - 1;                  // index of the forced-one bit
  size_t excess = nbytes * 8 - bits;      // high bits to clear in buf[0]
  buf[0] = static_cast<uint8_t>(buf[0] & (0xffu >> excess));
  buf[0] = static_cast<uint8_t>(buf[0] | (1u << (7 - excess)));
  mpz_class v = from_bytes(buf);
  (void)top;
  return v;
}

mpz_class random_below(Drbg& rng, const mpz_class& bound) {
  if (bound <= 0) fail(Err::kBadBitLength, "random_below needs bound > 0");
  size_t bits = bit_length(bound);
  size_t nbytes = (bits + 7) / 8;
  size_t excess = nbytes * 8 - bits;
  // Rejection over [0, 2^bits); expected < 2 draws per call.
  for (;;) {
    Bytes buf = rng.bytes(nbytes);
    buf[0] = static_cast<uint8_t>(buf[0] & (0xffu >> excess));
    mpz_class v = from_bytes(buf);
    if (v < bound) return v;
  }
}

mpz_class powm(const mpz_class& base, const mpz_class& exp,
               const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(),
           mod.get_mpz_t());
  return out;
}

}  // namespace cake::bn
