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

#ifndef CAKE_BIGNUM_HPP
#define CAKE_BIGNUM_HPP

#include <gmpxx.h>

#include <cstddef>

#include "cake/bytes.hpp"
#include "cake/rng.hpp"

namespace cake::bn {

size_t bit_length(const mpz_class& v);

// Big-endian magnitude, left-padded with zero bytes to pad_to (pad_to = 0
// means minimal length; zero encodes as a single 0x00 byte when minimal).
Bytes to_bytes(const mpz_class& v, size_t pad_to = 0);
mpz_class from_bytes(const Bytes& b);
mpz_class from_bytes(const uint8_t* data, size_t len);

// Exactly `bits` bits: top bit forced to 1. bits >= 2.
mpz_class random_bits(Drbg& rng, size_t bits);
// Uniform in [0, bound) by rejection sampling.
mpz_class random_below(Drbg& rng, const mpz_class& bound);

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod);

}  // namespace cake::bn

#endif  // CAKE_BIGNUM_HPP
