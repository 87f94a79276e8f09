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

#ifndef CAKE_RNG_HPP
#define CAKE_RNG_HPP

#include <array>
#include <cstdint>
#include <string>

#include "cake/bytes.hpp"

namespace cake {

// Deterministic byte generator (hash-counter construction). Every random
// choice in the library flows from one of these so that a scenario seed
// reproduces byte-identical runs; no std:: distribution is used anywhere
// because their outputs are implementation-defined.
class Drbg {
 public:
  explicit Drbg(uint64_t seed);
  // Domain-separated child generator: Drbg(seed).fork("gc") and
  // Drbg(seed).fork("m17") are independent streams.
  Drbg fork(const std::string& label) const;

  void fill(uint8_t* out, size_t n);
  Bytes bytes(size_t n);
  uint64_t next_u64();
  // Uniform in [0, bound) by rejection; bound > 0.
  uint64_t below(uint64_t bound);

 private:
  explicit Drbg(const std::array<uint8_t, 32>& state);

  std::array<uint8_t, 32> state_;
  uint64_t counter_ = 0;
  std::array<uint8_t, 32> block_{};
  size_t avail_ = 0;
};

}  // namespace cake

#endif  // CAKE_RNG_HPP
