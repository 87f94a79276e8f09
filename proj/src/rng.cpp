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

#include "cake/rng.hpp"

#include <openssl/evp.h>

#include <cstring>

#include "cake/errors.hpp"

namespace cake {

namespace {

std::array<uint8_t, 32> digest32(const uint8_t* data, size_t len) {
  std::array<uint8_t, 32> out{};
  unsigned int out_len = 0;
  if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1 ||
      out_len != out.size()) {
    fail(Err::kEntropyFailure, "sha256 digest failed");
  }
  return out;
}

}  // namespace

Drbg::Drbg(uint64_t seed) {
  Bytes be;
  put_u64(be, seed);
  state_ = digest32(be.data(), be.size());
}

Drbg::Drbg(const std::array<uint8_t, 32>& state) : state_(state) {}

Drbg Drbg::fork(const std::string& label) const {
  // Child state depends only on the parent seed state and the label, not on
  // how much output the parent has produced, so fork order is irrelevant.
  Bytes buf(state_.begin(), state_.end());
  buf.insert(buf.end(), label.begin(), label.end());
  return Drbg(digest32(buf.data(), buf.size()));
}

void Drbg::fill(uint8_t* out, size_t n) {
  while (n > 0) {
    if (avail_ == 0) {
      Bytes buf(state_.begin(), state_.end());
      put_u64(buf, counter_++);
      block_ = digest32(buf.data(), buf.size());
      avail_ = block_.size();
    }
    size_t take = n < avail_ ? n : avail_;
    std::memcpy(out, block_.data() + (block_.size() - avail_), take);
    avail_ -= take;
    out += take;
    n -= take;
  }
}

Bytes Drbg::bytes(size_t n) {
  Bytes out(n);
  fill(out.data(), n);
  return out;
}

uint64_t Drbg::next_u64() {
  uint8_t buf[8];
  fill(buf, sizeof buf);
  uint64_t v = 0;
  for (uint8_t b : buf) v = (v << 8) | b;
  return v;
}

uint64_t Drbg::below(uint64_t bound) {
  if (bound == 0) fail(Err::kEntropyFailure, "below(0)");
  // threshold = 2^64 mod bound; values in [threshold, 2^64) cover a whole
  // number of residue classes, so the reduction below is unbiased.
  uint64_t threshold = (0 - bound) % bound;
  uint64_t v;
  do {
    v = next_u64();
  } while (v < threshold);
  return v % bound;
}

}  // namespace cake
