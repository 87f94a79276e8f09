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
// GKMP baseline: flat per-member keys, no hierarchy. A rekey reaches
// every member individually, either as n unicast KD messages of
// 12 + 16 + 16 = 44 bytes or as a single broadcast carrying one 40-byte
// keyed record per member (12-byte KD header + 12-byte key-packet
// addressing + 16-byte wrapped key) plus one 40-byte TEK record:
// (n + 1) * 40 bytes. A leave is a rekey that skips the leaver.

#ifndef CAKE_GKMP_HPP
#define CAKE_GKMP_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "cake/crypto.hpp"
#include "cake/key_tree.hpp"
#include "cake/transport.hpp"

namespace cake::gkmp {

constexpr size_t kUnicastRekeyBytes = 44;   // KD 12 + KEK 16 + TEK 16
constexpr size_t kBroadcastRecordBytes = 40;  // KD 12 + packet 12 + key 16

struct Trace {
  size_t unicasts = 0;
  size_t broadcasts = 0;
  std::vector<size_t> message_bytes;
  size_t messages() const { return unicasts + broadcasts; }
  size_t total_bytes() const {
    size_t t = 0;
    for (size_t b : message_bytes) t += b;
    return t;
  }
};

class GkmpClient {
 public:
  GkmpClient() = default;
  GkmpClient(MemberId id, SymKey personal) : id_(id), personal_(personal) {}

  void on_message(const Bytes& data);

  MemberId id() const { return id_; }
  const SymKey& personal() const { return personal_; }
  bool has_keys() const { return has_keys_; }
  const SymKey& kek() const { return kek_; }
  const SymKey& tek() const { return tek_; }
  bool can_read_probe(const Bytes& probe, const Bytes& expected) const;
  const std::vector<SymKey>& tek_history() const { return tek_history_; }

 private:
  MemberId id_ = 0;
  SymKey personal_{};
  bool has_keys_ = false;
  SymKey kek_{};
  SymKey tek_{};
  std::vector<SymKey> tek_history_;
};

class GkmpWorld {
 public:
  GkmpWorld(uint64_t seed, size_t n);

  Network& net() { return net_; }
  GkmpClient& client(MemberId id) { return clients_.at(id); }
  std::vector<MemberId> member_ids() const;
  const SymKey& tek() const { return tek_; }
  const SymKey& kek() const { return kek_; }

  Trace rekey_unicast();
  Trace rekey_broadcast();
  Trace leave(MemberId m);
  // Fresh group keys for the old members, then one unicast provisioning
  // the joiner (personal key + group keys: 12 + 48 bytes).
  Trace join(MemberId m);
  // Per-member key download, same shape as a unicast rekey.
  Trace key_download();

 private:
  void push_keys_unicast(MemberId id, Trace& trace);
  static std::string endpoint(MemberId id);

  uint64_t seed_;
  Drbg rng_;
  Network net_;
  std::map<MemberId, GkmpClient> clients_;
  std::map<MemberId, SymKey> member_keys_;
  SymKey kek_{};
  SymKey tek_{};
  MemberId next_id_ = 0;
};

}  // namespace cake::gkmp

#endif  // CAKE_GKMP_HPP
