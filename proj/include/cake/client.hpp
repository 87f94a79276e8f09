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
// Group member endpoint. Carries the personal pair negotiated at
// registration and, per group, the current TEK/KEK, the epoch, and the
// held slice of the key tree (own leaf plus ancestors). Broadcast
// handling is idempotent: key-delivery payloads carry the epoch they
// establish and are skipped once the client has caught up, so replays
// are harmless.
//
// A leave broadcast is processed with one lock solve and one slot
// unwrap: the marked-address list pins down which single held pair is a
// surviving sibling, and the slot tag confirms it. A client whose every
// candidate fails the tag is itself excluded and drops the group.

#ifndef CAKE_CLIENT_HPP
#define CAKE_CLIENT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cake/crt_lock.hpp"
#include "cake/key_tree.hpp"
#include "cake/messages.hpp"
#include "cake/transport.hpp"

namespace cake {

// A tree pair as held client-side; root pairs arrive without modulus
// (the root modulus is never used, so it is never sent).
struct HeldPair {
  SymKey key{};
  std::optional<mpz_class> m;
};

struct ClientGroupState {
  SymKey gtek{};
  SymKey gkek{};
  uint16_t epoch = 0;
  TreeAddress leaf;
  KeyPair leaf_pair;
  // Ancestors of the leaf, root included.
  std::map<TreeAddress, HeldPair> path_keys;
};

enum class ProcessStatus { kApplied, kIgnored, kEvicted };

struct ClientCounters {
  uint64_t lock_solves = 0;
  uint64_t slot_unwraps = 0;
  uint64_t kd_unwraps = 0;
};

class Client {
 public:
  Client(MemberId id, std::string endpoint, Network* net, Bytes credential,
         uint64_t seed);

  Client(const Client&) = default;
  Client& operator=(const Client&) = default;

  void attach(Network* net);
  void register_endpoint();

  // Sends the DH initiation; the rest of the registration exchange is
  // handled from incoming messages.
  void start_registration();

  MemberId id() const { return id_; }
  const std::string& endpoint() const { return endpoint_; }
  bool registered() const { return personal_.has_value(); }
  bool auth_failed() const { return auth_failed_; }
  const KeyPair& personal_pair() const;
  std::optional<TreeAddress> personal_address() const { return personal_addr_; }

  bool in_group(uint32_t gid) const { return groups_.count(gid) > 0; }
  const ClientGroupState& group(uint32_t gid) const;
  std::vector<uint32_t> group_ids() const;

  ProcessStatus last_status() const { return last_status_; }
  const ClientCounters& counters() const { return counters_; }
  void reset_counters() { counters_ = ClientCounters{}; }

  // Application-level probe check: true when the client's current TEK
  // for the group decrypts the probe to `expected`.
  bool can_read_probe(uint32_t gid, const Bytes& probe,
                      const Bytes& expected) const;

  // Full key history, for adversarial replay in the secrecy suites:
  // every (m, key) pair and every symmetric group key this client ever
  // held, including values later replaced or dropped.
  const std::vector<KeyPair>& pair_history() const { return pair_history_; }
  const std::vector<SymKey>& symkey_history() const { return symkey_history_; }

 private:
  struct Scratch;  // per-message commit buffer for groups being entered

  void on_message(const std::string& from, const Bytes& data);
  ProcessStatus process_payloads(const std::vector<CakePayload>& seq);

  void handle_registration_kd(const KdPayload& kd);
  bool handle_readdress(const ReaddressArray& arr, uint32_t gid, Scratch& sc);
  bool handle_download(const DownloadArray& arr, uint32_t gid, Scratch& sc);
  bool handle_update(const UpdateArray& arr, uint32_t gid);
  // Returns kApplied / kIgnored / kEvicted for the leave alone.
  ProcessStatus handle_leave(const LeaveArray& arr, uint32_t gid);
  bool handle_kd(const KdPayload& kd, Scratch& sc);

  std::optional<Bytes> try_open(const LockMX& lock, const KeyPair& kp);
  void remember_pair(const KeyPair& kp);
  void remember_key(const SymKey& k);
  void install_path_key(ClientGroupState& st, TreeAddress a, HeldPair hp);

  MemberId id_;
  std::string endpoint_;
  Network* net_;
  Bytes credential_;
  Drbg rng_;

  std::optional<DhSecret> dh_;
  std::optional<SymKey> session_;
  std::optional<KeyPair> personal_;
  std::optional<TreeAddress> personal_addr_;
  bool auth_failed_ = false;

  std::map<uint32_t, ClientGroupState> groups_;
  ProcessStatus last_status_ = ProcessStatus::kIgnored;
  ClientCounters counters_;

  std::vector<KeyPair> pair_history_;
  std::vector<SymKey> symkey_history_;
};

}  // namespace cake

#endif  // CAKE_CLIENT_HPP
