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
// Group controller: owner of group state, key trees and every rekey
// decision. Members register over the simulated network (DH exchange,
// then a credential check that yields a personal key pair at a
// temporary address). Group operations emit at most the message budget
// the cost model promises: create / leave / distribute are one
// broadcast, join is one unicast plus one broadcast, a mass join is two
// broadcasts regardless of batch size, and a merge is one broadcast per
// absorbed group.
//
// The controller mirrors which tree pairs each member actually holds
// (everything it ever sent them). Locks are built only over pairs their
// audience provably holds, degrading to personal leaf pairs when a
// subtree's pair was never distributed.

#ifndef CAKE_CONTROLLER_HPP
#define CAKE_CONTROLLER_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cake/crt_lock.hpp"
#include "cake/key_tree.hpp"
#include "cake/messages.hpp"
#include "cake/transport.hpp"

namespace cake {

struct MemberRecord {
  MemberId id = 0;
  std::string endpoint;
  Bytes credential_hash;
  std::optional<SymKey> session_key;
  std::optional<KeyPair> personal;
  TreeAddress temp_addr;
  bool registered = false;
  // Set when a tree removal marked this member's leaf pair; the next
  // join issues a fresh pair instead of reusing it.
  bool pair_burned = false;
  std::set<uint32_t> groups;
  // Per group: tree addresses whose full pair this member holds.
  std::map<uint32_t, std::set<TreeAddress>> known;
};

struct GroupState {
  uint32_t gid = 0;
  SymKey gtek{};
  SymKey gkek{};
  uint16_t epoch = 0;
  KeyTree tree;
  GsaPolicy policy;
  bool keys_compromised = false;
  // Internal nodes replaced by a fast-path leave and not yet
  // redistributed.
  std::set<TreeAddress> pending_update;
};

// Per-operation message accounting returned to the caller.
struct OpTrace {
  size_t unicasts = 0;
  size_t broadcasts = 0;
  std::vector<size_t> message_bytes;
  // Lock sizes (value bytes) and element counts emitted by this op.
  std::vector<std::pair<uint16_t, uint16_t>> locks;  // (elements, bytes)

  size_t messages() const { return unicasts + broadcasts; }
  size_t total_bytes() const {
    size_t t = 0;
    for (size_t b : message_bytes) t += b;
    return t;
  }
};

class GroupController {
 public:
  static constexpr const char* kEndpoint = "gc";

  GroupController(Network* net, uint64_t seed);

  GroupController(const GroupController&) = default;
  GroupController& operator=(const GroupController&) = default;

  void attach(Network* net);  // rebind after copy
  void register_endpoint();

  // Provision an expected member; registration itself is driven by the
  // client over the wire.
  void add_expected_member(MemberId id, const std::string& endpoint,
                           const Bytes& credential);

  OpTrace create_group(uint32_t gid, const std::vector<MemberId>& members);
  OpTrace rekey(uint32_t gid, bool force_wrapped = false);
  OpTrace join(uint32_t gid, MemberId m);
  OpTrace mass_join(uint32_t gid, const std::vector<MemberId>& members,
                    bool lock_mode = true);
  OpTrace leave(uint32_t gid, MemberId m);
  OpTrace leave_many(uint32_t gid, const std::vector<MemberId>& ms);
  OpTrace distribute_tree(uint32_t gid);
  OpTrace update_paths(uint32_t gid);
  OpTrace merge(const std::vector<uint32_t>& gids, uint32_t new_gid);
  std::vector<uint32_t> split(uint32_t gid,
                              const std::vector<std::vector<MemberId>>& parts,
                              OpTrace* trace = nullptr);
  // Replace one internal node's pair and redistribute it: the minimal
  // tree operation.
  OpTrace tree_op_update(uint32_t gid, TreeAddress node);

  bool has_group(uint32_t gid) const { return groups_.count(gid) > 0; }
  const GroupState& group(uint32_t gid) const;
  const MemberRecord& member(MemberId id) const;
  std::vector<uint32_t> group_ids() const;
  size_t issued_moduli() const { return gen_.issued_count(); }

 private:
  friend class World;

  void on_message(const std::string& from, const Bytes& data);
  GroupState& group_mut(uint32_t gid);
  MemberRecord& member_mut(MemberId id);
  KeyPair fresh_pair();
  SymKey fresh_key();

  // Insert into the tree, recording relocation repair payloads for the
  // old-members broadcast and mirroring what the joiner will know.
  InsertResult insert_into_tree(GroupState& g, MemberId m,
                                std::vector<CakePayload>& repair_out);
  // Lock element pairs reaching exactly the members under `covers`,
  // degrading to leaf pairs where an internal pair is not fully known.
  std::vector<KeyPair> usable_cover_pairs(const GroupState& g,
                                          const std::vector<TreeAddress>& covers);
  // Root-addressed substructures carrying `payload` to `recipients`,
  // batched so no blob overflows its 16-bit size field.
  std::vector<KeysSubstructure> root_subs(const std::vector<KeyPair>& recipients,
                                          const Bytes& payload, OpTrace& trace);
  void send_unicast(const std::string& to, const std::vector<CakePayload>& ps,
                    OpTrace& trace);
  void send_broadcast(const std::vector<CakePayload>& ps, OpTrace& trace);

  Network* net_;
  Drbg rng_;
  ModulusGenerator gen_;
  std::map<std::string, MemberId> endpoint_to_member_;
  std::map<MemberId, MemberRecord> members_;
  std::map<uint32_t, GroupState> groups_;
  uint16_t next_temp_ = 1;
};

}  // namespace cake

#endif  // CAKE_CONTROLLER_HPP
