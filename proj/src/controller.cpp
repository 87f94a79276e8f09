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

#include "cake/controller.hpp"

#include <algorithm>

#include "cake/crypto.hpp"
#include "cake/errors.hpp"

namespace cake {

namespace {

// Locks are chunked so a 1024-element blob (1024 * 41 = 41,984 bytes)
// stays under the 16-bit size field of its substructure.
constexpr size_t kMaxLockElements = 1024;

CakePayload kd(KdType type, uint32_t gid, uint16_t epoch, Bytes material) {
  KdPayload p;
  p.key_type = type;
  p.group_id = gid;
  p.epoch = epoch;
  p.material = std::move(material);
  return p;
}

Bytes pair_material(const SymKey& kek, const SymKey& tek) {
  Bytes b = key_bytes(kek);
  put_bytes(b, key_bytes(tek));
  return b;
}

Bytes personal_material(const KeyPair& kp, TreeAddress addr) {
  Bytes b = bn::to_bytes(kp.m.value, kModulusBytes);
  put_bytes(b, key_bytes(kp.key));
  put_u16(b, addr.code());
  return b;
}

void sort_deepest_first(std::vector<TreeAddress>& nodes) {
  std::sort(nodes.begin(), nodes.end(), [](TreeAddress a, TreeAddress b) {
    if (a.depth() != b.depth()) return a.depth() > b.depth();
    return a.code() < b.code();
  });
}

// Substructure delivering `node`'s current pair to holders of the
// recipient pairs: the lock carries the key, the m blob the modulus
// (wrapped under that key). Root-addressed substructures omit the
// modulus: it is never used by members.
KeysSubstructure node_sub(const GroupState& g, TreeAddress node,
                          const std::vector<KeyPair>& recipients,
                          OpTrace& trace) {
  const KeyPair& delivered = g.tree.pair_at(node);
  LockMX lock = seal_to_group(recipients, key_bytes(delivered.key));
  trace.locks.emplace_back(lock.element_count, lock.byte_length);
  KeysSubstructure sub;
  sub.key_id = node;
  sub.crt_blob = lock_to_bytes(lock);
  if (!node.is_root()) {
    sub.m_blob =
        wrap(delivered.key, bn::to_bytes(delivered.m.value, kModulusBytes));
  }
  return sub;
}

}  // namespace

GroupController::GroupController(Network* net, uint64_t seed)
    : net_(net), rng_(Drbg(seed).fork("gc")), gen_(rng_.fork("gc-moduli")) {}

void GroupController::attach(Network* net) { net_ = net; }

void GroupController::register_endpoint() {
  net_->register_endpoint(
      kEndpoint, [this](const std::string& from, const Bytes& data) {
        on_message(from, data);
      });
}

void GroupController::add_expected_member(MemberId id,
                                          const std::string& endpoint,
                                          const Bytes& credential) {
  MemberRecord rec;
  rec.id = id;
  rec.endpoint = endpoint;
  rec.credential_hash = sha256(credential);
  members_[id] = std::move(rec);
  endpoint_to_member_[endpoint] = id;
}

const GroupState& GroupController::group(uint32_t gid) const {
  auto it = groups_.find(gid);
  if (it == groups_.end()) fail(Err::kUnknownGroup, "no such group");
  return it->second;
}

const MemberRecord& GroupController::member(MemberId id) const {
  auto it = members_.find(id);
  if (it == members_.end()) fail(Err::kUnknownMember, "no such member");
  return it->second;
}

std::vector<uint32_t> GroupController::group_ids() const {
  std::vector<uint32_t> ids;
  ids.reserve(groups_.size());
  for (const auto& [gid, g] : groups_) {
    (void)g;
    ids.push_back(gid);
  }
  return ids;
}

GroupState& GroupController::group_mut(uint32_t gid) {
  auto it = groups_.find(gid);
  if (it == groups_.end()) fail(Err::kUnknownGroup, "no such group");
  return it->second;
}

MemberRecord& GroupController::member_mut(MemberId id) {
  auto it = members_.find(id);
  if (it == members_.end()) fail(Err::kUnknownMember, "no such member");
  return it->second;
}

KeyPair GroupController::fresh_pair() { return gen_.generate_pair(); }

SymKey GroupController::fresh_key() { return random_key(rng_); }

void GroupController::send_unicast(const std::string& to,
                                   const std::vector<CakePayload>& ps,
                                   OpTrace& trace) {
  Bytes data = encode_sequence(ps);
  trace.unicasts += 1;
  trace.message_bytes.push_back(data.size());
  net_->unicast(kEndpoint, to, std::move(data));
}

void GroupController::send_broadcast(const std::vector<CakePayload>& ps,
                                     OpTrace& trace) {
  Bytes data = encode_sequence(ps);
  trace.broadcasts += 1;
  trace.message_bytes.push_back(data.size());
  net_->broadcast(kEndpoint, std::move(data));
}

std::vector<KeysSubstructure> GroupController::root_subs(
    const std::vector<KeyPair>& recipients, const Bytes& payload,
    OpTrace& trace) {
  std::vector<KeysSubstructure> subs;
  for (size_t i = 0; i < recipients.size(); i += kMaxLockElements) {
    size_t end = std::min(recipients.size(), i + kMaxLockElements);
    std::vector<KeyPair> chunk(recipients.begin() + i,
                               recipients.begin() + end);
    LockMX lock = seal_to_group(chunk, payload);
    trace.locks.emplace_back(lock.element_count, lock.byte_length);
    KeysSubstructure sub;
    sub.key_id = TreeAddress::root();
    sub.crt_blob = lock_to_bytes(lock);
    subs.push_back(std::move(sub));
  }
  return subs;
}

std::vector<KeyPair> GroupController::usable_cover_pairs(
    const GroupState& g, const std::vector<TreeAddress>& covers) {
  // A node's pair is a usable lock element only when every member under
  // it holds the current pair (and a modulus was ever sent: the root
  // never qualifies). Otherwise the node degrades to its children.
  std::vector<KeyPair> out;
  auto knows = [&](MemberId m, TreeAddress a) {
    auto git = members_.at(m).known.find(g.gid);
    return git != members_.at(m).known.end() && git->second.count(a) > 0;
  };
  std::vector<TreeAddress> stack(covers.rbegin(), covers.rend());
  while (!stack.empty()) {
    TreeAddress c = stack.back();
    stack.pop_back();
    bool usable = !c.is_root();
    if (usable) {
      for (MemberId m : g.tree.members_under(c)) {
        if (!knows(m, c)) {
          usable = false;
          break;
        }
      }
    }
    if (usable) {
      out.push_back(g.tree.pair_at(c));
    } else {
      auto children = g.tree.children_of(c);
      for (auto it = children.rbegin(); it != children.rend(); ++it) {
        stack.push_back(*it);
      }
    }
  }
  return out;
}

InsertResult GroupController::insert_into_tree(
    GroupState& g, MemberId m, std::vector<CakePayload>& repair_out) {
  MemberRecord& rec = member_mut(m);
  InsertResult res = g.tree.insert_member(m, *rec.personal,
                                          [this] { return fresh_pair(); });
  if (!res.created_internal.empty()) {
    // A leaf converted to an internal node: the displaced member keeps
    // its pair one level down and learns the fresh internal pair from a
    // one-element lock in the old-members broadcast.
    TreeAddress internal = res.created_internal.front();
    TreeAddress displaced_leaf = res.moves.front().second;
    MemberId displaced = 0;
    for (const auto& [mid, leaf] : g.tree.member_leaves()) {
      if (leaf == displaced_leaf) {
        displaced = mid;
        break;
      }
    }
    auto& dknown = member_mut(displaced).known[g.gid];
    dknown.erase(res.moves.front().first);
    dknown.insert(displaced_leaf);

    ReaddressArray ra;
    ra.moves = res.moves;
    repair_out.push_back(std::move(ra));

    OpTrace scratch;
    UpdateArray ua;
    ua.keys.push_back(node_sub(g, internal, {g.tree.pair_at(displaced_leaf)},
                               scratch));
    repair_out.push_back(std::move(ua));
    dknown.insert(internal);
  }
  return res;
}

OpTrace GroupController::create_group(uint32_t gid,
                                      const std::vector<MemberId>& members) {
  if (groups_.count(gid) > 0) fail(Err::kDuplicateMember, "group id in use");
  if (members.empty()) fail(Err::kEmptySubgroup, "group needs members");
  if (members.size() > kTreeMemberCapacity) {
    fail(Err::kOverCapacity, "beyond 3^7 members");
  }
  for (MemberId m : members) {
    const MemberRecord& rec = member(m);
    if (!rec.registered || !rec.personal) {
      fail(Err::kAuthFailed, "member not registered");
    }
    if (rec.pair_burned) {
      fail(Err::kAuthFailed, "burned pair needs re-issue through a join");
    }
  }

  GroupState g;
  g.gid = gid;
  g.policy.group_id = gid;
  g.tree = KeyTree(fresh_pair());
  g.gkek = g.tree.pair_at(TreeAddress::root()).key;
  g.gtek = fresh_key();
  g.epoch = 0;

  for (MemberId m : members) {
    g.tree.insert_member(m, *member(m).personal,
                         [this] { return fresh_pair(); });
  }

  OpTrace trace;
  ReaddressArray ra;
  std::vector<KeyPair> personals;
  for (MemberId m : members) {
    MemberRecord& rec = member_mut(m);
    TreeAddress leaf = g.tree.leaf_of(m);
    ra.moves.emplace_back(rec.temp_addr, leaf);
    personals.push_back(*rec.personal);
    rec.groups.insert(gid);
    rec.known[gid] = {leaf, TreeAddress::root()};
  }

  DownloadArray da;
  da.keys = root_subs(personals, key_bytes(g.gkek), trace);

  std::vector<CakePayload> msg;
  msg.push_back(g.policy);
  msg.push_back(std::move(ra));
  msg.push_back(std::move(da));
  msg.push_back(kd(KdType::kGtekUnderGkek, gid, g.epoch,
                   wrap(g.gkek, key_bytes(g.gtek))));
  send_broadcast(msg, trace);

  groups_[gid] = std::move(g);
  return trace;
}

OpTrace GroupController::rekey(uint32_t gid, bool force_wrapped) {
  GroupState& g = group_mut(gid);
  OpTrace trace;
  uint16_t next_epoch = static_cast<uint16_t>(g.epoch + 1);
  std::vector<CakePayload> msg;
  if (g.keys_compromised || force_wrapped) {
    SymKey kek = fresh_key();
    SymKey tek = fresh_key();
    msg.push_back(kd(KdType::kGroupPairUnderGkek, gid, next_epoch,
                     wrap(g.gkek, pair_material(kek, tek))));
    g.gkek = kek;
    g.gtek = tek;
    KeyPair root = g.tree.pair_at(TreeAddress::root());
    root.key = kek;
    g.tree.set_pair(TreeAddress::root(), root);
  } else {
    // Members derive both keys forward; nothing secret travels.
    msg.push_back(kd(KdType::kRekeyNotice, gid, next_epoch, {}));
    g.gkek = derive_next(g.gkek);
    g.gtek = derive_next(g.gtek);
    KeyPair root = g.tree.pair_at(TreeAddress::root());
    root.key = g.gkek;
    g.tree.set_pair(TreeAddress::root(), root);
  }
  g.epoch = next_epoch;
  g.keys_compromised = false;
  send_broadcast(msg, trace);
  return trace;
}

OpTrace GroupController::join(uint32_t gid, MemberId m) {
  GroupState& g = group_mut(gid);
  MemberRecord& rec = member_mut(m);
  if (!rec.registered) fail(Err::kAuthFailed, "member not registered");
  if (rec.groups.count(gid) > 0) fail(Err::kDuplicateMember, "already in");
  if (g.tree.member_count() >= kTreeMemberCapacity) {
    fail(Err::kOverCapacity, "tree full");
  }

  OpTrace trace;
  uint16_t next_epoch = static_cast<uint16_t>(g.epoch + 1);
  SymKey old_gkek = g.gkek;

  bool issue_pair = rec.pair_burned || !rec.personal;
  if (issue_pair) {
    if (!rec.session_key) fail(Err::kAuthFailed, "no session key on file");
    rec.personal = fresh_pair();
    rec.pair_burned = false;
  }

  std::vector<CakePayload> repairs;
  InsertResult res = insert_into_tree(g, m, repairs);

  // Backward secrecy: both group keys rotate on every join.
  SymKey kek = fresh_key();
  SymKey tek = fresh_key();
  g.gkek = kek;
  g.gtek = tek;
  KeyPair root = g.tree.pair_at(TreeAddress::root());
  root.key = kek;
  g.tree.set_pair(TreeAddress::root(), root);

  // Unicast: policy, fresh pair if re-issued, the joiner's relocation,
  // the full path under one-element locks, and the group pair.
  std::vector<CakePayload> uni;
  uni.push_back(g.policy);
  if (issue_pair) {
    uni.push_back(kd(KdType::kPersonalPair, 0, 0,
                     wrap(*rec.session_key,
                          personal_material(*rec.personal, rec.temp_addr))));
  }
  ReaddressArray ra;
  ra.moves.emplace_back(rec.temp_addr, res.address);
  uni.push_back(std::move(ra));

  DownloadArray da;
  std::set<TreeAddress> known_path = {res.address};
  std::vector<TreeAddress> ancestors = g.tree.path_to_root(res.address);
  ancestors.erase(ancestors.begin());  // the leaf itself
  for (TreeAddress p : ancestors) {
    da.keys.push_back(node_sub(g, p, {*rec.personal}, trace));
    known_path.insert(p);
  }
  uni.push_back(std::move(da));
  uni.push_back(kd(KdType::kGroupPairUnderPersonal, gid, next_epoch,
                   wrap(rec.personal->key, pair_material(kek, tek))));
  send_unicast(rec.endpoint, uni, trace);

  // Broadcast to standing members: relocation repair plus the wrapped
  // group pair. Stale for the joiner by the epoch gate.
  std::vector<CakePayload> bc = std::move(repairs);
  bc.push_back(kd(KdType::kGroupPairUnderGkek, gid, next_epoch,
                  wrap(old_gkek, pair_material(kek, tek))));
  send_broadcast(bc, trace);

  rec.groups.insert(gid);
  rec.known[gid] = std::move(known_path);
  g.epoch = next_epoch;
  return trace;
}

OpTrace GroupController::mass_join(uint32_t gid,
                                   const std::vector<MemberId>& members,
                                   bool lock_mode) {
  GroupState& g = group_mut(gid);
  if (members.empty()) fail(Err::kEmptySubgroup, "no joiners");
  if (g.tree.member_count() + members.size() > kTreeMemberCapacity) {
    fail(Err::kOverCapacity, "tree full");
  }
  for (MemberId m : members) {
    const MemberRecord& rec = member(m);
    if (!rec.registered || !rec.personal) {
      fail(Err::kAuthFailed, "member not registered");
    }
    if (rec.pair_burned) {
      fail(Err::kAuthFailed, "burned pair needs re-issue through a join");
    }
    if (rec.groups.count(gid) > 0) {
      fail(Err::kDuplicateMember, "already in");
    }
  }

  OpTrace trace;
  uint16_t next_epoch = static_cast<uint16_t>(g.epoch + 1);
  SymKey old_gkek = g.gkek;

  std::vector<CakePayload> repairs;
  std::vector<InsertResult> placed;
  placed.reserve(members.size());
  for (MemberId m : members) {
    placed.push_back(insert_into_tree(g, m, repairs));
  }

  SymKey kek = fresh_key();
  SymKey tek = fresh_key();
  g.gkek = kek;
  g.gtek = tek;
  KeyPair root = g.tree.pair_at(TreeAddress::root());
  root.key = kek;
  g.tree.set_pair(TreeAddress::root(), root);

  // Standing members first: repairs plus the wrapped group pair.
  std::vector<CakePayload> bc1 = std::move(repairs);
  bc1.push_back(kd(KdType::kGroupPairUnderGkek, gid, next_epoch,
                   wrap(old_gkek, pair_material(kek, tek))));
  send_broadcast(bc1, trace);

  if (lock_mode) {
    // One broadcast for every joiner: shared path nodes are delivered
    // under one lock each, over exactly the joiners beneath them.
    std::vector<CakePayload> bc2;
    bc2.push_back(g.policy);
    ReaddressArray ra;
    std::set<TreeAddress> path_nodes;
    std::set<MemberId> joiner_set(members.begin(), members.end());
    for (size_t i = 0; i < members.size(); ++i) {
      MemberRecord& rec = member_mut(members[i]);
      TreeAddress leaf = g.tree.leaf_of(members[i]);
      ra.moves.emplace_back(rec.temp_addr, leaf);
      for (TreeAddress p : g.tree.path_to_root(leaf)) {
        if (!(p == leaf) && !p.is_root()) path_nodes.insert(p);
      }
    }
    bc2.push_back(std::move(ra));

    DownloadArray da;
    std::vector<TreeAddress> ordered(path_nodes.begin(), path_nodes.end());
    sort_deepest_first(ordered);
    for (TreeAddress p : ordered) {
      std::vector<KeyPair> recips;
      for (MemberId mu : g.tree.members_under(p)) {
        if (joiner_set.count(mu) > 0) recips.push_back(*member(mu).personal);
      }
      da.keys.push_back(node_sub(g, p, recips, trace));
    }
    std::vector<KeyPair> personals;
    for (MemberId m : members) personals.push_back(*member(m).personal);
    for (auto& sub : root_subs(personals, key_bytes(kek), trace)) {
      da.keys.push_back(std::move(sub));
    }
    bc2.push_back(std::move(da));
    bc2.push_back(kd(KdType::kGtekUnderGkek, gid, next_epoch,
                     wrap(kek, key_bytes(tek))));
    send_broadcast(bc2, trace);
  } else {
    // Individual variant: one unicast per joiner, as a plain join would.
    for (size_t i = 0; i < members.size(); ++i) {
      MemberRecord& rec = member_mut(members[i]);
      std::vector<CakePayload> uni;
      uni.push_back(g.policy);
      ReaddressArray ra;
      TreeAddress leaf = g.tree.leaf_of(members[i]);
      ra.moves.emplace_back(rec.temp_addr, leaf);
      uni.push_back(std::move(ra));
      DownloadArray da;
      std::vector<TreeAddress> ancestors = g.tree.path_to_root(leaf);
      ancestors.erase(ancestors.begin());
      for (TreeAddress p : ancestors) {
        da.keys.push_back(node_sub(g, p, {*rec.personal}, trace));
      }
      uni.push_back(std::move(da));
      uni.push_back(kd(KdType::kGroupPairUnderPersonal, gid, next_epoch,
                       wrap(rec.personal->key, pair_material(kek, tek))));
      send_unicast(rec.endpoint, uni, trace);
    }
  }

  for (size_t i = 0; i < members.size(); ++i) {
    MemberRecord& rec = member_mut(members[i]);
    TreeAddress leaf = g.tree.leaf_of(members[i]);
    rec.groups.insert(gid);
    auto& known = rec.known[gid];
    for (TreeAddress p : g.tree.path_to_root(leaf)) known.insert(p);
  }
  g.epoch = next_epoch;
  return trace;
}

OpTrace GroupController::leave(uint32_t gid, MemberId m) {
  return leave_many(gid, {m});
}

OpTrace GroupController::leave_many(uint32_t gid,
                                    const std::vector<MemberId>& ms) {
  GroupState& g = group_mut(gid);
  if (ms.empty()) fail(Err::kEmptySubgroup, "no leavers");
  std::set<TreeAddress> marked;
  for (MemberId m : ms) {
    if (member(m).groups.count(gid) == 0) {
      fail(Err::kNotMember, "leaver not in group");
    }
    for (TreeAddress a : g.tree.path_to_root(g.tree.leaf_of(m))) {
      marked.insert(a);
    }
  }
  std::vector<TreeAddress> cover = g.tree.siblings_for_marked(marked);

  for (MemberId m : ms) {
    g.tree.remove_member(m);
    MemberRecord& rec = member_mut(m);
    rec.groups.erase(gid);
    rec.known.erase(gid);
    rec.pair_burned = true;
  }

  OpTrace trace;
  uint16_t next_epoch = static_cast<uint16_t>(g.epoch + 1);

  if (g.tree.member_count() == 0) {
    std::vector<CakePayload> msg;
    msg.push_back(kd(KdType::kGroupDissolve, gid, next_epoch, {}));
    send_broadcast(msg, trace);
    groups_.erase(gid);
    return trace;
  }

  // Replace every surviving marked pair now; distribution of the
  // non-root replacements is deferred to update_paths.
  SymKey kek = fresh_key();
  SymKey tek = fresh_key();
  g.gkek = kek;
  g.gtek = tek;
  KeyPair root = g.tree.pair_at(TreeAddress::root());
  root.key = kek;
  g.tree.set_pair(TreeAddress::root(), root);
  for (TreeAddress a : marked) {
    if (a.is_root()) continue;
    if (g.tree.contains(a) && !g.tree.is_member_leaf(a)) {
      g.tree.set_pair(a, fresh_pair());
      g.pending_update.insert(a);
    }
    for (auto& [mid, rec] : members_) {
      (void)mid;
      auto it = rec.known.find(gid);
      if (it != rec.known.end()) it->second.erase(a);
    }
  }

  std::vector<KeyPair> usable = usable_cover_pairs(g, cover);

  LeaveArray la;
  la.leaves.assign(marked.begin(), marked.end());
  la.keys = root_subs(usable, key_bytes(kek), trace);

  std::vector<CakePayload> msg;
  msg.push_back(std::move(la));
  msg.push_back(kd(KdType::kGtekUnderGkek, gid, next_epoch,
                   wrap(kek, key_bytes(tek))));
  send_broadcast(msg, trace);
  g.epoch = next_epoch;
  return trace;
}

OpTrace GroupController::distribute_tree(uint32_t gid) {
  GroupState& g = group_mut(gid);
  OpTrace trace;
  uint16_t next_epoch = static_cast<uint16_t>(g.epoch + 1);

  std::vector<TreeAddress> internals;
  for (const auto& [addr, pair] : g.tree.nodes()) {
    (void)pair;
    if (!g.tree.children_of(addr).empty()) internals.push_back(addr);
  }
  sort_deepest_first(internals);

  // Deepest first: a node's lock is over its children's pairs, which the
  // same message has already delivered by the time the node's
  // substructure is reached.
  UpdateArray ua;
  for (TreeAddress p : internals) {
    std::vector<KeyPair> recips;
    for (TreeAddress c : g.tree.children_of(p)) {
      recips.push_back(g.tree.pair_at(c));
    }
    ua.keys.push_back(node_sub(g, p, recips, trace));
  }

  std::vector<CakePayload> msg;
  msg.push_back(std::move(ua));
  msg.push_back(kd(KdType::kKeyUpdate, gid, next_epoch, {}));
  send_broadcast(msg, trace);

  for (const auto& [m, leaf] : g.tree.member_leaves()) {
    auto& known = member_mut(m).known[gid];
    for (TreeAddress p : g.tree.path_to_root(leaf)) known.insert(p);
  }
  g.pending_update.clear();
  g.epoch = next_epoch;
  return trace;
}

OpTrace GroupController::update_paths(uint32_t gid) {
  GroupState& g = group_mut(gid);
  OpTrace trace;
  if (g.pending_update.empty()) return trace;  // nothing to repair
  uint16_t next_epoch = static_cast<uint16_t>(g.epoch + 1);

  std::vector<TreeAddress> pending(g.pending_update.begin(),
                                   g.pending_update.end());
  sort_deepest_first(pending);

  UpdateArray ua;
  for (TreeAddress p : pending) {
    std::vector<KeyPair> recips =
        usable_cover_pairs(g, g.tree.children_of(p));
    ua.keys.push_back(node_sub(g, p, recips, trace));
    for (MemberId m : g.tree.members_under(p)) {
      member_mut(m).known[gid].insert(p);
    }
  }

  std::vector<CakePayload> msg;
  msg.push_back(std::move(ua));
  msg.push_back(kd(KdType::kKeyUpdate, gid, next_epoch, {}));
  send_broadcast(msg, trace);

  g.pending_update.clear();
  g.epoch = next_epoch;
  return trace;
}

OpTrace GroupController::merge(const std::vector<uint32_t>& gids,
                               uint32_t new_gid) {
  if (gids.size() < 2 || gids.size() > 3) {
    fail(Err::kInvalidPartition, "merge takes two or three groups");
  }
  if (groups_.count(new_gid) > 0) {
    fail(Err::kDuplicateMember, "group id in use");
  }
  for (uint32_t gid : gids) group_mut(gid);

  GroupState merged;
  merged.gid = new_gid;
  merged.policy.group_id = new_gid;
  merged.tree = KeyTree(fresh_pair());
  merged.gkek = merged.tree.pair_at(TreeAddress::root()).key;
  merged.gtek = fresh_key();
  merged.epoch = 0;

  OpTrace trace;
  for (size_t i = 0; i < gids.size(); ++i) {
    GroupState& src = group_mut(gids[i]);
    TreeAddress slot = TreeAddress::root().child(static_cast<int>(i + 1));
    merged.tree.adopt(src.tree, slot);
    for (TreeAddress p : src.pending_update) {
      merged.pending_update.insert(TreeAddress::root().rebase(p, slot));
    }

    // One broadcast per absorbed group: announce the new group, rebase
    // every held address under the slot, and deliver the new group pair
    // under the source group's KEK.
    std::vector<CakePayload> msg;
    msg.push_back(merged.policy);
    ReaddressArray ra;
    ra.moves.emplace_back(TreeAddress::root(), slot);
    msg.push_back(std::move(ra));
    uint16_t gate_epoch = static_cast<uint16_t>(src.epoch + 1);
    msg.push_back(kd(KdType::kGroupPairUnderGkek, gids[i], gate_epoch,
                     wrap(src.gkek, pair_material(merged.gkek, merged.gtek))));
    msg.push_back(kd(KdType::kGroupDissolve, gids[i], gate_epoch, {}));
    send_broadcast(msg, trace);

    for (MemberId m : src.tree.members_under(TreeAddress::root())) {
      MemberRecord& rec = member_mut(m);
      auto& known = rec.known[new_gid];
      known.insert(TreeAddress::root());
      for (TreeAddress a : rec.known[gids[i]]) {
        known.insert(TreeAddress::root().rebase(a, slot));
      }
      rec.known.erase(gids[i]);
      rec.groups.erase(gids[i]);
      rec.groups.insert(new_gid);
    }
  }

  for (uint32_t gid : gids) groups_.erase(gid);
  groups_[new_gid] = std::move(merged);
  return trace;
}

std::vector<uint32_t> GroupController::split(
    uint32_t gid, const std::vector<std::vector<MemberId>>& parts,
    OpTrace* trace) {
  GroupState& g = group_mut(gid);
  if (parts.size() < 2) fail(Err::kInvalidPartition, "need two parts");
  std::set<MemberId> seen;
  size_t total = 0;
  for (const auto& part : parts) {
    if (part.empty()) fail(Err::kEmptySubgroup, "empty part");
    for (MemberId m : part) {
      if (member(m).groups.count(gid) == 0) {
        fail(Err::kInvalidPartition, "part member not in group");
      }
      if (!seen.insert(m).second) {
        fail(Err::kInvalidPartition, "member in two parts");
      }
      total += 1;
    }
  }
  if (total != g.tree.member_count()) {
    fail(Err::kInvalidPartition, "parts must cover the group");
  }

  uint32_t base = 0;
  for (const auto& [existing, gs] : groups_) {
    (void)gs;
    base = std::max(base, existing);
  }
  base += 1;

  OpTrace local;
  OpTrace& tr = trace ? *trace : local;
  uint16_t old_epoch = g.epoch;

  // Minimal cover of a member subset in the old tree, for the lock that
  // reaches exactly that part.
  auto cover_of = [&](const std::set<MemberId>& part) {
    std::vector<TreeAddress> cover;
    std::vector<TreeAddress> stack = {TreeAddress::root()};
    while (!stack.empty()) {
      TreeAddress n = stack.back();
      stack.pop_back();
      auto under = g.tree.members_under(n);
      if (under.empty()) continue;
      bool all = true, any = false;
      for (MemberId m : under) {
        if (part.count(m) > 0) {
          any = true;
        } else {
          all = false;
        }
      }
      if (!any) continue;
      if (all) {
        cover.push_back(n);
        continue;
      }
      auto children = g.tree.children_of(n);
      for (auto it = children.rbegin(); it != children.rend(); ++it) {
        stack.push_back(*it);
      }
    }
    return cover;
  };

  std::vector<uint32_t> new_gids;
  std::vector<GroupState> new_groups;
  for (size_t i = 0; i < parts.size(); ++i) {
    uint32_t ngid = base + static_cast<uint32_t>(i);
    new_gids.push_back(ngid);

    GroupState ng;
    ng.gid = ngid;
    ng.policy.group_id = ngid;
    ng.tree = KeyTree(fresh_pair());
    ng.gkek = ng.tree.pair_at(TreeAddress::root()).key;
    ng.gtek = fresh_key();
    ng.epoch = 0;

    for (MemberId m : parts[i]) {
      ng.tree.insert_member(m, g.tree.pair_at(g.tree.leaf_of(m)),
                            [this] { return fresh_pair(); });
    }
    // Moves carry final addresses: a later insert can convert an earlier
    // member's leaf, so they are only known once the tree is complete.
    ReaddressArray ra;
    for (MemberId m : parts[i]) {
      ra.moves.emplace_back(g.tree.leaf_of(m), ng.tree.leaf_of(m));
    }

    std::set<MemberId> part_set(parts[i].begin(), parts[i].end());
    std::vector<KeyPair> recips =
        usable_cover_pairs(g, cover_of(part_set));

    DownloadArray da;
    da.keys = root_subs(recips, key_bytes(ng.gkek), tr);

    std::vector<CakePayload> msg;
    msg.push_back(ng.policy);
    msg.push_back(std::move(ra));
    msg.push_back(std::move(da));
    msg.push_back(kd(KdType::kGtekUnderGkek, ngid, 0,
                     wrap(ng.gkek, key_bytes(ng.gtek))));
    if (i + 1 == parts.size()) {
      msg.push_back(kd(KdType::kGroupDissolve, gid,
                       static_cast<uint16_t>(old_epoch + 1), {}));
    }
    send_broadcast(msg, tr);

    for (MemberId m : parts[i]) {
      MemberRecord& rec = member_mut(m);
      rec.groups.insert(ngid);
      rec.known[ngid] = {ng.tree.leaf_of(m), TreeAddress::root()};
    }
    new_groups.push_back(std::move(ng));
  }

  for (const auto& part : parts) {
    for (MemberId m : part) {
      MemberRecord& rec = member_mut(m);
      rec.groups.erase(gid);
      rec.known.erase(gid);
    }
  }
  groups_.erase(gid);
  for (auto& ng : new_groups) groups_[ng.gid] = std::move(ng);
  return new_gids;
}

OpTrace GroupController::tree_op_update(uint32_t gid, TreeAddress node) {
  GroupState& g = group_mut(gid);
  if (node.is_root()) fail(Err::kBadAddress, "root updates go through rekey");
  if (!g.tree.contains(node) || g.tree.is_member_leaf(node)) {
    fail(Err::kUnknownAddress, "not an internal node");
  }

  OpTrace trace;
  uint16_t next_epoch = static_cast<uint16_t>(g.epoch + 1);
  g.tree.set_pair(node, fresh_pair());

  UpdateArray ua;
  std::vector<KeyPair> recips = usable_cover_pairs(g, g.tree.children_of(node));
  ua.keys.push_back(node_sub(g, node, recips, trace));

  std::vector<CakePayload> msg;
  msg.push_back(std::move(ua));
  msg.push_back(kd(KdType::kKeyUpdate, gid, next_epoch, {}));
  send_broadcast(msg, trace);

  for (MemberId m : g.tree.members_under(node)) {
    member_mut(m).known[gid].insert(node);
  }
  g.epoch = next_epoch;
  return trace;
}

void GroupController::on_message(const std::string& from, const Bytes& data) {
  OpTrace discard;
  for (const CakePayload& p : decode_sequence(data)) {
    const KdPayload* kdp = std::get_if<KdPayload>(&p);
    if (kdp == nullptr) continue;
    auto reply = [&](KdType type, Bytes material) {
      send_unicast(from, {kd(type, 0, 0, std::move(material))}, discard);
    };
    switch (kdp->key_type) {
      case KdType::kDhInit: {
        auto it = endpoint_to_member_.find(from);
        if (it == endpoint_to_member_.end()) {
          reply(KdType::kAuthFail, {});
          break;
        }
        MemberRecord& rec = member_mut(it->second);
        DhSecret own = dh_generate(rng_);
        rec.session_key =
            initial_key_agreement(bn::from_bytes(kdp->material), own);
        reply(KdType::kDhResp, bn::to_bytes(own.public_value, 256));
        break;
      }
      case KdType::kAuthRequest: {
        auto it = endpoint_to_member_.find(from);
        if (it == endpoint_to_member_.end()) {
          reply(KdType::kAuthFail, {});
          break;
        }
        MemberRecord& rec = member_mut(it->second);
        if (!rec.session_key) {
          reply(KdType::kAuthFail, {});
          break;
        }
        Bytes cred = unwrap(*rec.session_key, kdp->material);
        if (sha256(cred) != rec.credential_hash) {
          reply(KdType::kAuthFail, {});
          break;
        }
        rec.registered = true;
        if (!rec.personal) {
          rec.personal = fresh_pair();
          rec.temp_addr = TreeAddress::temporary(next_temp_++);
        }
        reply(KdType::kPersonalPair,
              wrap(*rec.session_key,
                   personal_material(*rec.personal, rec.temp_addr)));
        break;
      }
      default:
        break;  // not controller-bound
    }
  }
}

}  // namespace cake
