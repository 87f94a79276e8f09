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

#include "cake/lkh.hpp"

#include <bit>
#include <set>

#include "cake/bytes.hpp"
#include "cake/errors.hpp"

namespace cake::lkh {

namespace {

constexpr const char* kGcEndpoint = "lkh-gc";
constexpr uint8_t kKindUpdate = 0x02;
constexpr uint8_t kKindDownload = 0x01;
constexpr uint8_t kKindKd = 0x05;
constexpr uint8_t kKdTypeTek = 0x02;

struct UpdateRecord {
  NodeId node;
  NodeId wrapped_under;
  Bytes wrapped;  // 16 bytes
};

// One update array; `sibling` names the shared target subtree, zero for
// the mixed optimized array.
void put_update_array(Bytes& out, NodeId sibling, uint16_t epoch,
                      const std::vector<UpdateRecord>& records) {
  if (sibling > 0xffff) fail(Err::kOversize, "sibling id");
  put_u8(out, kKindUpdate);
  put_u8(out, 0);
  put_u16(out, static_cast<uint16_t>(sibling));
  put_u16(out, static_cast<uint16_t>(records.size()));
  put_u16(out, epoch);
  for (const UpdateRecord& r : records) {
    if (r.node > 0xffff || r.wrapped_under > 0xffff) {
      fail(Err::kOversize, "node id beyond the 16-bit update format");
    }
    put_u16(out, static_cast<uint16_t>(r.node));
    put_u16(out, static_cast<uint16_t>(r.wrapped_under));
    put_u16(out, static_cast<uint16_t>(r.wrapped.size()));
    put_u16(out, 0);
    put_bytes(out, r.wrapped);
  }
}

void put_download_record(Bytes& out, NodeId node, NodeId wrapped_under,
                         const Bytes& wrapped) {
  put_u32(out, node);
  put_u32(out, wrapped_under);
  put_u16(out, static_cast<uint16_t>(wrapped.size()));
  put_u16(out, 0);
  put_bytes(out, wrapped);
}

void put_tek_kd(Bytes& out, uint16_t epoch, const Bytes& wrapped) {
  put_u8(out, kKindKd);
  put_u8(out, kKdTypeTek);
  put_u32(out, 0);  // single group
  put_u16(out, epoch);
  put_u16(out, 0);
  put_u16(out, static_cast<uint16_t>(wrapped.size()));
  put_bytes(out, wrapped);
}

}  // namespace

size_t unoptimized_leave_bytes(int changed_keys) {
  // One array per sibling subtree depth i = 1..d, carrying i keys.
  size_t d = static_cast<size_t>(changed_keys);
  return d * kUpdateArrayHeaderLen + (d * (d + 1) / 2) * kUpdateKeyLen;
}

size_t optimized_leave_bytes(int changed_keys) {
  size_t d = static_cast<size_t>(changed_keys);
  return kUpdateArrayHeaderLen + (2 * d - 1) * kUpdateKeyLen;
}

size_t key_download_bytes(size_t members) {
  // A full binary tree with n leaves has n - 1 internal keys.
  return kDownloadHeaderLen + (members - 1) * kDownloadKeyLen;
}

void LkhClient::install(NodeId node, const SymKey& k) {
  path_[node] = k;
  key_history_.push_back(k);
}

void LkhClient::set_tek(const SymKey& tek) {
  tek_ = tek;
  key_history_.push_back(tek);
}

void LkhClient::on_message(const Bytes& data) {
  ByteReader r(data);
  while (!r.done()) {
    uint8_t kind = r.u8();
    if (kind == kKindUpdate) {
      r.u8();
      r.u16();  // sibling subtree hint; reach shows in the records
      uint16_t count = r.u16();
      r.u16();  // epoch
      for (uint16_t i = 0; i < count; ++i) {
        NodeId node = r.u16();
        NodeId under = r.u16();
        uint16_t len = r.u16();
        r.u16();
        Bytes wrapped = r.take(len);
        auto it = path_.find(under);
        if (it == path_.end()) continue;  // not addressed through us
        install(node, key_from_bytes(unwrap(it->second, wrapped)));
      }
    } else if (kind == kKindDownload) {
      r.u8();
      uint16_t count = r.u16();
      for (uint16_t i = 0; i < count; ++i) {
        NodeId node = r.u32();
        NodeId under = r.u32();
        uint16_t len = r.u16();
        r.u16();
        Bytes wrapped = r.take(len);
        auto it = path_.find(under);
        if (it == path_.end()) continue;
        SymKey k = key_from_bytes(unwrap(it->second, wrapped));
        if (node == 0) {
          set_tek(k);  // node zero carries the traffic key
        } else {
          install(node, k);
        }
      }
    } else if (kind == kKindKd) {
      r.u8();
      r.u32();
      r.u16();
      r.u16();
      uint16_t len = r.u16();
      Bytes wrapped = r.take(len);
      auto it = path_.find(1);  // TEK comes wrapped under the root key
      if (it == path_.end()) continue;
      set_tek(key_from_bytes(unwrap(it->second, wrapped)));
    } else {
      fail(Err::kBadKind, "unknown lkh payload");
    }
  }
}

bool LkhClient::can_read_probe(const Bytes& probe,
                               const Bytes& expected) const {
  return unwrap(tek_, probe) == expected;
}

LkhWorld::LkhWorld(uint64_t seed, size_t n, int levels)
    : seed_(seed), rng_(Drbg(seed).fork("lkh")), net_(seed), levels_(levels) {
  if (levels < 2 || levels > kMaxLevels) {
    fail(Err::kBadBitLength, "levels out of range");
  }
  size_t capacity = size_t{1} << (levels_ - 1);
  if (n > capacity) fail(Err::kOverCapacity, "more members than leaves");

  net_.register_endpoint(kGcEndpoint,
                         [](const std::string&, const Bytes&) {});
  for (NodeId node = 1; node < static_cast<NodeId>(capacity); ++node) {
    keys_[node] = random_key(rng_);
  }
  tek_ = random_key(rng_);

  for (size_t i = 1; i <= n; ++i) {
    MemberId id = static_cast<MemberId>(i);
    NodeId leaf = place_leaf();
    leaves_[id] = leaf;
    leaf_owner_[leaf] = id;
    keys_[leaf] = random_key(rng_);
    clients_.emplace(id, LkhClient(id, leaf));
  }
  next_id_ = static_cast<MemberId>(n + 1);

  // Out-of-band provisioning: each member starts with its leaf key, the
  // keys on its path, and the traffic key.
  for (auto& [id, c] : clients_) {
    for (NodeId node = leaves_.at(id); node >= 1; node /= 2) {
      c.install(node, keys_.at(node));
    }
    c.set_tek(tek_);
    net_.register_endpoint(endpoint(id),
                           [&c](const std::string&, const Bytes& d) {
                             c.on_message(d);
                           });
  }
}

std::vector<MemberId> LkhWorld::member_ids() const {
  std::vector<MemberId> ids;
  ids.reserve(leaves_.size());
  for (const auto& [id, leaf] : leaves_) {
    (void)leaf;
    ids.push_back(id);
  }
  return ids;
}

std::string LkhWorld::endpoint(MemberId id) {
  return "lm" + std::to_string(id);
}

int LkhWorld::depth_of(NodeId n) const {
  return static_cast<int>(std::bit_width(n));
}

NodeId LkhWorld::place_leaf() {
  NodeId first = NodeId{1} << (levels_ - 1);
  NodeId end = NodeId{1} << levels_;
  for (NodeId leaf = first; leaf < end; ++leaf) {
    if (leaf_owner_.count(leaf) == 0) return leaf;
  }
  fail(Err::kOverCapacity, "no free leaf");
}

Trace LkhWorld::leave(MemberId m, bool optimized) {
  auto it = leaves_.find(m);
  if (it == leaves_.end()) fail(Err::kUnknownMember, "not a member");
  NodeId leaf = it->second;
  leaves_.erase(it);
  leaf_owner_.erase(leaf);
  keys_.erase(leaf);
  // Like the flat baseline, the departed client keeps listening with
  // whatever keys it last held.

  int d = levels_ - 1;  // changed keys: every level above the leaf
  epoch_ += 1;

  // path[0] is the leaf's parent, path[d - 1] the root; the key at
  // level l sits at index d - l.
  std::vector<NodeId> path;
  std::vector<SymKey> new_keys;
  for (NodeId node = leaf / 2; node >= 1; node /= 2) {
    path.push_back(node);
    new_keys.push_back(random_key(rng_));
  }

  Bytes wire;
  size_t arrays = 0;
  if (!optimized) {
    // One array per surviving subtree: the subtree hanging off the path
    // at depth i receives the i changed keys above it, all wrapped under
    // its own unchanged key. Deepest subtree first.
    for (int i = d; i >= 1; --i) {
      NodeId sibling = (leaf >> (d - i)) ^ 1;
      auto sk = keys_.find(sibling);
      if (sk == keys_.end()) continue;  // vacant sibling leaf
      std::vector<UpdateRecord> records;
      for (int level = i; level >= 1; --level) {
        size_t idx = static_cast<size_t>(d - level);
        records.push_back(UpdateRecord{
            path[idx], sibling,
            wrap(sk->second, key_bytes(new_keys[idx]))});
      }
      put_update_array(wire, sibling, epoch_, records);
      arrays += 1;
    }
  } else {
    // One mixed array: each new key under its off-path child's old key
    // and under its on-path child's new key. Deepest first, so members
    // can chain upward in a single pass.
    std::vector<UpdateRecord> records;
    for (size_t i = 0; i < path.size(); ++i) {
      NodeId off_child = (i == 0) ? (leaf ^ 1) : (path[i - 1] ^ 1);
      auto oc = keys_.find(off_child);
      if (oc != keys_.end()) {
        records.push_back(UpdateRecord{
            path[i], off_child, wrap(oc->second, key_bytes(new_keys[i]))});
      }
      if (i > 0) {
        records.push_back(UpdateRecord{
            path[i], path[i - 1],
            wrap(new_keys[i - 1], key_bytes(new_keys[i]))});
      }
    }
    put_update_array(wire, 0, epoch_, records);
    arrays += 1;
  }
  for (size_t i = 0; i < path.size(); ++i) keys_[path[i]] = new_keys[i];
  tek_ = random_key(rng_);
  last_optimized_bytes_ = optimized_leave_bytes(d);
  put_tek_kd(wire, epoch_, wrap(keys_.at(1), key_bytes(tek_)));

  Trace trace;
  trace.update_arrays = arrays;
  trace.broadcasts = 1;
  trace.message_bytes.push_back(wire.size());
  net_.broadcast(kGcEndpoint, std::move(wire));
  net_.run_until_quiescent();
  return trace;
}

Trace LkhWorld::key_download() {
  // Cost probe for initial provisioning: one record per live internal
  // key, each wrapped under a live child's key, in one message. A full
  // tree with n members emits exactly n - 1 records.
  std::set<NodeId> live;
  for (const auto& [id, leaf] : leaves_) {
    (void)id;
    for (NodeId node = leaf / 2; node >= 1; node /= 2) live.insert(node);
  }
  Bytes body;
  size_t count = 0;
  for (NodeId node : live) {
    NodeId child = node * 2;
    auto ck = keys_.find(child);
    if (ck == keys_.end()) {
      child = node * 2 + 1;
      ck = keys_.find(child);
    }
    if (ck == keys_.end()) continue;
    put_download_record(body, node, child,
                        wrap(ck->second, key_bytes(keys_.at(node))));
    count += 1;
  }
  Bytes wire;
  put_u8(wire, kKindDownload);
  put_u8(wire, 0);
  put_u16(wire, static_cast<uint16_t>(count));
  put_bytes(wire, body);

  Trace trace;
  trace.broadcasts = 1;
  trace.message_bytes.push_back(wire.size());
  net_.broadcast(kGcEndpoint, std::move(wire));
  net_.run_until_quiescent();
  return trace;
}

Trace LkhWorld::join(MemberId m) {
  if (leaves_.count(m) > 0) fail(Err::kDuplicateMember, "already in");
  NodeId leaf = place_leaf();

  // Fresh keys along the new path, delivered to the old members in the
  // optimized arrangement before the joiner holds anything.
  epoch_ += 1;
  std::vector<NodeId> path;
  std::vector<SymKey> new_keys;
  for (NodeId node = leaf / 2; node >= 1; node /= 2) {
    path.push_back(node);
    new_keys.push_back(random_key(rng_));
  }
  std::vector<UpdateRecord> records;
  for (size_t i = 0; i < path.size(); ++i) {
    NodeId off_child = (i == 0) ? (leaf ^ 1) : (path[i - 1] ^ 1);
    auto oc = keys_.find(off_child);
    if (oc != keys_.end()) {
      records.push_back(UpdateRecord{
          path[i], off_child, wrap(oc->second, key_bytes(new_keys[i]))});
    }
    if (i > 0) {
      records.push_back(UpdateRecord{
          path[i], path[i - 1],
          wrap(new_keys[i - 1], key_bytes(new_keys[i]))});
    }
  }
  for (size_t i = 0; i < path.size(); ++i) keys_[path[i]] = new_keys[i];
  tek_ = random_key(rng_);
  Bytes wire;
  put_update_array(wire, 0, epoch_, records);
  put_tek_kd(wire, epoch_, wrap(keys_.at(1), key_bytes(tek_)));

  Trace trace;
  trace.update_arrays = 1;
  trace.broadcasts = 1;
  trace.message_bytes.push_back(wire.size());
  net_.broadcast(kGcEndpoint, std::move(wire));

  // Provision the joiner: a personal leaf key handed over out-of-band
  // (registration is outside this baseline), then its path and the TEK
  // in download format wrapped under that leaf key.
  leaves_[m] = leaf;
  leaf_owner_[leaf] = m;
  keys_[leaf] = random_key(rng_);
  clients_.erase(m);  // drop any departed predecessor under this id
  clients_.emplace(m, LkhClient(m, leaf));
  LkhClient& c = clients_.at(m);
  c.install(leaf, keys_.at(leaf));
  net_.register_endpoint(endpoint(m),
                         [&c](const std::string&, const Bytes& d) {
                           c.on_message(d);
                         });
  push_path_unicast(m, trace);
  net_.run_until_quiescent();
  return trace;
}

void LkhWorld::push_path_unicast(MemberId id, Trace& trace) {
  NodeId leaf = leaves_.at(id);
  Bytes body;
  size_t count = 0;
  for (NodeId node = leaf / 2; node >= 1; node /= 2) {
    put_download_record(body, node, leaf,
                        wrap(keys_.at(leaf), key_bytes(keys_.at(node))));
    count += 1;
  }
  put_download_record(body, 0, leaf, wrap(keys_.at(leaf), key_bytes(tek_)));
  count += 1;

  Bytes wire;
  put_u8(wire, kKindDownload);
  put_u8(wire, 0);
  put_u16(wire, static_cast<uint16_t>(count));
  put_bytes(wire, body);
  trace.unicasts += 1;
  trace.message_bytes.push_back(wire.size());
  net_.unicast(kGcEndpoint, endpoint(id), std::move(wire));
}

Trace LkhWorld::rekey() {
  epoch_ += 1;
  tek_ = random_key(rng_);
  Bytes wire;
  put_tek_kd(wire, epoch_, wrap(keys_.at(1), key_bytes(tek_)));
  Trace trace;
  trace.broadcasts = 1;
  trace.message_bytes.push_back(wire.size());
  net_.broadcast(kGcEndpoint, std::move(wire));
  net_.run_until_quiescent();
  return trace;
}

}  // namespace cake::lkh
