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

#include "cake/client.hpp"

#include <algorithm>

#include "cake/crypto.hpp"
#include "cake/errors.hpp"

namespace cake {

// Tentative state for a group this message is pulling the client into
// (create, join unicast, mass join, split, merge). Committed only when
// the message both addressed this client and delivered the group pair.
struct Client::Scratch {
  bool entering = false;
  bool commit = false;
  bool leaf_set = false;
  uint32_t gid = 0;
  // Group the epoch-bearing payload belongs to; merge and split pull
  // pairs out of this group's state.
  uint32_t source_gid = 0;
  bool have_source = false;
  ClientGroupState st;
};

Client::Client(MemberId id, std::string endpoint, Network* net,
               Bytes credential, uint64_t seed)
    : id_(id),
      endpoint_(std::move(endpoint)),
      net_(net),
      credential_(std::move(credential)),
      rng_(Drbg(seed).fork("client-" + std::to_string(id))) {}

void Client::attach(Network* net) { net_ = net; }

void Client::register_endpoint() {
  net_->register_endpoint(
      endpoint_, [this](const std::string& from, const Bytes& data) {
        on_message(from, data);
      });
}

void Client::start_registration() {
  dh_ = dh_generate(rng_);
  KdPayload p;
  p.key_type = KdType::kDhInit;
  p.material = bn::to_bytes(dh_->public_value, 256);
  net_->unicast(endpoint_, "gc", encode_sequence({p}));
}

const KeyPair& Client::personal_pair() const {
  if (!personal_) fail(Err::kAuthFailed, "not registered");
  return *personal_;
}

const ClientGroupState& Client::group(uint32_t gid) const {
  auto it = groups_.find(gid);
  if (it == groups_.end()) fail(Err::kUnknownGroup, "not a member");
  return it->second;
}

std::vector<uint32_t> Client::group_ids() const {
  std::vector<uint32_t> ids;
  ids.reserve(groups_.size());
  for (const auto& [gid, st] : groups_) {
    (void)st;
    ids.push_back(gid);
  }
  return ids;
}

bool Client::can_read_probe(uint32_t gid, const Bytes& probe,
                            const Bytes& expected) const {
  auto it = groups_.find(gid);
  if (it == groups_.end()) return false;
  return unwrap(it->second.gtek, probe) == expected;
}

void Client::on_message(const std::string& from, const Bytes& data) {
  (void)from;
  last_status_ = process_payloads(decode_sequence(data));
}

std::optional<Bytes> Client::try_open(const LockMX& lock, const KeyPair& kp) {
  counters_.lock_solves += 1;
  counters_.slot_unwraps += 1;
  return open_slot(lock, kp, kSymKeyLen);
}

void Client::remember_pair(const KeyPair& kp) {
  pair_history_.push_back(kp);
  symkey_history_.push_back(kp.key);
}

void Client::remember_key(const SymKey& k) { symkey_history_.push_back(k); }

void Client::install_path_key(ClientGroupState& st, TreeAddress a,
                              HeldPair hp) {
  if (hp.m) remember_pair(KeyPair{Modulus{*hp.m}, hp.key});
  remember_key(hp.key);
  if (a.is_root()) st.gkek = hp.key;
  st.path_keys[a] = std::move(hp);
}

namespace {

bool epoch_bearing(KdType t) {
  switch (t) {
    case KdType::kGroupPairUnderGkek:
    case KdType::kGtekUnderGkek:
    case KdType::kRekeyNotice:
    case KdType::kGroupPairUnderPersonal:
    case KdType::kKeyUpdate:
      return true;
    default:
      return false;
  }
}

}  // namespace

ProcessStatus Client::process_payloads(const std::vector<CakePayload>& seq) {
  Scratch sc;
  uint32_t context_gid = 0;

  // Replay gate: every group-mutating message carries one epoch-bearing
  // key-delivery payload; a message at or below the current epoch is
  // dropped whole so partial replays cannot corrupt held state.
  for (const CakePayload& p : seq) {
    const KdPayload* k = std::get_if<KdPayload>(&p);
    if (k == nullptr || k->group_id == 0) continue;
    if (!sc.have_source) {
      sc.have_source = true;
      sc.source_gid = k->group_id;
    }
    if (epoch_bearing(k->key_type)) {
      auto it = groups_.find(k->group_id);
      if (it != groups_.end() && k->epoch <= it->second.epoch) {
        return ProcessStatus::kIgnored;
      }
      break;
    }
  }
  for (const CakePayload& p : seq) {
    if (const auto* pol = std::get_if<GsaPolicy>(&p)) {
      context_gid = pol->group_id;
      break;
    }
    if (const auto* k = std::get_if<KdPayload>(&p)) {
      if (k->group_id != 0) {
        context_gid = k->group_id;
        break;
      }
    }
  }

  bool changed = false;
  bool evicted = false;
  for (const CakePayload& p : seq) {
    if (const auto* pol = std::get_if<GsaPolicy>(&p)) {
      if (groups_.count(pol->group_id) == 0) {
        sc.entering = true;
        sc.gid = pol->group_id;
        sc.st = ClientGroupState{};
        sc.leaf_set = false;
        sc.commit = false;
      }
    } else if (const auto* ra = std::get_if<ReaddressArray>(&p)) {
      changed |= handle_readdress(*ra, context_gid, sc);
    } else if (const auto* da = std::get_if<DownloadArray>(&p)) {
      changed |= handle_download(*da, context_gid, sc);
    } else if (const auto* ua = std::get_if<UpdateArray>(&p)) {
      changed |= handle_update(*ua, context_gid);
    } else if (const auto* la = std::get_if<LeaveArray>(&p)) {
      ProcessStatus s = handle_leave(*la, context_gid);
      if (s == ProcessStatus::kEvicted) evicted = true;
      if (s == ProcessStatus::kApplied) changed = true;
    } else if (const auto* k = std::get_if<KdPayload>(&p)) {
      changed |= handle_kd(*k, sc);
    }
  }

  if (sc.entering && sc.commit && sc.leaf_set &&
      sc.st.path_keys.count(TreeAddress::root()) > 0) {
    remember_pair(sc.st.leaf_pair);
    remember_key(sc.st.gkek);
    remember_key(sc.st.gtek);
    groups_[sc.gid] = std::move(sc.st);
    changed = true;
  }

  if (evicted) return ProcessStatus::kEvicted;
  return changed ? ProcessStatus::kApplied : ProcessStatus::kIgnored;
}

bool Client::handle_readdress(const ReaddressArray& arr, uint32_t gid,
                              Scratch& sc) {
  bool changed = false;
  for (const auto& [from, to] : arr.moves) {
    if (sc.entering) {
      if (personal_ && personal_addr_ && from == *personal_addr_) {
        // Temporary slot to leaf: the personal pair becomes the leaf pair.
        sc.st.leaf = to;
        sc.st.leaf_pair = *personal_;
        sc.leaf_set = true;
        changed = true;
      } else if (from.is_root() && sc.have_source &&
                 groups_.count(sc.source_gid) > 0) {
        // Whole-tree graft (merge): rebase every held address.
        const ClientGroupState& src = groups_[sc.source_gid];
        TreeAddress root = TreeAddress::root();
        sc.st.leaf = root.rebase(src.leaf, to);
        sc.st.leaf_pair = src.leaf_pair;
        sc.leaf_set = true;
        for (const auto& [a, hp] : src.path_keys) {
          sc.st.path_keys[root.rebase(a, to)] = hp;
        }
        changed = true;
      } else {
        // Leaf relocation out of an existing group (split).
        for (auto& [g, st] : groups_) {
          if (st.leaf == from) {
            sc.st.leaf = to;
            sc.st.leaf_pair = st.leaf_pair;
            sc.leaf_set = true;
            if (!sc.have_source) {
              sc.have_source = true;
              sc.source_gid = g;
            }
            changed = true;
            break;
          }
        }
      }
    } else {
      auto it = groups_.find(gid);
      if (it == groups_.end()) continue;
      ClientGroupState& st = it->second;
      if (st.leaf == from) {
        st.leaf = to;
        changed = true;
      } else if (st.path_keys.count(from) > 0) {
        st.path_keys[to] = st.path_keys[from];
        st.path_keys.erase(from);
        changed = true;
      }
    }
  }
  return changed;
}

// Candidate pairs for opening a substructure addressed to `key_id`:
// held full pairs strictly below it, direct children first.
static std::vector<KeyPair> descendant_candidates(const ClientGroupState& st,
                                                  TreeAddress key_id) {
  std::vector<std::pair<TreeAddress, KeyPair>> held;
  if (key_id == st.leaf || key_id.is_ancestor_of(st.leaf)) {
    held.emplace_back(st.leaf, st.leaf_pair);
  }
  for (const auto& [a, hp] : st.path_keys) {
    if (!hp.m) continue;
    if (key_id.is_ancestor_of(a)) {
      held.emplace_back(a, KeyPair{Modulus{*hp.m}, hp.key});
    }
  }
  std::sort(held.begin(), held.end(),
            [&](const auto& x, const auto& y) {
              bool xc = x.first.parent() == key_id;
              bool yc = y.first.parent() == key_id;
              if (xc != yc) return xc;
              if (x.first.depth() != y.first.depth()) {
                return x.first.depth() > y.first.depth();
              }
              return x.first.code() < y.first.code();
            });
  std::vector<KeyPair> out;
  out.reserve(held.size());
  for (auto& [a, kp] : held) {
    (void)a;
    out.push_back(kp);
  }
  return out;
}

bool Client::handle_download(const DownloadArray& arr, uint32_t gid,
                             Scratch& sc) {
  ClientGroupState* st = nullptr;
  if (sc.entering) {
    st = &sc.st;
  } else {
    auto it = groups_.find(gid);
    if (it == groups_.end()) return false;
    st = &it->second;
  }

  bool changed = false;
  for (const KeysSubstructure& sub : arr.keys) {
    LockMX lock = lock_from_bytes(sub.crt_blob, 0);

    std::vector<KeyPair> candidates;
    if (sc.entering) {
      if (sc.leaf_set) candidates.push_back(st->leaf_pair);
      if (sc.have_source) {
        auto sit = groups_.find(sc.source_gid);
        if (sit != groups_.end()) {
          candidates.push_back(sit->second.leaf_pair);
          for (const auto& [a, hp] : sit->second.path_keys) {
            (void)a;
            if (hp.m) candidates.push_back(KeyPair{Modulus{*hp.m}, hp.key});
          }
        }
      }
    } else {
      candidates = descendant_candidates(*st, sub.key_id);
    }

    for (const KeyPair& kp : candidates) {
      auto payload = try_open(lock, kp);
      if (!payload) continue;
      HeldPair hp;
      hp.key = key_from_bytes(*payload);
      if (!sub.m_blob.empty()) {
        hp.m = bn::from_bytes(unwrap(hp.key, sub.m_blob));
      }
      install_path_key(*st, sub.key_id, std::move(hp));
      changed = true;
      break;
    }
  }
  return changed;
}

bool Client::handle_update(const UpdateArray& arr, uint32_t gid) {
  auto it = groups_.find(gid);
  if (it == groups_.end()) return false;
  ClientGroupState& st = it->second;

  bool changed = false;
  for (const KeysSubstructure& sub : arr.keys) {
    LockMX lock = lock_from_bytes(sub.crt_blob, 0);
    for (const KeyPair& kp : descendant_candidates(st, sub.key_id)) {
      auto payload = try_open(lock, kp);
      if (!payload) continue;
      HeldPair hp;
      hp.key = key_from_bytes(*payload);
      if (!sub.m_blob.empty()) {
        hp.m = bn::from_bytes(unwrap(hp.key, sub.m_blob));
      }
      install_path_key(st, sub.key_id, std::move(hp));
      changed = true;
      break;
    }
  }
  return changed;
}

ProcessStatus Client::handle_leave(const LeaveArray& arr, uint32_t gid) {
  auto it = groups_.find(gid);
  if (it == groups_.end()) return ProcessStatus::kIgnored;
  ClientGroupState& st = it->second;

  std::set<TreeAddress> marked(arr.leaves.begin(), arr.leaves.end());
  if (marked.count(st.leaf) > 0) {
    groups_.erase(it);
    return ProcessStatus::kEvicted;
  }

  // The one held pair that is an unmarked child of a marked node is the
  // survivor's slot in the lock; everything else is fallback for
  // degraded covers.
  std::vector<std::pair<TreeAddress, KeyPair>> held;
  held.emplace_back(st.leaf, st.leaf_pair);
  for (const auto& [a, hp] : st.path_keys) {
    if (hp.m) held.emplace_back(a, KeyPair{Modulus{*hp.m}, hp.key});
  }
  std::stable_sort(held.begin(), held.end(),
                   [&](const auto& x, const auto& y) {
                     auto crossing = [&](const auto& e) {
                       return marked.count(e.first) == 0 &&
                              marked.count(e.first.parent()) > 0;
                     };
                     bool xc = crossing(x), yc = crossing(y);
                     if (xc != yc) return xc;
                     return x.first.code() < y.first.code();
                   });

  std::optional<SymKey> new_gkek;
  for (const auto& [a, kp] : held) {
    (void)a;
    for (const KeysSubstructure& sub : arr.keys) {
      LockMX lock = lock_from_bytes(sub.crt_blob, 0);
      auto payload = try_open(lock, kp);
      if (payload) {
        new_gkek = key_from_bytes(*payload);
        break;
      }
    }
    if (new_gkek) break;
  }
  if (!new_gkek) {
    // Not reachable by the cover: this client was excluded.
    groups_.erase(it);
    return ProcessStatus::kEvicted;
  }

  // Marked pairs are dead: the controller replaced them. The root's
  // replacement arrived in this very lock.
  for (TreeAddress a : marked) st.path_keys.erase(a);
  install_path_key(st, TreeAddress::root(), HeldPair{*new_gkek, std::nullopt});
  return ProcessStatus::kApplied;
}

void Client::handle_registration_kd(const KdPayload& kd) {
  switch (kd.key_type) {
    case KdType::kDhResp: {
      if (!dh_) return;
      session_ = initial_key_agreement(bn::from_bytes(kd.material), *dh_);
      remember_key(*session_);
      KdPayload req;
      req.key_type = KdType::kAuthRequest;
      req.material = wrap(*session_, credential_);
      net_->unicast(endpoint_, "gc", encode_sequence({req}));
      break;
    }
    case KdType::kPersonalPair: {
      if (!session_) return;
      counters_.kd_unwraps += 1;
      Bytes buf = unwrap(*session_, kd.material);
      if (buf.size() != kModulusBytes + kSymKeyLen + 2) return;
      KeyPair kp;
      kp.m.value = bn::from_bytes(buf.data(), kModulusBytes);
      kp.key = key_from_bytes(buf, kModulusBytes);
      personal_ = kp;
      personal_addr_ = TreeAddress(static_cast<uint16_t>(
          (buf[kModulusBytes + kSymKeyLen] << 8) |
          buf[kModulusBytes + kSymKeyLen + 1]));
      auth_failed_ = false;
      remember_pair(kp);
      break;
    }
    case KdType::kAuthFail:
      auth_failed_ = true;
      break;
    default:
      break;
  }
}

bool Client::handle_kd(const KdPayload& kd, Scratch& sc) {
  if (kd.group_id == 0) {
    bool was_registered = registered();
    bool was_failed = auth_failed_;
    handle_registration_kd(kd);
    return registered() != was_registered || auth_failed_ != was_failed ||
           kd.key_type == KdType::kPersonalPair;
  }

  switch (kd.key_type) {
    case KdType::kGroupPairUnderGkek: {
      auto it = groups_.find(kd.group_id);
      if (it == groups_.end()) return false;
      if (kd.material.size() != 2 * kSymKeyLen) return false;
      counters_.kd_unwraps += 1;
      Bytes buf = unwrap(it->second.gkek, kd.material);
      SymKey kek = key_from_bytes(buf, 0);
      SymKey tek = key_from_bytes(buf, kSymKeyLen);
      if (sc.entering && sc.have_source && sc.source_gid == kd.group_id) {
        // Merge: the new group pair travels under the old group's KEK.
        sc.st.gkek = kek;
        sc.st.gtek = tek;
        sc.st.epoch = 0;
        install_path_key(sc.st, TreeAddress::root(),
                         HeldPair{kek, std::nullopt});
        sc.commit = true;
        return false;  // commit decides
      }
      ClientGroupState& st = it->second;
      st.gkek = kek;
      st.gtek = tek;
      st.epoch = kd.epoch;
      install_path_key(st, TreeAddress::root(), HeldPair{kek, std::nullopt});
      remember_key(tek);
      return true;
    }
    case KdType::kGtekUnderGkek: {
      if (sc.entering && sc.gid == kd.group_id) {
        if (sc.st.path_keys.count(TreeAddress::root()) == 0) return false;
        counters_.kd_unwraps += 1;
        sc.st.gtek = key_from_bytes(unwrap(sc.st.gkek, kd.material));
        sc.st.epoch = kd.epoch;
        sc.commit = true;
        return false;
      }
      auto it = groups_.find(kd.group_id);
      if (it == groups_.end()) return false;
      counters_.kd_unwraps += 1;
      ClientGroupState& st = it->second;
      st.gtek = key_from_bytes(unwrap(st.gkek, kd.material));
      st.epoch = kd.epoch;
      remember_key(st.gtek);
      return true;
    }
    case KdType::kRekeyNotice: {
      auto it = groups_.find(kd.group_id);
      if (it == groups_.end()) return false;
      ClientGroupState& st = it->second;
      st.gkek = derive_next(st.gkek);
      st.gtek = derive_next(st.gtek);
      st.epoch = kd.epoch;
      auto rit = st.path_keys.find(TreeAddress::root());
      if (rit != st.path_keys.end()) rit->second.key = st.gkek;
      remember_key(st.gkek);
      remember_key(st.gtek);
      return true;
    }
    case KdType::kGroupPairUnderPersonal: {
      if (!sc.entering || sc.gid != kd.group_id || !personal_) return false;
      if (kd.material.size() != 2 * kSymKeyLen) return false;
      counters_.kd_unwraps += 1;
      Bytes buf = unwrap(personal_->key, kd.material);
      sc.st.gkek = key_from_bytes(buf, 0);
      sc.st.gtek = key_from_bytes(buf, kSymKeyLen);
      sc.st.epoch = kd.epoch;
      install_path_key(sc.st, TreeAddress::root(),
                       HeldPair{sc.st.gkek, std::nullopt});
      sc.commit = true;
      return false;
    }
    case KdType::kKeyUpdate: {
      auto it = groups_.find(kd.group_id);
      if (it == groups_.end()) return false;
      it->second.epoch = kd.epoch;
      return true;
    }
    case KdType::kGroupDissolve: {
      return groups_.erase(kd.group_id) > 0;
    }
    default:
      return false;
  }
}

}  // namespace cake
