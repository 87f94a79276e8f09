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

#include "cake/gkmp.hpp"

#include "cake/errors.hpp"
#include "cake/messages.hpp"

namespace cake::gkmp {

namespace {

constexpr const char* kGcEndpoint = "gkmp-gc";

// Broadcast record material: 12 bytes of per-member addressing (member
// id, then zero padding) followed by one wrapped key. 40 bytes on the
// wire with the KD header.
Bytes record_material(MemberId id, const Bytes& wrapped) {
  Bytes m;
  put_u32(m, id);
  m.resize(12, 0);
  put_bytes(m, wrapped);
  return m;
}

}  // namespace

void GkmpClient::on_message(const Bytes& data) {
  for (const CakePayload& p : decode_sequence(data)) {
    const KdPayload* kd = std::get_if<KdPayload>(&p);
    if (kd == nullptr) continue;
    switch (kd->key_type) {
      case KdType::kPersonalPair: {
        // Join provisioning: personal key, then both group keys under it.
        if (kd->material.size() != 48) break;
        personal_ = key_from_bytes(kd->material, 0);
        Bytes keys = unwrap(personal_,
                            Bytes(kd->material.begin() + 16,
                                  kd->material.end()));
        kek_ = key_from_bytes(keys, 0);
        tek_ = key_from_bytes(keys, 16);
        has_keys_ = true;
        tek_history_.push_back(tek_);
        break;
      }
      case KdType::kGroupPairUnderPersonal: {
        if (kd->material.size() == 32) {
          // Unicast rekey: kek' || tek' wrapped under the personal key.
          Bytes keys = unwrap(personal_, kd->material);
          kek_ = key_from_bytes(keys, 0);
          tek_ = key_from_bytes(keys, 16);
          has_keys_ = true;
          tek_history_.push_back(tek_);
        } else if (kd->material.size() == 28) {
          // Broadcast member record: only ours is addressed to us.
          ByteReader r(kd->material);
          if (r.u32() != id_) break;
          Bytes wrapped(kd->material.begin() + 12, kd->material.end());
          kek_ = key_from_bytes(unwrap(personal_, wrapped));
        }
        break;
      }
      case KdType::kGtekUnderGkek: {
        // Broadcast TEK record, last in the message: needs the kek from
        // this client's member record.
        if (kd->material.size() != 28) break;
        Bytes wrapped(kd->material.begin() + 12, kd->material.end());
        tek_ = key_from_bytes(unwrap(kek_, wrapped));
        has_keys_ = true;
        tek_history_.push_back(tek_);
        break;
      }
      default:
        break;
    }
  }
}

bool GkmpClient::can_read_probe(const Bytes& probe,
                                const Bytes& expected) const {
  return has_keys_ && unwrap(tek_, probe) == expected;
}

GkmpWorld::GkmpWorld(uint64_t seed, size_t n)
    : seed_(seed), rng_(Drbg(seed).fork("gkmp")), net_(seed) {
  net_.register_endpoint(kGcEndpoint,
                         [](const std::string&, const Bytes&) {});
  kek_ = random_key(rng_);
  tek_ = random_key(rng_);
  for (size_t i = 1; i <= n; ++i) {
    MemberId id = static_cast<MemberId>(i);
    SymKey personal = random_key(rng_);
    member_keys_[id] = personal;
    clients_.emplace(id, GkmpClient(id, personal));
  }
  for (auto& [id, c] : clients_) {
    net_.register_endpoint(endpoint(id),
                           [&c](const std::string&, const Bytes& d) {
                             c.on_message(d);
                           });
  }
  next_id_ = static_cast<MemberId>(n + 1);
  // Initial provisioning uses the unicast download shape.
  Trace ignored;
  for (auto& [id, c] : clients_) {
    (void)c;
    push_keys_unicast(id, ignored);
  }
  net_.run_until_quiescent();
  net_.reset_stats();
}

std::vector<MemberId> GkmpWorld::member_ids() const {
  // Current members only; clients_ also retains departed listeners.
  std::vector<MemberId> ids;
  ids.reserve(member_keys_.size());
  for (const auto& [id, k] : member_keys_) {
    (void)k;
    ids.push_back(id);
  }
  return ids;
}

std::string GkmpWorld::endpoint(MemberId id) {
  return "gm" + std::to_string(id);
}

void GkmpWorld::push_keys_unicast(MemberId id, Trace& trace) {
  KdPayload kd;
  kd.key_type = KdType::kGroupPairUnderPersonal;
  Bytes material = key_bytes(kek_);
  put_bytes(material, key_bytes(tek_));
  kd.material = wrap(member_keys_.at(id), material);
  Bytes wire = encode(kd);
  trace.unicasts += 1;
  trace.message_bytes.push_back(wire.size());
  net_.unicast(kGcEndpoint, endpoint(id), std::move(wire));
}

Trace GkmpWorld::rekey_unicast() {
  kek_ = random_key(rng_);
  tek_ = random_key(rng_);
  Trace trace;
  for (const auto& [id, k] : member_keys_) {
    (void)k;
    push_keys_unicast(id, trace);
  }
  net_.run_until_quiescent();
  return trace;
}

Trace GkmpWorld::rekey_broadcast() {
  kek_ = random_key(rng_);
  tek_ = random_key(rng_);
  std::vector<CakePayload> msg;
  for (const auto& [id, personal] : member_keys_) {
    KdPayload kd;
    kd.key_type = KdType::kGroupPairUnderPersonal;
    kd.material = record_material(id, wrap(personal, key_bytes(kek_)));
    msg.push_back(kd);
  }
  KdPayload tek_kd;
  tek_kd.key_type = KdType::kGtekUnderGkek;
  tek_kd.material = record_material(0, wrap(kek_, key_bytes(tek_)));
  msg.push_back(tek_kd);

  Bytes wire = encode_sequence(msg);
  Trace trace;
  trace.broadcasts += 1;
  trace.message_bytes.push_back(wire.size());
  net_.broadcast(kGcEndpoint, std::move(wire));
  net_.run_until_quiescent();
  return trace;
}

Trace GkmpWorld::leave(MemberId m) {
  if (member_keys_.erase(m) == 0) fail(Err::kUnknownMember, "not a member");
  // The client object and its endpoint stay: a departed listener still
  // hears broadcasts, it just has no record addressed to it any more.
  // Its state freezes at the last keys it could actually unwrap.
  return rekey_broadcast();
}

Trace GkmpWorld::join(MemberId m) {
  if (member_keys_.count(m) > 0) fail(Err::kDuplicateMember, "already in");
  // Old members first, so the newcomer never sees the previous keys.
  Trace trace = rekey_broadcast();

  SymKey personal = random_key(rng_);
  member_keys_[m] = personal;
  clients_.erase(m);  // drop any departed predecessor under this id
  clients_.emplace(m, GkmpClient(m, SymKey{}));
  GkmpClient& c = clients_.at(m);
  net_.register_endpoint(endpoint(m),
                         [&c](const std::string&, const Bytes& d) {
                           c.on_message(d);
                         });

  KdPayload kd;
  kd.key_type = KdType::kPersonalPair;
  Bytes material = key_bytes(personal);
  Bytes keys = key_bytes(kek_);
  put_bytes(keys, key_bytes(tek_));
  put_bytes(material, wrap(personal, keys));
  kd.material = std::move(material);
  Bytes wire = encode(kd);
  trace.unicasts += 1;
  trace.message_bytes.push_back(wire.size());
  net_.unicast(kGcEndpoint, endpoint(m), std::move(wire));
  net_.run_until_quiescent();
  return trace;
}

Trace GkmpWorld::key_download() {
  Trace trace;
  for (const auto& [id, k] : member_keys_) {
    (void)k;
    push_keys_unicast(id, trace);
  }
  net_.run_until_quiescent();
  return trace;
}

}  // namespace cake::gkmp
