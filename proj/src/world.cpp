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

#include "cake/world.hpp"

#include "cake/crypto.hpp"

namespace cake {

World::World(uint64_t seed, size_t n_members)
    : seed_(seed), net_(seed), gc_(&net_, seed) {
  gc_.register_endpoint();
  for (size_t i = 1; i <= n_members; ++i) {
    MemberId id = static_cast<MemberId>(i);
    std::string ep = endpoint_name(id);
    Bytes cred = credential_for(seed, id);
    gc_.add_expected_member(id, ep, cred);
    clients_.emplace(id, Client(id, ep, &net_, cred, seed));
  }
  for (auto& [id, c] : clients_) {
    (void)id;
    c.register_endpoint();
  }
}

World::World(const World& other)
    : seed_(other.seed_),
      net_(other.net_),
      gc_(other.gc_),
      clients_(other.clients_) {
  rebind();
}

World& World::operator=(const World& other) {
  if (this == &other) return *this;
  seed_ = other.seed_;
  net_ = other.net_;
  gc_ = other.gc_;
  clients_ = other.clients_;
  rebind();
  return *this;
}

void World::rebind() {
  // The copied network still holds handlers bound to the source world's
  // objects; re-registration swaps in this world's.
  gc_.attach(&net_);
  gc_.register_endpoint();
  for (auto& [id, c] : clients_) {
    (void)id;
    c.attach(&net_);
    c.register_endpoint();
  }
}

std::vector<MemberId> World::member_ids() const {
  std::vector<MemberId> ids;
  ids.reserve(clients_.size());
  for (const auto& [id, c] : clients_) {
    (void)c;
    ids.push_back(id);
  }
  return ids;
}

std::string World::endpoint_name(MemberId id) {
  return "m" + std::to_string(id);
}

Bytes World::credential_for(uint64_t seed, MemberId id) {
  return Drbg(seed).fork("cred-" + std::to_string(id)).bytes(16);
}

void World::register_all() {
  for (auto& [id, c] : clients_) {
    (void)id;
    c.start_registration();
  }
  run();
}

bool World::states_converged() const {
  for (const auto& [gid, g] : gc_.groups_) {
    size_t claimed = 0;
    for (const auto& [id, c] : clients_) {
      (void)id;
      if (c.in_group(gid)) claimed += 1;
    }
    if (claimed != g.tree.member_count()) return false;
    for (const auto& [m, leaf] : g.tree.member_leaves()) {
      auto it = clients_.find(m);
      if (it == clients_.end()) return false;
      const Client& c = it->second;
      if (!c.in_group(gid)) return false;
      const ClientGroupState& st = c.group(gid);
      if (st.epoch != g.epoch) return false;
      if (st.gtek != g.gtek) return false;
      if (st.gkek != g.gkek) return false;
      if (!(st.leaf == leaf)) return false;
    }
  }
  return true;
}

}  // namespace cake
