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
// A complete simulated deployment: one network, one controller, n
// client endpoints, all derived from a single seed. Copyable so that
// exhaustive secrecy suites can fork a prepared world per scenario
// instead of rebuilding it.

#ifndef CAKE_WORLD_HPP
#define CAKE_WORLD_HPP

#include <map>
#include <string>
#include <vector>

#include "cake/client.hpp"
#include "cake/controller.hpp"
#include "cake/transport.hpp"

namespace cake {

class World {
 public:
  World(uint64_t seed, size_t n_members);

  World(const World& other);
  World& operator=(const World& other);

  Network& net() { return net_; }
  GroupController& gc() { return gc_; }
  Client& client(MemberId id) { return clients_.at(id); }
  const Client& client(MemberId id) const { return clients_.at(id); }
  std::vector<MemberId> member_ids() const;
  size_t size() const { return clients_.size(); }

  static std::string endpoint_name(MemberId id);
  static Bytes credential_for(uint64_t seed, MemberId id);

  // Registers every client over the wire and drains the network.
  void register_all();
  void run() { net_.run_until_quiescent(); }

  // Consistency sweep used by scenario assertions: every member of every
  // group tracks the controller's epoch, GTEK and GKEK.
  bool states_converged() const;

 private:
  void rebind();

  uint64_t seed_;
  Network net_;
  GroupController gc_;
  std::map<MemberId, Client> clients_;
};

}  // namespace cake

#endif  // CAKE_WORLD_HPP
