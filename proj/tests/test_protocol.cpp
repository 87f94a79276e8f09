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
// End-to-end flows over the simulated network: registration, group
// creation, membership changes, tree maintenance, merge and split. The
// controller and the clients only ever talk through encoded payloads,
// so these tests exercise the full wire contract.

#include <string>
#include <vector>

#include "cake/errors.hpp"
#include "cake/world.hpp"
#include "doctest.h"

using namespace cake;

namespace {

Bytes probe_for(const SymKey& tek, const Bytes& expected) {
  return wrap(tek, expected);
}

const Bytes kProbeText = {'o', 'k', '!', 0x00, 0x7f, 0xff};

// True when every current group member can decrypt a probe sealed under
// the controller's current traffic key.
bool all_members_read(const World& w, const GroupController& gc,
                      uint32_t gid) {
  Bytes probe = probe_for(gc.group(gid).gtek, kProbeText);
  for (const auto& [m, leaf] : gc.group(gid).tree.member_leaves()) {
    (void)leaf;
    if (!w.client(m).can_read_probe(gid, probe, kProbeText)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("registration provisions personal pairs over the wire") {
  World w(101, 5);
  w.register_all();
  for (MemberId m : w.member_ids()) {
    const Client& c = w.client(m);
    CHECK(c.registered());
    CHECK_FALSE(c.auth_failed());
    REQUIRE(c.personal_address().has_value());
    CHECK(c.personal_address()->is_temporary());
    // Controller and client agree on the personal pair.
    const MemberRecord& rec = w.gc().member(m);
    CHECK(rec.registered);
    REQUIRE(rec.personal.has_value());
    CHECK(rec.personal->key == c.personal_pair().key);
    CHECK(rec.personal->m.value == c.personal_pair().m.value);
  }
  // Four unicasts per registration: DH init, DH response, credential,
  // personal pair.
  CHECK(w.net().stats().unicasts == 4 * 5);
  CHECK(w.net().stats().broadcasts == 0);
}

TEST_CASE("registration rejects a wrong credential") {
  Network net(3);
  GroupController gc(&net, 3);
  gc.register_endpoint();
  gc.add_expected_member(1, "m1", {1, 2, 3});
  Client c(1, "m1", &net, {9, 9, 9}, 3);
  c.register_endpoint();
  c.start_registration();
  net.run_until_quiescent();
  CHECK(c.auth_failed());
  CHECK_FALSE(c.registered());
  CHECK_FALSE(gc.member(1).registered);
}

TEST_CASE("create: one broadcast, everyone keyed") {
  World w(7, 9);
  w.register_all();
  CHECK_FALSE(w.client(1).can_read_probe(1, {1, 2}, {1, 2}));

  OpTrace t = w.gc().create_group(1, w.member_ids());
  w.run();
  CHECK(t.broadcasts == 1);
  CHECK(t.unicasts == 0);
  REQUIRE(t.locks.size() == 1);
  CHECK(t.locks[0].first == 9);  // one element per founding member
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 1));

  // Founding members hold their leaf and the root, nothing between.
  const ClientGroupState& st = w.client(5).group(1);
  CHECK(st.path_keys.size() == 1);
  CHECK(st.path_keys.count(TreeAddress::root()) == 1);
  CHECK(w.gc().group(1).epoch == 0);
}

TEST_CASE("create rejects bad preconditions") {
  World w(8, 3);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.run();
  CHECK_THROWS_AS(w.gc().create_group(1, w.member_ids()), Error);
  CHECK_THROWS_AS(w.gc().create_group(2, {99}), Error);

  World fresh(9, 3);  // nobody registered yet
  CHECK_THROWS_AS(fresh.gc().create_group(1, fresh.member_ids()), Error);
}

TEST_CASE("distribute_tree hands every member its full path") {
  World w(7, 9);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.run();

  OpTrace t = w.gc().distribute_tree(1);
  w.run();
  CHECK(t.broadcasts == 1);
  CHECK(t.unicasts == 0);
  // Nine members sit at depth 2: locks for root plus three internals.
  CHECK(t.locks.size() == 4);
  CHECK(w.states_converged());
  for (MemberId m : w.member_ids()) {
    const ClientGroupState& st = w.client(m).group(1);
    CHECK(st.path_keys.size() == 2);  // parent internal + root
    TreeAddress parent = st.leaf.parent();
    REQUIRE(st.path_keys.count(parent) == 1);
    CHECK(st.path_keys.at(parent).key ==
          w.gc().group(1).tree.pair_at(parent).key);
  }
}

TEST_CASE("leave: one broadcast, one solve and one unwrap per survivor") {
  World w(7, 9);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.gc().distribute_tree(1);
  w.run();
  SymKey old_tek = w.gc().group(1).gtek;
  for (MemberId m : w.member_ids()) w.client(m).reset_counters();

  OpTrace t = w.gc().leave(1, 5);
  w.run();
  CHECK(t.broadcasts == 1);
  CHECK(t.unicasts == 0);
  REQUIRE(t.locks.size() == 1);
  CHECK(t.locks[0].first == 4);  // two sibling leaves + two subtree roots

  CHECK_FALSE(w.client(5).in_group(1));
  CHECK(w.client(5).last_status() == ProcessStatus::kEvicted);
  // Own-leaf-marked eviction never touches the lock.
  CHECK(w.client(5).counters().lock_solves == 0);

  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 1));
  for (MemberId m : w.member_ids()) {
    if (m == 5) continue;
    const ClientCounters& c = w.client(m).counters();
    CHECK(c.lock_solves == 1);
    CHECK(c.slot_unwraps == 1);
    CHECK(c.kd_unwraps == 1);
  }
  // Old traffic key is gone from every survivor.
  Bytes stale = probe_for(old_tek, kProbeText);
  for (MemberId m : w.member_ids()) {
    CHECK_FALSE(w.client(m).can_read_probe(1, stale, kProbeText));
  }
  CHECK_THROWS_AS(w.gc().leave(1, 5), Error);  // already out
}

TEST_CASE("leave of several members shares the single broadcast") {
  World w(17, 9);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.gc().distribute_tree(1);
  w.run();
  for (MemberId m : w.member_ids()) w.client(m).reset_counters();

  OpTrace t = w.gc().leave_many(1, {4, 5});
  w.run();
  CHECK(t.broadcasts == 1);
  CHECK_FALSE(w.client(4).in_group(1));
  CHECK_FALSE(w.client(5).in_group(1));
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 1));
  for (MemberId m : w.member_ids()) {
    if (m == 4 || m == 5) continue;
    CHECK(w.client(m).counters().lock_solves == 1);
    CHECK(w.client(m).counters().slot_unwraps == 1);
  }
}

TEST_CASE("leave of the whole group dissolves it") {
  World w(12, 3);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.run();
  OpTrace t = w.gc().leave_many(1, {1, 2, 3});
  w.run();
  CHECK(t.broadcasts == 1);
  CHECK_FALSE(w.gc().has_group(1));
  for (MemberId m : w.member_ids()) CHECK_FALSE(w.client(m).in_group(1));
}

TEST_CASE("update_paths repairs pairs replaced by a leave") {
  World w(7, 9);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.gc().distribute_tree(1);
  w.run();
  w.gc().leave(1, 5);
  w.run();
  REQUIRE(w.gc().group(1).pending_update.size() == 1);
  TreeAddress repaired = *w.gc().group(1).pending_update.begin();

  OpTrace t = w.gc().update_paths(1);
  w.run();
  CHECK(t.broadcasts == 1);
  CHECK(w.gc().group(1).pending_update.empty());
  CHECK(w.states_converged());
  for (MemberId m : w.gc().group(1).tree.members_under(repaired)) {
    CHECK(w.client(m).group(1).path_keys.at(repaired).key ==
          w.gc().group(1).tree.pair_at(repaired).key);
  }

  // Nothing pending: the repair pass is a no-op with no traffic.
  OpTrace t2 = w.gc().update_paths(1);
  CHECK(t2.messages() == 0);
}

TEST_CASE("join: one unicast then one broadcast") {
  World w(7, 9);
  w.register_all();
  std::vector<MemberId> founders = {1, 2, 3, 4, 5, 6, 7, 8};
  w.gc().create_group(1, founders);
  w.gc().distribute_tree(1);
  w.run();
  uint16_t epoch_before = w.gc().group(1).epoch;

  OpTrace t = w.gc().join(1, 9);
  w.run();
  CHECK(t.unicasts == 1);
  CHECK(t.broadcasts == 1);
  CHECK(w.gc().group(1).epoch == epoch_before + 1);
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 1));
  // The joiner holds its whole path immediately.
  const ClientGroupState& st = w.client(9).group(1);
  CHECK(st.path_keys.size() == static_cast<size_t>(st.leaf.depth()));
  CHECK_THROWS_AS(w.gc().join(1, 9), Error);   // already in
  CHECK_THROWS_AS(w.gc().join(42, 1), Error);  // no such group
}

TEST_CASE("join that converts a leaf relocates the displaced member") {
  World w(31, 4);
  w.register_all();
  w.gc().create_group(1, {1, 2, 3});
  w.run();
  CHECK(w.gc().group(1).tree.leaf_of(1) == TreeAddress(0x1000));

  OpTrace t = w.gc().join(1, 4);
  w.run();
  CHECK(t.unicasts == 1);
  CHECK(t.broadcasts == 1);
  CHECK(w.gc().group(1).tree.leaf_of(1) == TreeAddress(0x1400));
  CHECK(w.gc().group(1).tree.leaf_of(4) == TreeAddress(0x1800));
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 1));
  // The displaced member received the fresh internal pair from the
  // relocation repair.
  CHECK(w.client(1).group(1).path_keys.count(TreeAddress(0x1000)) == 1);
}

TEST_CASE("a member with a burned pair rejoins with a fresh one") {
  World w(7, 9);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.gc().distribute_tree(1);
  w.run();
  w.gc().leave(1, 5);
  w.run();
  CHECK(w.gc().member(5).pair_burned);
  mpz_class burned_m = w.client(5).personal_pair().m.value;

  w.gc().join(1, 5);
  w.run();
  CHECK_FALSE(w.gc().member(5).pair_burned);
  CHECK(w.client(5).personal_pair().m.value != burned_m);
  CHECK(w.client(5).in_group(1));
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 1));
}

TEST_CASE("mass join: two broadcasts regardless of batch size") {
  World w(7, 13);
  w.register_all();
  std::vector<MemberId> founders = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  w.gc().create_group(1, founders);
  w.gc().distribute_tree(1);
  w.run();

  OpTrace t = w.gc().mass_join(1, {10, 11, 12, 13});
  w.run();
  CHECK(t.broadcasts == 2);
  CHECK(t.unicasts == 0);
  CHECK(w.gc().group(1).tree.member_count() == 13);
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 1));
  for (MemberId m : {10u, 11u, 12u, 13u}) {
    const ClientGroupState& st = w.client(m).group(1);
    CHECK(st.path_keys.size() == static_cast<size_t>(st.leaf.depth()));
  }
}

TEST_CASE("mass join, unicast variant: one message per joiner plus repairs") {
  World w(19, 8);
  w.register_all();
  w.gc().create_group(1, {1, 2, 3, 4, 5});
  w.gc().distribute_tree(1);
  w.run();

  OpTrace t = w.gc().mass_join(1, {6, 7, 8}, /*lock_mode=*/false);
  w.run();
  CHECK(t.unicasts == 3);
  CHECK(t.broadcasts == 1);
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 1));
}

TEST_CASE("rekey: notice derives forward, wrapped replaces outright") {
  World w(7, 6);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.run();
  SymKey tek0 = w.gc().group(1).gtek;

  OpTrace t1 = w.gc().rekey(1);
  w.run();
  CHECK(t1.broadcasts == 1);
  CHECK(t1.locks.empty());  // notice carries no material at all
  CHECK(w.gc().group(1).gtek == derive_next(tek0));
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 1));

  SymKey tek1 = w.gc().group(1).gtek;
  OpTrace t2 = w.gc().rekey(1, /*force_wrapped=*/true);
  w.run();
  CHECK(t2.broadcasts == 1);
  CHECK(w.gc().group(1).gtek != derive_next(tek1));
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 1));
}

TEST_CASE("tree_op_update refreshes one internal pair") {
  World w(7, 9);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.gc().distribute_tree(1);
  w.run();
  TreeAddress node(0x1000);
  SymKey before = w.gc().group(1).tree.pair_at(node).key;

  OpTrace t = w.gc().tree_op_update(1, node);
  w.run();
  CHECK(t.broadcasts == 1);
  CHECK(w.gc().group(1).tree.pair_at(node).key != before);
  CHECK(w.states_converged());
  for (MemberId m : w.gc().group(1).tree.members_under(node)) {
    CHECK(w.client(m).group(1).path_keys.at(node).key ==
          w.gc().group(1).tree.pair_at(node).key);
  }
  CHECK_THROWS_AS(w.gc().tree_op_update(1, TreeAddress::root()), Error);
  CHECK_THROWS_AS(w.gc().tree_op_update(1, TreeAddress(0x2400)), Error);
}

TEST_CASE("merge: one broadcast per absorbed group") {
  World w(5, 7);
  w.register_all();
  w.gc().create_group(1, {1, 2, 3, 4});
  w.gc().create_group(2, {5, 6, 7});
  w.run();

  OpTrace t = w.gc().merge({1, 2}, 5);
  w.run();
  CHECK(t.broadcasts == 2);
  CHECK(t.unicasts == 0);
  CHECK_FALSE(w.gc().has_group(1));
  CHECK_FALSE(w.gc().has_group(2));
  REQUIRE(w.gc().has_group(5));
  CHECK(w.gc().group(5).tree.member_count() == 7);
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 5));
  for (MemberId m : w.member_ids()) {
    CHECK_FALSE(w.client(m).in_group(1));
    CHECK_FALSE(w.client(m).in_group(2));
  }
  CHECK_THROWS_AS(w.gc().merge({5}, 6), Error);  // too few sources
}

TEST_CASE("merge of three groups") {
  World w(23, 9);
  w.register_all();
  w.gc().create_group(1, {1, 2, 3});
  w.gc().create_group(2, {4, 5, 6});
  w.gc().create_group(3, {7, 8, 9});
  w.run();
  OpTrace t = w.gc().merge({1, 2, 3}, 4);
  w.run();
  CHECK(t.broadcasts == 3);
  CHECK(w.gc().group(4).tree.member_count() == 9);
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), 4));
}

TEST_CASE("split: one broadcast per part, old group dissolved") {
  World w(7, 9);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.gc().distribute_tree(1);
  w.run();

  OpTrace t;
  std::vector<uint32_t> gids =
      w.gc().split(1, {{1, 2, 3, 4}, {5, 6, 7, 8, 9}}, &t);
  w.run();
  REQUIRE(gids.size() == 2);
  CHECK(t.broadcasts == 2);
  CHECK_FALSE(w.gc().has_group(1));
  CHECK(w.gc().group(gids[0]).tree.member_count() == 4);
  CHECK(w.gc().group(gids[1]).tree.member_count() == 5);
  CHECK(w.states_converged());
  CHECK(all_members_read(w, w.gc(), gids[0]));
  CHECK(all_members_read(w, w.gc(), gids[1]));
  for (MemberId m : {1u, 2u, 3u, 4u}) {
    CHECK(w.client(m).in_group(gids[0]));
    CHECK_FALSE(w.client(m).in_group(gids[1]));
  }

  // Partitions must cover the membership exactly.
  CHECK_THROWS_AS(w.gc().split(gids[1], {{5, 6}, {7, 8}}), Error);
  CHECK_THROWS_AS(w.gc().split(gids[1], {{5, 6, 7, 8, 9}}), Error);
  CHECK_THROWS_AS(w.gc().split(gids[1], {{5, 6, 7}, {7, 8, 9}}), Error);
}

TEST_CASE("replayed broadcasts are ignored whole") {
  World w(7, 9);
  w.register_all();
  w.gc().create_group(1, w.member_ids());
  w.gc().distribute_tree(1);
  w.run();

  std::vector<Bytes> captured;
  w.net().register_endpoint("sniffer",
                            [&](const std::string&, const Bytes& d) {
                              captured.push_back(d);
                            });
  w.gc().leave(1, 5);
  w.run();
  REQUIRE(captured.size() == 1);
  CHECK(w.states_converged());

  SymKey tek = w.gc().group(1).gtek;
  uint16_t epoch = w.gc().group(1).epoch;
  w.client(3).reset_counters();
  w.net().unicast("sniffer", World::endpoint_name(3), captured[0]);
  w.run();
  CHECK(w.client(3).last_status() == ProcessStatus::kIgnored);
  CHECK(w.client(3).group(1).gtek == tek);
  CHECK(w.client(3).group(1).epoch == epoch);
  CHECK(w.client(3).counters().lock_solves == 0);
  CHECK(w.states_converged());

  // The evicted member ignores it too; it holds no state to corrupt.
  w.net().unicast("sniffer", World::endpoint_name(5), captured[0]);
  w.run();
  CHECK_FALSE(w.client(5).in_group(1));
}

TEST_CASE("copied worlds evolve identically and independently") {
  World a(21, 6);
  a.register_all();
  a.gc().create_group(1, a.member_ids());
  a.gc().distribute_tree(1);
  a.run();
  uint16_t epoch0 = a.gc().group(1).epoch;

  World b = a;
  b.gc().leave(1, 3);
  b.run();
  CHECK(b.states_converged());
  CHECK(a.gc().group(1).epoch == epoch0);  // original untouched
  CHECK(a.gc().group(1).tree.member_count() == 6);

  a.gc().leave(1, 3);
  a.run();
  CHECK(a.states_converged());
  CHECK(a.gc().group(1).gtek == b.gc().group(1).gtek);
  CHECK(a.gc().group(1).gkek == b.gc().group(1).gkek);
  CHECK(a.gc().group(1).epoch == b.gc().group(1).epoch);
}

TEST_CASE("message budget laws hold across sizes") {
  for (size_t n : {4u, 9u, 17u, 40u}) {
    World w(n, n + 4);
    w.register_all();
    std::vector<MemberId> founders;
    for (MemberId m = 1; m <= n; ++m) founders.push_back(m);
    CHECK(w.gc().create_group(1, founders).messages() == 1);
    CHECK(w.gc().distribute_tree(1).messages() == 1);
    CHECK(w.gc().join(1, static_cast<MemberId>(n + 1)).messages() == 2);
    CHECK(w.gc().leave(1, 2).messages() == 1);
    CHECK(w.gc()
              .mass_join(1, {static_cast<MemberId>(n + 2),
                             static_cast<MemberId>(n + 3),
                             static_cast<MemberId>(n + 4)})
              .messages() == 2);
    CHECK(w.gc().rekey(1).messages() == 1);
    w.run();
    CHECK(w.states_converged());
    CHECK(all_members_read(w, w.gc(), 1));
  }
}
