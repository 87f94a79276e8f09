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

#include <bit>
#include <chrono>
#include <functional>

#include "cake/bench.hpp"
#include "cake/errors.hpp"
#include "cake/gkmp.hpp"
#include "cake/lkh.hpp"
#include "cake/world.hpp"

namespace cake::bench {

namespace {

// Unified view of a measured operation, whichever scheme produced it.
struct Measured {
  size_t unicasts = 0;
  size_t broadcasts = 0;
  std::vector<size_t> message_bytes;
  std::vector<std::pair<uint16_t, uint16_t>> locks;  // (elements, bytes)
  size_t formula_bytes = 0;
  bool converged = true;
  double elapsed_ms = 0.0;

  size_t total_bytes() const {
    size_t t = 0;
    for (size_t b : message_bytes) t += b;
    return t;
  }
};

struct Law {
  size_t unicasts = 0;
  size_t broadcasts = 0;
};

void absorb(Measured& m, const OpTrace& t) {
  m.unicasts += t.unicasts;
  m.broadcasts += t.broadcasts;
  m.message_bytes.insert(m.message_bytes.end(), t.message_bytes.begin(),
                         t.message_bytes.end());
  m.locks.insert(m.locks.end(), t.locks.begin(), t.locks.end());
}

void absorb(Measured& m, const gkmp::Trace& t) {
  m.unicasts += t.unicasts;
  m.broadcasts += t.broadcasts;
  m.message_bytes.insert(m.message_bytes.end(), t.message_bytes.begin(),
                         t.message_bytes.end());
}

void absorb(Measured& m, const lkh::Trace& t) {
  m.unicasts += t.unicasts;
  m.broadcasts += t.broadcasts;
  m.message_bytes.insert(m.message_bytes.end(), t.message_bytes.begin(),
                         t.message_bytes.end());
}

const Bytes& probe_text() {
  static const Bytes text = {'b', 'e', 'n', 'c', 'h'};
  return text;
}

// The analytical size model prices every lock at 41 bytes per element
// (the modulus width); everything else is measured structure.
size_t cake_formula(const Measured& m) {
  size_t f = m.total_bytes();
  for (auto [elements, bytes] : m.locks) {
    f -= bytes;
    f += size_t{41} * elements;
  }
  return f;
}

int lkh_levels_for(size_t n, bool need_vacancy) {
  size_t want = n + (need_vacancy ? 1 : 0);
  if (want < 2) want = 2;
  int levels = static_cast<int>(std::bit_width(want - 1)) + 1;
  return levels;
}

bool cake_group_readable(World& w, uint32_t gid) {
  if (!w.gc().has_group(gid)) return true;  // dissolved groups have no readers
  Bytes probe = wrap(w.gc().group(gid).gtek, probe_text());
  for (const auto& [m, leaf] : w.gc().group(gid).tree.member_leaves()) {
    (void)leaf;
    if (!w.client(m).can_read_probe(gid, probe, probe_text())) return false;
  }
  return true;
}

std::vector<std::vector<MemberId>> chunk_members(size_t n, size_t parts) {
  std::vector<std::vector<MemberId>> out(parts);
  size_t base = n / parts, extra = n % parts;
  MemberId next = 1;
  for (size_t i = 0; i < parts; ++i) {
    size_t len = base + (i < extra ? 1 : 0);
    for (size_t j = 0; j < len; ++j) out[i].push_back(next++);
  }
  return out;
}

Measured run_cake(const ScenarioSpec& spec, Law& law) {
  const size_t n = spec.members;
  const size_t batch = spec.batch > 0 ? spec.batch : 1;
  Measured m;
  using clock = std::chrono::steady_clock;

  auto timed = [&](World& w, const std::function<void()>& op) {
    auto t0 = clock::now();
    op();
    w.run();
    auto t1 = clock::now();
    m.elapsed_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
  };

  if (spec.scenario == "create") {
    World w(spec.seed, n);
    w.register_all();
    timed(w, [&] { absorb(m, w.gc().create_group(1, w.member_ids())); });
    law = {0, 1};
    m.converged = w.states_converged() && cake_group_readable(w, 1);
  } else if (spec.scenario == "key_download") {
    World w(spec.seed, n);
    w.register_all();
    w.gc().create_group(1, w.member_ids());
    w.run();
    timed(w, [&] { absorb(m, w.gc().distribute_tree(1)); });
    law = {0, 1};
    m.converged = w.states_converged() && cake_group_readable(w, 1);
  } else if (spec.scenario == "join") {
    World w(spec.seed, n + 1);
    w.register_all();
    std::vector<MemberId> founders;
    for (MemberId i = 1; i <= n; ++i) founders.push_back(i);
    w.gc().create_group(1, founders);
    w.gc().distribute_tree(1);
    w.run();
    timed(w, [&] {
      absorb(m, w.gc().join(1, static_cast<MemberId>(n + 1)));
    });
    law = {1, 1};
    m.converged = w.states_converged() && cake_group_readable(w, 1);
  } else if (spec.scenario == "mass_join") {
    bool lock_mode = spec.variant.empty() || spec.variant == "lock";
    if (!lock_mode && spec.variant != "individual") {
      fail(Err::kBadKind, "mass_join variant: lock | individual");
    }
    World w(spec.seed, n + batch);
    w.register_all();
    std::vector<MemberId> founders, joiners;
    for (MemberId i = 1; i <= n; ++i) founders.push_back(i);
    for (MemberId i = 1; i <= batch; ++i) {
      joiners.push_back(static_cast<MemberId>(n + i));
    }
    w.gc().create_group(1, founders);
    w.gc().distribute_tree(1);
    w.run();
    timed(w, [&] { absorb(m, w.gc().mass_join(1, joiners, lock_mode)); });
    law = lock_mode ? Law{0, 2} : Law{batch, 1};
    m.converged = w.states_converged() && cake_group_readable(w, 1);
  } else if (spec.scenario == "leave") {
    World w(spec.seed, n);
    w.register_all();
    w.gc().create_group(1, w.member_ids());
    w.gc().distribute_tree(1);
    w.run();
    if (batch > n) fail(Err::kInvalidPartition, "more leavers than members");
    std::vector<MemberId> leavers;
    for (MemberId i = 1; i <= batch; ++i) leavers.push_back(i);
    timed(w, [&] { absorb(m, w.gc().leave_many(1, leavers)); });
    law = {0, 1};
    m.converged = w.states_converged() && cake_group_readable(w, 1);
  } else if (spec.scenario == "merge") {
    size_t sources = batch < 2 ? 2 : batch;
    if (sources > 3) fail(Err::kInvalidPartition, "merge takes 2 or 3 groups");
    if (n < sources) fail(Err::kEmptySubgroup, "not enough members");
    World w(spec.seed, n);
    w.register_all();
    auto parts = chunk_members(n, sources);
    std::vector<uint32_t> gids;
    for (size_t i = 0; i < sources; ++i) {
      gids.push_back(static_cast<uint32_t>(i + 1));
      w.gc().create_group(gids.back(), parts[i]);
    }
    w.run();
    uint32_t merged = static_cast<uint32_t>(sources + 1);
    timed(w, [&] { absorb(m, w.gc().merge(gids, merged)); });
    law = {0, sources};
    m.converged = w.states_converged() && cake_group_readable(w, merged);
  } else if (spec.scenario == "split") {
    size_t parts_n = batch < 2 ? 2 : batch;
    if (n < parts_n) fail(Err::kEmptySubgroup, "not enough members");
    World w(spec.seed, n);
    w.register_all();
    w.gc().create_group(1, w.member_ids());
    w.gc().distribute_tree(1);
    w.run();
    auto parts = chunk_members(n, parts_n);
    std::vector<uint32_t> gids;
    timed(w, [&] {
      OpTrace t;
      gids = w.gc().split(1, parts, &t);
      absorb(m, t);
    });
    law = {0, parts_n};
    m.converged = w.states_converged();
    for (uint32_t gid : gids) {
      m.converged = m.converged && cake_group_readable(w, gid);
    }
  } else if (spec.scenario == "rekey") {
    bool wrapped = spec.variant == "wrapped";
    if (!wrapped && !spec.variant.empty() && spec.variant != "notice") {
      fail(Err::kBadKind, "rekey variant: notice | wrapped");
    }
    World w(spec.seed, n);
    w.register_all();
    w.gc().create_group(1, w.member_ids());
    w.run();
    timed(w, [&] { absorb(m, w.gc().rekey(1, wrapped)); });
    law = {0, 1};
    m.converged = w.states_converged() && cake_group_readable(w, 1);
  } else if (spec.scenario == "tree_op") {
    World w(spec.seed, n);
    w.register_all();
    w.gc().create_group(1, w.member_ids());
    w.gc().distribute_tree(1);
    w.run();
    TreeAddress node;
    bool found = false;
    for (const auto& [a, kp] : w.gc().group(1).tree.nodes()) {
      (void)kp;
      if (a.is_root() || w.gc().group(1).tree.is_member_leaf(a)) continue;
      node = a;
      found = true;
      break;
    }
    if (!found) fail(Err::kUnknownAddress, "no internal node to update");
    timed(w, [&] { absorb(m, w.gc().tree_op_update(1, node)); });
    law = {0, 1};
    m.converged = w.states_converged() && cake_group_readable(w, 1);
  } else {
    fail(Err::kBadKind, "unknown cake scenario: " + spec.scenario);
  }

  m.formula_bytes = cake_formula(m);
  return m;
}

Measured run_gkmp(const ScenarioSpec& spec, Law& law) {
  const size_t n = spec.members;
  Measured m;
  using clock = std::chrono::steady_clock;
  gkmp::GkmpWorld w(spec.seed, n);

  auto t0 = clock::now();
  if (spec.scenario == "rekey") {
    bool unicast = spec.variant == "unicast";
    if (!unicast && !spec.variant.empty() && spec.variant != "broadcast") {
      fail(Err::kBadKind, "gkmp rekey variant: unicast | broadcast");
    }
    absorb(m, unicast ? w.rekey_unicast() : w.rekey_broadcast());
    law = unicast ? Law{n, 0} : Law{0, 1};
    m.formula_bytes = unicast ? n * gkmp::kUnicastRekeyBytes
                              : (n + 1) * gkmp::kBroadcastRecordBytes;
  } else if (spec.scenario == "leave") {
    absorb(m, w.leave(1));
    law = {0, 1};
    m.formula_bytes = n * gkmp::kBroadcastRecordBytes;  // n-1 members + tek
  } else if (spec.scenario == "join") {
    absorb(m, w.join(static_cast<MemberId>(n + 1)));
    law = {1, 1};
    m.formula_bytes = (n + 1) * gkmp::kBroadcastRecordBytes + 60;
  } else if (spec.scenario == "key_download") {
    absorb(m, w.key_download());
    law = {n, 0};
    m.formula_bytes = n * gkmp::kUnicastRekeyBytes;
  } else {
    fail(Err::kBadKind, "unknown gkmp scenario: " + spec.scenario);
  }
  auto t1 = clock::now();
  m.elapsed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  Bytes probe = wrap(w.tek(), probe_text());
  for (MemberId id : w.member_ids()) {
    if (!w.client(id).can_read_probe(probe, probe_text())) {
      m.converged = false;
    }
  }
  return m;
}

Measured run_lkh(const ScenarioSpec& spec, Law& law) {
  const size_t n = spec.members;
  Measured m;
  using clock = std::chrono::steady_clock;

  bool vacancy = spec.scenario == "join";
  int levels = lkh_levels_for(n, vacancy);
  lkh::LkhWorld w(spec.seed, n, levels);
  int d = levels - 1;

  auto t0 = clock::now();
  if (spec.scenario == "leave") {
    bool optimized = spec.variant == "optimized";
    if (!optimized && !spec.variant.empty() &&
        spec.variant != "unoptimized") {
      fail(Err::kBadKind, "lkh leave variant: unoptimized | optimized");
    }
    absorb(m, w.leave(1, optimized));
    law = {0, 1};
    m.formula_bytes = (optimized ? lkh::optimized_leave_bytes(d)
                                 : lkh::unoptimized_leave_bytes(d)) +
                      28;
  } else if (spec.scenario == "key_download") {
    absorb(m, w.key_download());
    law = {0, 1};
    m.formula_bytes = lkh::key_download_bytes(n);
  } else if (spec.scenario == "join") {
    absorb(m, w.join(static_cast<MemberId>(n + 1)));
    law = {1, 1};
    m.formula_bytes = 0;  // not part of the size model
  } else if (spec.scenario == "rekey") {
    absorb(m, w.rekey());
    law = {0, 1};
    m.formula_bytes = 28;
  } else {
    fail(Err::kBadKind, "unknown lkh scenario: " + spec.scenario);
  }
  auto t1 = clock::now();
  m.elapsed_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  Bytes probe = wrap(w.tek(), probe_text());
  for (MemberId id : w.member_ids()) {
    if (!w.client(id).can_read_probe(probe, probe_text())) {
      m.converged = false;
    }
  }
  return m;
}

// Lock sizes for one to fourteen recipients under one seed: the measured
// counterpart of the published size table.
ScenarioReport run_table2(const ScenarioSpec& spec) {
  ModulusGenerator gen(Drbg(spec.seed).fork("table2"));
  Drbg payload_rng = Drbg(spec.seed).fork("table2-payload");

  Json rows = Json::array();
  size_t total = 0, formula = 0;
  uint16_t max_bytes = 0;
  for (int k = 1; k <= 14; ++k) {
    std::vector<KeyPair> recipients;
    for (int i = 0; i < k; ++i) recipients.push_back(gen.generate_pair());
    Bytes payload = payload_rng.bytes(kSymKeyLen);
    LockMX lock = seal_to_group(recipients, payload);
    total += lock.byte_length;
    formula += size_t{41} * static_cast<size_t>(k);
    max_bytes = std::max(max_bytes, lock.byte_length);
    Json row;
    row["elements"] = k;
    row["lock_bytes"] = lock.byte_length;
    row["slot_bytes"] = payload.size() + kTagLen;
    row["formula_bytes"] = 41 * k;
    rows.push_back(std::move(row));
  }

  ScenarioReport r;
  r.data["scheme"] = spec.scheme;
  r.data["scenario"] = spec.scenario;
  r.data["members"] = spec.members;
  r.data["batch"] = spec.batch;
  r.data["seed"] = spec.seed;
  r.data["variant"] = spec.variant;
  r.data["ok"] = true;
  r.data["messages"] = 0;
  r.data["unicasts"] = 0;
  r.data["broadcasts"] = 0;
  r.data["total_bytes"] = total;
  r.data["max_message_bytes"] = 0;
  r.data["formula_bytes"] = formula;
  r.data["lock_count"] = 14;
  r.data["lock_bytes_max"] = max_bytes;
  r.data["rows"] = std::move(rows);
  return r;
}

}  // namespace

ScenarioReport run_scenario(const ScenarioSpec& spec) {
  if (spec.scheme != "cake" && spec.scheme != "lkh" &&
      spec.scheme != "gkmp") {
    fail(Err::kBadKind, "unknown scheme: " + spec.scheme);
  }
  if (spec.scenario == "table2") {
    if (spec.scheme != "cake") {
      fail(Err::kBadKind, "table2 is a cake scenario");
    }
    return run_table2(spec);
  }
  if (spec.members == 0) fail(Err::kEmptySubgroup, "members required");

  Law law;
  Measured m;
  if (spec.scheme == "cake") {
    m = run_cake(spec, law);
  } else if (spec.scheme == "gkmp") {
    m = run_gkmp(spec, law);
  } else {
    m = run_lkh(spec, law);
  }

  bool law_ok = m.unicasts == law.unicasts && m.broadcasts == law.broadcasts;
  size_t max_msg = 0;
  for (size_t b : m.message_bytes) max_msg = std::max(max_msg, b);
  uint16_t lock_max = 0;
  for (auto [e, b] : m.locks) {
    (void)e;
    lock_max = std::max(lock_max, b);
  }

  ScenarioReport r;
  r.ok = law_ok && m.converged;
  r.data["scheme"] = spec.scheme;
  r.data["scenario"] = spec.scenario;
  r.data["members"] = spec.members;
  r.data["batch"] = spec.batch;
  r.data["seed"] = spec.seed;
  r.data["variant"] = spec.variant;
  r.data["ok"] = r.ok;
  r.data["messages"] = m.unicasts + m.broadcasts;
  r.data["unicasts"] = m.unicasts;
  r.data["broadcasts"] = m.broadcasts;
  r.data["total_bytes"] = m.total_bytes();
  r.data["max_message_bytes"] = max_msg;
  r.data["formula_bytes"] = m.formula_bytes;
  r.data["lock_count"] = m.locks.size();
  r.data["lock_bytes_max"] = lock_max;
  r.data["message_bytes"] = m.message_bytes;
  Json locks = Json::array();
  for (auto [e, b] : m.locks) locks.push_back(Json::array({e, b}));
  r.data["locks"] = std::move(locks);
  if (spec.timing) r.data["elapsed_ms"] = m.elapsed_ms;
  if (!law_ok) {
    r.data["error"] = "message count law violated";
  } else if (!m.converged) {
    r.data["error"] = "member states diverged";
  }
  return r;
}

std::vector<ScenarioReport> run_suite(uint64_t seed) {
  auto spec = [seed](const std::string& scheme, const std::string& scenario,
                     size_t members, size_t batch = 1,
                     const std::string& variant = "") {
    ScenarioSpec s;
    s.scheme = scheme;
    s.scenario = scenario;
    s.members = members;
    s.batch = batch;
    s.seed = seed;
    s.variant = variant;
    return s;
  };

  std::vector<ScenarioSpec> specs = {
      spec("cake", "create", 27),
      spec("cake", "join", 27),
      spec("cake", "mass_join", 27, 4),
      spec("cake", "mass_join", 12, 3, "individual"),
      spec("cake", "key_download", 27),
      spec("cake", "leave", 27),
      spec("cake", "leave", 27, 3),
      spec("cake", "merge", 12, 2),
      spec("cake", "merge", 15, 3),
      spec("cake", "split", 12, 2),
      spec("cake", "rekey", 9, 1, "notice"),
      spec("cake", "rekey", 9, 1, "wrapped"),
      spec("cake", "tree_op", 9),
      spec("cake", "table2", 0),
      spec("lkh", "leave", 1024),
      spec("lkh", "leave", 1024, 1, "optimized"),
      spec("lkh", "key_download", 2048),
      spec("lkh", "join", 16),
      spec("lkh", "rekey", 64),
      spec("gkmp", "rekey", 2187),
      spec("gkmp", "rekey", 64, 1, "unicast"),
      spec("gkmp", "leave", 64),
      spec("gkmp", "join", 64),
      spec("gkmp", "key_download", 64),
  };

  std::vector<ScenarioReport> out;
  out.reserve(specs.size());
  for (const ScenarioSpec& s : specs) out.push_back(run_scenario(s));
  return out;
}

}  // namespace cake::bench
