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
#include "cake/lkh.hpp"

#include "cake/errors.hpp"
#include "doctest.h"

using namespace cake;

namespace {

const Bytes kText = {'p', 'r', 'o', 'b', 'e'};

}  // namespace

TEST_CASE("gkmp: unicast rekey costs 44 bytes per member") {
  gkmp::GkmpWorld w(5, 12);
  gkmp::Trace t = w.rekey_unicast();
  CHECK(t.unicasts == 12);
  CHECK(t.broadcasts == 0);
  for (size_t b : t.message_bytes) CHECK(b == gkmp::kUnicastRekeyBytes);
  CHECK(t.total_bytes() == 12 * gkmp::kUnicastRekeyBytes);
  Bytes probe = wrap(w.tek(), kText);
  for (MemberId m : w.member_ids()) {
    CHECK(w.client(m).can_read_probe(probe, kText));
  }
}

TEST_CASE("gkmp: broadcast rekey is one 40-byte record per member plus one") {
  gkmp::GkmpWorld w(6, 12);
  gkmp::Trace t = w.rekey_broadcast();
  CHECK(t.broadcasts == 1);
  CHECK(t.total_bytes() == (12 + 1) * gkmp::kBroadcastRecordBytes);
  Bytes probe = wrap(w.tek(), kText);
  for (MemberId m : w.member_ids()) {
    CHECK(w.client(m).can_read_probe(probe, kText));
  }
}

TEST_CASE("gkmp: leave rekeys the survivors and shuts out the leaver") {
  gkmp::GkmpWorld w(7, 8);
  SymKey old_tek = w.tek();
  gkmp::Trace t = w.leave(3);
  CHECK(t.broadcasts == 1);
  CHECK(t.total_bytes() == 8 * gkmp::kBroadcastRecordBytes);  // 7 + 1
  Bytes probe = wrap(w.tek(), kText);
  for (MemberId m : w.member_ids()) {
    CHECK(m != 3);
    CHECK(w.client(m).can_read_probe(probe, kText));
  }
  CHECK_FALSE(w.client(3).can_read_probe(probe, kText));
  CHECK_FALSE(wrap(old_tek, kText) == probe);
  CHECK_THROWS_AS(w.leave(3), Error);
}

TEST_CASE("gkmp: join rekeys first, then provisions in sixty bytes") {
  gkmp::GkmpWorld w(8, 5);
  std::vector<SymKey> pre_join_teks = w.client(1).tek_history();
  gkmp::Trace t = w.join(6);
  CHECK(t.broadcasts == 1);
  CHECK(t.unicasts == 1);
  CHECK(t.message_bytes.back() == 60);  // KD header + personal + pair
  Bytes probe = wrap(w.tek(), kText);
  CHECK(w.client(6).can_read_probe(probe, kText));
  for (MemberId m : w.member_ids()) {
    CHECK(w.client(m).can_read_probe(probe, kText));
  }
  // The joiner never held any key that read pre-join traffic.
  for (const SymKey& tek : pre_join_teks) {
    for (const SymKey& held : w.client(6).tek_history()) {
      CHECK_FALSE(held == tek);
    }
  }
  CHECK_THROWS_AS(w.join(6), Error);
}

TEST_CASE("gkmp: key download is one unicast per member") {
  gkmp::GkmpWorld w(9, 10);
  gkmp::Trace t = w.key_download();
  CHECK(t.unicasts == 10);
  CHECK(t.total_bytes() == 10 * gkmp::kUnicastRekeyBytes);
}

TEST_CASE("lkh: closed forms for the leave encodings") {
  CHECK(lkh::unoptimized_leave_bytes(10) == 1400);
  CHECK(lkh::optimized_leave_bytes(10) == 464);
  CHECK(lkh::key_download_bytes(2048) == 4 + 2047 * 28);
  // Component identities behind the sums.
  CHECK(lkh::kUpdateArrayHeaderLen + 3 * lkh::kUpdateKeyLen == 80);
  CHECK(lkh::kDownloadHeaderLen == 4);
  CHECK(lkh::kDownloadKeyLen == 28);
}

TEST_CASE("lkh: unoptimized leave emits the full array cascade") {
  lkh::LkhWorld w(11, 1024, 11);  // full tree, d = 10
  SymKey old_tek = w.tek();
  lkh::Trace t = w.leave(100, /*optimized=*/false);
  CHECK(t.broadcasts == 1);
  CHECK(t.update_arrays == 10);
  // The broadcast carries the arrays plus one 28-byte TEK KD.
  CHECK(t.total_bytes() == 1400 + 28);
  CHECK(w.last_optimized_bytes() == 464);

  Bytes probe = wrap(w.tek(), kText);
  for (MemberId m : w.member_ids()) {
    CHECK(w.client(m).can_read_probe(probe, kText));
  }
  CHECK_FALSE(w.client(100).can_read_probe(probe, kText));
  Bytes stale = wrap(old_tek, kText);
  for (MemberId m : w.member_ids()) {
    CHECK_FALSE(w.client(m).can_read_probe(stale, kText));
  }
}

TEST_CASE("lkh: optimized leave folds the cascade into one array") {
  lkh::LkhWorld w(12, 1024, 11);
  lkh::Trace t = w.leave(513, /*optimized=*/true);
  CHECK(t.broadcasts == 1);
  CHECK(t.update_arrays == 1);
  CHECK(t.total_bytes() == 464 + 28);
  Bytes probe = wrap(w.tek(), kText);
  for (MemberId m : w.member_ids()) {
    CHECK(w.client(m).can_read_probe(probe, kText));
  }
}

TEST_CASE("lkh: key download carries one record per internal node") {
  lkh::LkhWorld w(13, 2048, 12);
  lkh::Trace t = w.key_download();
  CHECK(t.broadcasts == 1);
  CHECK(t.total_bytes() == lkh::key_download_bytes(2048));
}

TEST_CASE("lkh: join refreshes the path before provisioning the joiner") {
  lkh::LkhWorld w(14, 7, 4);  // 8-leaf tree with one vacancy
  std::vector<SymKey> old_root_era = w.client(1).key_history();
  lkh::Trace t = w.join(8);
  CHECK(t.broadcasts == 1);
  CHECK(t.unicasts == 1);
  Bytes probe = wrap(w.tek(), kText);
  for (MemberId m : w.member_ids()) {
    CHECK(w.client(m).can_read_probe(probe, kText));
  }
  // The joiner holds none of the keys that existed before it arrived.
  for (const SymKey& k : old_root_era) {
    for (const SymKey& held : w.client(8).key_history()) {
      CHECK_FALSE(held == k);
    }
  }
  CHECK_THROWS_AS(w.join(8), Error);
}

TEST_CASE("lkh: rekey is a single tek kd under the root") {
  lkh::LkhWorld w(15, 16, 5);
  lkh::Trace t = w.rekey();
  CHECK(t.broadcasts == 1);
  CHECK(t.total_bytes() == 28);
  Bytes probe = wrap(w.tek(), kText);
  for (MemberId m : w.member_ids()) {
    CHECK(w.client(m).can_read_probe(probe, kText));
  }
}

TEST_CASE("lkh: world construction guards its bounds") {
  CHECK_THROWS_AS(lkh::LkhWorld(1, 4, 1), Error);
  CHECK_THROWS_AS(lkh::LkhWorld(1, 4, 18), Error);
  CHECK_THROWS_AS(lkh::LkhWorld(1, 9, 4), Error);  // 8 leaves only
}

TEST_CASE("lkh: leaves from a partially filled tree stay consistent") {
  lkh::LkhWorld w(16, 5, 4);
  w.leave(2);
  w.leave(4, /*optimized=*/true);
  Bytes probe = wrap(w.tek(), kText);
  for (MemberId m : w.member_ids()) {
    CHECK(w.client(m).can_read_probe(probe, kText));
  }
  CHECK_FALSE(w.client(2).can_read_probe(probe, kText));
  CHECK_FALSE(w.client(4).can_read_probe(probe, kText));
}
