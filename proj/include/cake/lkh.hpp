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
// LKH baseline: binary key tree, one 16-byte key per node, members at
// the leaves. An L-level tree (root at level 1) holds 2^(L-1) members.
//
// Removing a leaf changes the d = L - 1 keys above it. The unoptimized
// encoding emits one update array per sibling subtree at depth
// i = 1..d, the i-th carrying the i changed keys above that subtree
// wrapped under the subtree's key: total sum(16i + 8i + 8) bytes, which
// is 1,400 at d = 10. The optimized encoding sends each changed key
// once per child (2d - 1 entries, one array): 8 + (2d - 1) * 24 bytes,
// 464 at d = 10.
//
// Wire formats (big-endian):
//   update array:  kind:1 reserved:1 sibling:2 count:2 epoch:2  (8 bytes)
//     per key:     node:2 wrapped_under:2 length:2 reserved:2 key:16
//   download:      kind:1 reserved:1 count:2                    (4 bytes)
//     per key:     node:4 wrapped_under:4 length:2 reserved:2 key:16
//   kd (shared with the GKMP shapes): 12-byte header + material

#ifndef CAKE_LKH_HPP
#define CAKE_LKH_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "cake/crypto.hpp"
#include "cake/key_tree.hpp"
#include "cake/transport.hpp"

namespace cake::lkh {

using NodeId = uint32_t;  // heap numbering: root 1, children 2i and 2i+1

constexpr int kDefaultLevels = 11;
constexpr int kMaxLevels = 17;

constexpr size_t kUpdateArrayHeaderLen = 8;
constexpr size_t kUpdateKeyLen = 8 + kSymKeyLen;     // 24
constexpr size_t kDownloadHeaderLen = 4;
constexpr size_t kDownloadKeyLen = 12 + kSymKeyLen;  // 28

size_t unoptimized_leave_bytes(int changed_keys);
size_t optimized_leave_bytes(int changed_keys);
size_t key_download_bytes(size_t members);

struct Trace {
  size_t unicasts = 0;
  size_t broadcasts = 0;
  size_t update_arrays = 0;
  std::vector<size_t> message_bytes;
  size_t messages() const { return unicasts + broadcasts; }
  size_t total_bytes() const {
    size_t t = 0;
    for (size_t b : message_bytes) t += b;
    return t;
  }
};

class LkhClient {
 public:
  LkhClient() = default;
  LkhClient(MemberId id, NodeId leaf) : id_(id), leaf_(leaf) {}

  void install(NodeId node, const SymKey& k);
  void set_tek(const SymKey& tek);
  void on_message(const Bytes& data);

  NodeId leaf() const { return leaf_; }
  const std::map<NodeId, SymKey>& path() const { return path_; }
  const SymKey& tek() const { return tek_; }
  bool can_read_probe(const Bytes& probe, const Bytes& expected) const;
  const std::vector<SymKey>& key_history() const { return key_history_; }

 private:
  MemberId id_ = 0;
  NodeId leaf_ = 0;
  std::map<NodeId, SymKey> path_;
  SymKey tek_{};
  std::vector<SymKey> key_history_;
};

class LkhWorld {
 public:
  LkhWorld(uint64_t seed, size_t n, int levels = kDefaultLevels);

  Network& net() { return net_; }
  LkhClient& client(MemberId id) { return clients_.at(id); }
  std::vector<MemberId> member_ids() const;
  const SymKey& tek() const { return tek_; }
  int levels() const { return levels_; }
  size_t member_count() const { return clients_.size(); }

  // One broadcast containing d update arrays (unoptimized layout) plus a
  // TEK KD under the new root; `optimized_bytes` reports the compact
  // figure for the same change set.
  Trace leave(MemberId m, bool optimized = false);
  size_t last_optimized_bytes() const { return last_optimized_bytes_; }

  // Full-tree key download: one message, 4 + (n-1) * 28 bytes.
  Trace key_download();
  // Fresh path for the joiner: update arrays to old members, one unicast
  // to the joiner.
  Trace join(MemberId m);
  Trace rekey();

 private:
  NodeId place_leaf();
  void push_path_unicast(MemberId id, Trace& trace);
  int depth_of(NodeId n) const;
  static std::string endpoint(MemberId id);

  uint64_t seed_;
  Drbg rng_;
  Network net_;
  int levels_;
  std::map<NodeId, SymKey> keys_;
  std::map<MemberId, NodeId> leaves_;
  std::map<NodeId, MemberId> leaf_owner_;
  std::map<MemberId, LkhClient> clients_;
  SymKey tek_{};
  uint16_t epoch_ = 0;
  size_t last_optimized_bytes_ = 0;
  MemberId next_id_ = 0;
};

}  // namespace cake::lkh

#endif  // CAKE_LKH_HPP
