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
// Ternary logical key hierarchy. Group members sit at the leaves; every
// node owns a KeyPair known exactly to the members beneath it. A node is
// addressed by 16 bits split into eight 2-bit fields: field 0 is 00 for
// in-tree addresses, then one field per level with child labels 01, 10,
// 11, zero-padded below the node's depth. Addresses whose field 0 is 11
// are temporary (out-of-tree) slots for personal pairs that have not
// been placed yet. Maximum leaf depth is 7: a full tree holds 3^7 =
// 2,187 members across (3^8 - 1) / 2 = 3,280 nodes.

#ifndef CAKE_KEY_TREE_HPP
#define CAKE_KEY_TREE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "cake/crt_lock.hpp"

namespace cake {

constexpr int kMaxLeafDepth = 7;
constexpr size_t kTreeMemberCapacity = 2187;   // 3^7
constexpr size_t kTreeNodeCapacity = 3280;     // (3^8 - 1) / 2

using MemberId = uint32_t;

class TreeAddress {
 public:
  constexpr TreeAddress() : code_(0) {}
  constexpr explicit TreeAddress(uint16_t code) : code_(code) {}

  static constexpr TreeAddress root() { return TreeAddress(0); }
  // Temporary slots: field 0 = 11, remaining 14 bits free-form.
  static TreeAddress temporary(uint16_t index);

  uint16_t code() const { return code_; }
  int field(int i) const { return (code_ >> (14 - 2 * i)) & 3; }

  bool is_temporary() const { return field(0) == 3; }
  bool is_root() const { return code_ == 0; }
  // In-tree well-formedness: field 0 = 00, labels from {01,10,11} down to
  // the node's depth, zero below it.
  bool is_valid_tree_address() const;

  int depth() const;
  TreeAddress parent() const;
  TreeAddress child(int slot) const;  // slot in [1,3]
  bool is_ancestor_of(const TreeAddress& other) const;  // strict
  // Replace this prefix of `node` with `target`; depths may differ.
  TreeAddress rebase(const TreeAddress& node, const TreeAddress& target) const;

  auto operator<=>(const TreeAddress&) const = default;

 private:
  uint16_t code_;
};

struct InsertResult {
  TreeAddress address;
  // Leaf relocation performed to open the slot (at most one per insert):
  // the displaced member's old and new leaf address.
  std::vector<std::pair<TreeAddress, TreeAddress>> moves;
  // Internal nodes created by this insert, with fresh pairs.
  std::vector<TreeAddress> created_internal;
};

struct RemoveResult {
  // Every address the leaver held: its full path, leaf through root.
  std::vector<TreeAddress> marked;
  // Present, unmarked siblings of marked nodes, computed before removal;
  // exactly the key set that reaches all survivors and no leaver.
  std::vector<TreeAddress> siblings;
};

// Generates fresh pairs for lazily created internal nodes.
using PairFactory = std::function<KeyPair()>;

class KeyTree {
 public:
  KeyTree() = default;
  explicit KeyTree(KeyPair root_pair);

  const std::map<TreeAddress, KeyPair>& nodes() const { return nodes_; }
  const std::map<MemberId, TreeAddress>& member_leaves() const {
    return member_leaves_;
  }
  size_t member_count() const { return member_leaves_.size(); }

  bool contains(TreeAddress a) const { return nodes_.count(a) > 0; }
  const KeyPair& pair_at(TreeAddress a) const;
  void set_pair(TreeAddress a, KeyPair kp);
  bool is_member_leaf(TreeAddress a) const { return leaf_owner_.count(a) > 0; }
  TreeAddress leaf_of(MemberId m) const;

  // Shallowest-leftmost fill. When no internal node has a free child
  // slot, the shallowest-leftmost member leaf above depth 7 converts to
  // an internal node (fresh pair from the factory); the displaced member
  // moves to child slot 1 and the new member takes slot 2.
  InsertResult insert_member(MemberId m, KeyPair kp, const PairFactory& fresh);

  // Marks the leaver's path, gathers sibling cover, deletes the leaf and
  // prunes any childless internal chain above it.
  RemoveResult remove_member(MemberId m);

  std::vector<TreeAddress> path_to_root(TreeAddress a) const;
  std::vector<TreeAddress> siblings_along_path(TreeAddress leaf) const;
  // Sibling cover for a set of marked paths (multi-leave).
  std::vector<TreeAddress> siblings_for_marked(
      const std::set<TreeAddress>& marked) const;
  // Member leaves at or below `a`.
  std::vector<MemberId> members_under(TreeAddress a) const;
  std::vector<TreeAddress> children_of(TreeAddress a) const;

  // Atomic prefix moves: every node under each old prefix is rewritten
  // onto the new prefix. Validates sources exist, targets are vacant
  // once sources are lifted, and no rewrite exceeds the depth limit.
  void readdress(const std::vector<std::pair<TreeAddress, TreeAddress>>& moves);

  // Grafts another tree under `at`: its root pair lands at `at`, every
  // descendant keeps its relative position. Member ids and target
  // addresses must be vacant here.
  void adopt(const KeyTree& other, TreeAddress at);

 private:
  TreeAddress first_free_slot(TreeAddress internal_node) const;

  std::map<TreeAddress, KeyPair> nodes_;
  std::map<MemberId, TreeAddress> member_leaves_;
  std::map<TreeAddress, MemberId> leaf_owner_;
};

}  // namespace cake

#endif  // CAKE_KEY_TREE_HPP
