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

#include "cake/key_tree.hpp"

#include <algorithm>

#include "cake/errors.hpp"

namespace cake {

namespace {

// Prefix mask covering fields 0..d (the top d+1 two-bit fields).
uint16_t prefix_mask(int d) {
  return static_cast<uint16_t>(0xffffu << (14 - 2 * d));
}

}  // namespace

TreeAddress TreeAddress::temporary(uint16_t index) {
  return TreeAddress(static_cast<uint16_t>(0xc000u | (index & 0x3fffu)));
}

bool TreeAddress::is_valid_tree_address() const {
  if (field(0) != 0) return false;
  bool below_node = false;
  for (int i = 1; i <= 7; ++i) {
    if (field(i) == 0) {
      below_node = true;
    } else if (below_node) {
      return false;  // nonzero label under the zero padding
    }
  }
  return true;
}

int TreeAddress::depth() const {
  int d = 0;
  for (int i = 1; i <= 7 && field(i) != 0; ++i) d = i;
  return d;
}

TreeAddress TreeAddress::parent() const {
  int d = depth();
  if (d == 0) return root();
  return TreeAddress(static_cast<uint16_t>(code_ & ~(3u << (14 - 2 * d))));
}

TreeAddress TreeAddress::child(int slot) const {
  if (slot < 1 || slot > 3) fail(Err::kBadAddress, "child slot not in [1,3]");
  int d = depth();
  if (d >= kMaxLeafDepth) fail(Err::kDepthExceeded, "child below depth 7");
  return TreeAddress(
      static_cast<uint16_t>(code_ | (slot << (14 - 2 * (d + 1)))));
}

bool TreeAddress::is_ancestor_of(const TreeAddress& other) const {
  if (is_temporary() || other.is_temporary()) return false;
  int d = depth();
  if (other.depth() <= d) return false;
  return (other.code_ & prefix_mask(d)) == code_;
}

TreeAddress TreeAddress::rebase(const TreeAddress& node,
                                const TreeAddress& target) const {
  if (!(node == *this) && !is_ancestor_of(node)) {
    fail(Err::kBadAddress, "rebase source is not a prefix of the node");
  }
  int d_from = depth();
  int d_to = target.depth();
  int new_depth = node.depth() - d_from + d_to;
  if (new_depth > kMaxLeafDepth) {
    fail(Err::kDepthExceeded, "rebase pushes the node below depth 7");
  }
  uint16_t suffix =
      static_cast<uint16_t>(node.code() & ~prefix_mask(d_from) & 0xffffu);
  int shift = 2 * (d_from - d_to);
  uint16_t moved = shift >= 0 ? static_cast<uint16_t>(suffix << shift)
                              : static_cast<uint16_t>(suffix >> -shift);
  return TreeAddress(static_cast<uint16_t>(target.code() | moved));
}

KeyTree::KeyTree(KeyPair root_pair) {
  nodes_[TreeAddress::root()] = std::move(root_pair);
}

const KeyPair& KeyTree::pair_at(TreeAddress a) const {
  auto it = nodes_.find(a);
  if (it == nodes_.end()) fail(Err::kUnknownAddress, "no pair at address");
  return it->second;
}

void KeyTree::set_pair(TreeAddress a, KeyPair kp) {
  if (!a.is_valid_tree_address()) {
    fail(Err::kBadAddress, "set_pair outside the tree");
  }
  nodes_[a] = std::move(kp);
}

TreeAddress KeyTree::leaf_of(MemberId m) const {
  auto it = member_leaves_.find(m);
  if (it == member_leaves_.end()) fail(Err::kUnknownMember, "not in tree");
  return it->second;
}

TreeAddress KeyTree::first_free_slot(TreeAddress internal_node) const {
  for (int slot = 1; slot <= 3; ++slot) {
    TreeAddress c = internal_node.child(slot);
    if (!contains(c)) return c;
  }
  return TreeAddress::root();  // sentinel: no free slot
}

InsertResult KeyTree::insert_member(MemberId m, KeyPair kp,
                                    const PairFactory& fresh) {
  if (!contains(TreeAddress::root())) {
    fail(Err::kUnknownAddress, "tree has no root pair");
  }
  if (member_leaves_.count(m) > 0) {
    fail(Err::kDuplicateMember, "member already placed");
  }
  if (member_count() >= kTreeMemberCapacity) {
    fail(Err::kTreeFull, "3^7 members already placed");
  }

  // Shallowest-leftmost free child slot across all internal nodes.
  bool found = false;
  TreeAddress best;
  auto better = [](TreeAddress a, TreeAddress b) {
    if (a.depth() != b.depth()) return a.depth() < b.depth();
    return a.code() < b.code();
  };
  for (const auto& [addr, pair] : nodes_) {
    (void)pair;
    if (is_member_leaf(addr)) continue;
    if (addr.depth() >= kMaxLeafDepth) continue;
    TreeAddress slot = first_free_slot(addr);
    if (slot.is_root()) continue;
    if (!found || better(slot, best)) {
      best = slot;
      found = true;
    }
  }

  InsertResult result;
  if (found) {
    nodes_[best] = std::move(kp);
    member_leaves_[m] = best;
    leaf_owner_[best] = m;
    result.address = best;
    return result;
  }

  // Every internal node is full: convert the shallowest-leftmost member
  // leaf above the depth limit. The displaced member keeps its pair in
  // child slot 1; the new member takes slot 2; the converted node gets a
  // fresh pair because it is now shared by both.
  bool have_leaf = false;
  TreeAddress victim;
  for (const auto& [leaf, owner] : leaf_owner_) {
    (void)owner;
    if (leaf.depth() >= kMaxLeafDepth) continue;
    if (!have_leaf || better(leaf, victim)) {
      victim = leaf;
      have_leaf = true;
    }
  }
  if (!have_leaf) fail(Err::kTreeFull, "no convertible leaf");

  MemberId displaced = leaf_owner_.at(victim);
  KeyPair displaced_pair = nodes_.at(victim);
  TreeAddress kept = victim.child(1);
  TreeAddress taken = victim.child(2);

  nodes_[victim] = fresh();
  leaf_owner_.erase(victim);
  nodes_[kept] = std::move(displaced_pair);
  leaf_owner_[kept] = displaced;
  member_leaves_[displaced] = kept;
  nodes_[taken] = std::move(kp);
  leaf_owner_[taken] = m;
  member_leaves_[m] = taken;

  result.address = taken;
  result.moves.emplace_back(victim, kept);
  result.created_internal.push_back(victim);
  return result;
}

RemoveResult KeyTree::remove_member(MemberId m) {
  TreeAddress leaf = leaf_of(m);

  RemoveResult result;
  result.marked = path_to_root(leaf);
  std::set<TreeAddress> marked_set(result.marked.begin(),
                                   result.marked.end());
  result.siblings = siblings_for_marked(marked_set);

  nodes_.erase(leaf);
  leaf_owner_.erase(leaf);
  member_leaves_.erase(m);

  // Prune internal nodes left childless by the removal.
  TreeAddress p = leaf;
  while (!p.is_root()) {
    p = p.parent();
    if (p.is_root()) break;
    if (is_member_leaf(p) || !children_of(p).empty()) break;
    nodes_.erase(p);
  }
  return result;
}

std::vector<TreeAddress> KeyTree::path_to_root(TreeAddress a) const {
  std::vector<TreeAddress> path;
  path.push_back(a);
  while (!a.is_root()) {
    a = a.parent();
    path.push_back(a);
  }
  return path;
}

std::vector<TreeAddress> KeyTree::siblings_along_path(
    TreeAddress leaf) const {
  std::vector<TreeAddress> out;
  for (TreeAddress n = leaf; !n.is_root(); n = n.parent()) {
    for (TreeAddress c : children_of(n.parent())) {
      if (!(c == n)) out.push_back(c);
    }
  }
  return out;
}

std::vector<TreeAddress> KeyTree::siblings_for_marked(
    const std::set<TreeAddress>& marked) const {
  std::set<TreeAddress> seen;
  std::vector<TreeAddress> out;
  for (TreeAddress n : marked) {
    if (n.is_root()) continue;
    for (TreeAddress c : children_of(n.parent())) {
      if (marked.count(c) > 0) continue;
      if (seen.insert(c).second) out.push_back(c);
    }
  }
  std::sort(out.begin(), out.end(), [](TreeAddress a, TreeAddress b) {
    if (a.depth() != b.depth()) return a.depth() > b.depth();
    return a.code() < b.code();
  });
  return out;
}

std::vector<MemberId> KeyTree::members_under(TreeAddress a) const {
  std::vector<MemberId> out;
  for (const auto& [m, leaf] : member_leaves_) {
    if (leaf == a || a.is_ancestor_of(leaf)) out.push_back(m);
  }
  return out;
}

std::vector<TreeAddress> KeyTree::children_of(TreeAddress a) const {
  std::vector<TreeAddress> out;
  if (a.depth() >= kMaxLeafDepth) return out;
  for (int slot = 1; slot <= 3; ++slot) {
    TreeAddress c = a.child(slot);
    if (contains(c)) out.push_back(c);
  }
  return out;
}

void KeyTree::readdress(
    const std::vector<std::pair<TreeAddress, TreeAddress>>& moves) {
  struct Lifted {
    TreeAddress new_addr;
    KeyPair pair;
    bool is_leaf = false;
    MemberId owner = 0;
  };
  std::vector<Lifted> lifted;

  // Mutate copies so a validation failure leaves the tree untouched.
  auto nodes = nodes_;
  auto leaf_owner = leaf_owner_;
  auto member_leaves = member_leaves_;

  for (const auto& [from, to] : moves) {
    if (nodes.count(from) == 0) {
      fail(Err::kUnknownAddress, "readdress source");
    }
    std::vector<TreeAddress> affected;
    for (const auto& [addr, pair] : nodes) {
      (void)pair;
      if (addr == from || from.is_ancestor_of(addr)) affected.push_back(addr);
    }
    for (TreeAddress addr : affected) {
      Lifted l;
      l.new_addr = from.rebase(addr, to);  // throws on depth overflow
      l.pair = nodes.at(addr);
      auto it = leaf_owner.find(addr);
      if (it != leaf_owner.end()) {
        l.is_leaf = true;
        l.owner = it->second;
        leaf_owner.erase(it);
      }
      nodes.erase(addr);
      lifted.push_back(std::move(l));
    }
  }

  for (const Lifted& l : lifted) {
    if (nodes.count(l.new_addr) > 0) {
      fail(Err::kAddressCollision, "readdress target occupied");
    }
    nodes[l.new_addr] = l.pair;
    if (l.is_leaf) {
      leaf_owner[l.new_addr] = l.owner;
      member_leaves[l.owner] = l.new_addr;
    }
  }

  nodes_.swap(nodes);
  leaf_owner_.swap(leaf_owner);
  member_leaves_.swap(member_leaves);
}

void KeyTree::adopt(const KeyTree& other, TreeAddress at) {
  TreeAddress root = TreeAddress::root();
  for (const auto& [addr, pair] : other.nodes_) {
    (void)pair;
    if (contains(root.rebase(addr, at))) {
      fail(Err::kAddressCollision, "adopt target occupied");
    }
  }
  for (const auto& [m, leaf] : other.member_leaves_) {
    (void)leaf;
    if (member_leaves_.count(m) > 0) {
      fail(Err::kDuplicateMember, "member present in both trees");
    }
  }
  for (const auto& [addr, pair] : other.nodes_) {
    nodes_[root.rebase(addr, at)] = pair;
  }
  for (const auto& [m, leaf] : other.member_leaves_) {
    TreeAddress moved = root.rebase(leaf, at);
    member_leaves_[m] = moved;
    leaf_owner_[moved] = m;
  }
}

}  // namespace cake
