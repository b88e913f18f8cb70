#pragma once

#include <array>
#include <string>
#include <vector>

#include "surfelmesh/core.hpp"

namespace sm {

struct OctreeNode {
  Vec3d center = Vec3d::Zero();
  double half = 0.5;
  int level = 0;  // half = 0.5 * 2^-level
  std::int32_t parent = -1;
  std::array<std::int32_t, 8> child{-1, -1, -1, -1, -1, -1, -1, -1};
  int child_count = 0;
  std::vector<SurfelId> residents;

  bool leaf() const { return child_count == 0; }
  bool contains(const Vec3d& p) const {
    for (int d = 0; d < 3; ++d)
      if (!(p[d] >= center[d] - half && p[d] < center[d] + half)) return false;
    return true;
  }
  int octant(const Vec3d& p) const {
    return (p.x() >= center.x() ? 1 : 0) | (p.y() >= center.y() ? 2 : 0) | (p.z() >= center.z() ? 4 : 0);
  }
};

struct OctreeHit {
  SurfelId id;
  double distance;
};

// Compressed octree over externally supplied positions. Moved entries are
// parked at the lowest ancestor containing the new position and pushed down
// only when a search traverses their node.
class CompressedOctree {
 public:
  explicit CompressedOctree(int leaf_capacity = 16, int max_depth = 40);

  void insert(SurfelId id, const Vec3d& p);
  void notify_moved(SurfelId id, const Vec3d& p);
  void remove(SurfelId id);
  void clear();

  // All entries with |p - center| <= radius. Mutates the tree (push-down).
  std::vector<OctreeHit> radius_search(const Vec3d& center, double radius);
  void radius_search(const Vec3d& center, double radius, std::vector<OctreeHit>& out);

  bool contains(SurfelId id) const { return id < present_.size() && present_[id]; }
  std::size_t size() const { return size_; }
  const Vec3d& position(SurfelId id) const { return pos_[id]; }
  bool is_stale(SurfelId id) const { return stale_[id] != 0; }
  std::int32_t node_of(SurfelId id) const { return node_of_[id]; }

  std::int32_t root() const { return root_; }
  const OctreeNode& node(std::int32_t n) const { return nodes_[n]; }
  std::size_t allocated_nodes() const { return nodes_.size() - free_nodes_.size(); }
  int depth(std::int32_t n) const { return nodes_[n].level - nodes_[root_].level; }

  // Structural check used by tests: containment, parent links, compression,
  // resident bookkeeping. Returns an empty string when all invariants hold.
  std::string check_invariants() const;

 private:
  std::int32_t new_node(const Vec3d& center, double half, int level, std::int32_t parent);
  void free_node(std::int32_t n);
  OctreeNode octant_cube(const OctreeNode& n, int o) const;
  void add_resident(std::int32_t n, SurfelId id, bool stale);
  void remove_resident(std::int32_t n, SurfelId id);
  void grow_to(const Vec3d& p);
  // Descends from n and stores id. With a query, descent stops at interior
  // nodes the query does not touch.
  void place(SurfelId id, std::int32_t n, const Vec3d* q_center, double q_r2);
  void maybe_split(std::int32_t n);
  // Restores compression upward from n after a resident or child was removed.
  void compress(std::int32_t n);
  // Splices out n if it is an interior node with one child and no residents;
  // returns the node that now occupies n's place.
  std::int32_t splice_if_redundant(std::int32_t n);
  int slot_in_parent(std::int32_t n) const;
  void search_node(std::int32_t n, const Vec3d& c, double r2, std::vector<OctreeHit>& out);
  bool touches(const OctreeNode& n, const Vec3d& c, double r2) const;

  int leaf_capacity_;
  int max_depth_;
  std::vector<OctreeNode> nodes_;
  std::vector<std::int32_t> free_nodes_;
  std::int32_t root_ = -1;
  std::size_t size_ = 0;

  std::vector<Vec3d> pos_;
  std::vector<std::int32_t> node_of_;
  std::vector<std::uint32_t> index_in_node_;
  std::vector<std::uint8_t> present_;
  std::vector<std::uint8_t> stale_;
};

}  // namespace sm
