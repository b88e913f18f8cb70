#include "surfelmesh/octree.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sm {

CompressedOctree::CompressedOctree(int leaf_capacity, int max_depth)
    : leaf_capacity_(leaf_capacity), max_depth_(max_depth) {}

void CompressedOctree::clear() {
  nodes_.clear();
  free_nodes_.clear();
  root_ = -1;
  size_ = 0;
  pos_.clear();
  node_of_.clear();
  index_in_node_.clear();
  present_.clear();
  stale_.clear();
}

std::int32_t CompressedOctree::new_node(const Vec3d& center, double half, int level, std::int32_t parent) {
  std::int32_t n;
  if (!free_nodes_.empty()) {
    n = free_nodes_.back();
    free_nodes_.pop_back();
    nodes_[n] = OctreeNode();
  } else {
    n = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
  }
  nodes_[n].center = center;
  nodes_[n].half = half;
  nodes_[n].level = level;
  nodes_[n].parent = parent;
  return n;
}

void CompressedOctree::free_node(std::int32_t n) {
  nodes_[n] = OctreeNode();
  nodes_[n].level = -1000000;
  free_nodes_.push_back(n);
}

OctreeNode CompressedOctree::octant_cube(const OctreeNode& n, int o) const {
  OctreeNode c;
  c.half = n.half * 0.5;
  c.level = n.level + 1;
  for (int d = 0; d < 3; ++d) c.center[d] = n.center[d] + (((o >> d) & 1) ? c.half : -c.half);
  return c;
}

void CompressedOctree::add_resident(std::int32_t n, SurfelId id, bool stale) {
  index_in_node_[id] = static_cast<std::uint32_t>(nodes_[n].residents.size());
  nodes_[n].residents.push_back(id);
  node_of_[id] = n;
  stale_[id] = stale ? 1 : 0;
}

void CompressedOctree::remove_resident(std::int32_t n, SurfelId id) {
  auto& res = nodes_[n].residents;
  std::uint32_t i = index_in_node_[id];
  SurfelId last = res.back();
  res[i] = last;
  index_in_node_[last] = i;
  res.pop_back();
  node_of_[id] = -1;
}

int CompressedOctree::slot_in_parent(std::int32_t n) const {
  const OctreeNode& p = nodes_[nodes_[n].parent];
  for (int o = 0; o < 8; ++o)
    if (p.child[o] == n) return o;
  throw std::logic_error("octree: broken parent link");
}

void CompressedOctree::grow_to(const Vec3d& p) {
  while (!nodes_[root_].contains(p)) {
    const OctreeNode old = nodes_[root_];
    Vec3d c;
    for (int d = 0; d < 3; ++d) c[d] = p[d] >= old.center[d] ? old.center[d] + old.half : old.center[d] - old.half;
    std::int32_t R = new_node(c, old.half * 2.0, old.level - 1, -1);
    int o = nodes_[R].octant(old.center);
    std::int32_t hang = root_;
    if (!old.leaf() && old.residents.empty() && old.child_count == 1) {
      // The old root was itself a pure growth node; hang its child directly.
      for (int k = 0; k < 8; ++k)
        if (old.child[k] >= 0) hang = old.child[k];
      free_node(root_);
    }
    nodes_[R].child[o] = hang;
    nodes_[R].child_count = 1;
    nodes_[hang].parent = R;
    root_ = R;
  }
}

bool CompressedOctree::touches(const OctreeNode& n, const Vec3d& c, double r2) const {
  double d2 = 0;
  for (int d = 0; d < 3; ++d) {
    double v = std::abs(c[d] - n.center[d]) - n.half;
    if (v > 0) d2 += v * v;
  }
  return d2 <= r2 * (1.0 + 1e-9) + 1e-300;
}

void CompressedOctree::place(SurfelId id, std::int32_t n, const Vec3d* qc, double qr2) {
  const Vec3d p = pos_[id];
  while (true) {
    if (nodes_[n].leaf()) {
      add_resident(n, id, false);
      maybe_split(n);
      return;
    }
    int o = nodes_[n].octant(p);
    std::int32_t ch = nodes_[n].child[o];
    if (ch < 0) {
      OctreeNode cube = octant_cube(nodes_[n], o);
      std::int32_t L = new_node(cube.center, cube.half, cube.level, n);
      nodes_[n].child[o] = L;
      nodes_[n].child_count++;
      add_resident(L, id, false);
      return;
    }
    if (nodes_[ch].contains(p)) {
      if (qc && !nodes_[ch].leaf() && !touches(nodes_[ch], *qc, qr2)) {
        add_resident(ch, id, true);
        return;
      }
      n = ch;
      continue;
    }
    // The child is a smaller cube inside the octant that misses p: insert the
    // smallest common cube as a new interior node.
    OctreeNode cube = octant_cube(nodes_[n], o);
    const Vec3d cc = nodes_[ch].center;
    while (true) {
      int oc = cube.octant(cc), op = cube.octant(p);
      if (oc != op) break;
      cube = octant_cube(cube, op);
    }
    std::int32_t M = new_node(cube.center, cube.half, cube.level, n);
    int oc = nodes_[M].octant(cc), op = nodes_[M].octant(p);
    nodes_[M].child[oc] = ch;
    nodes_[ch].parent = M;
    OctreeNode lc = octant_cube(nodes_[M], op);
    std::int32_t L = new_node(lc.center, lc.half, lc.level, M);
    nodes_[M].child[op] = L;
    nodes_[M].child_count = 2;
    nodes_[n].child[o] = M;
    add_resident(L, id, false);
    return;
  }
}

void CompressedOctree::maybe_split(std::int32_t n) {
  while (nodes_[n].leaf() && static_cast<int>(nodes_[n].residents.size()) > leaf_capacity_ &&
         depth(n) < max_depth_) {
    std::array<int, 8> count{};
    for (SurfelId id : nodes_[n].residents) ++count[nodes_[n].octant(pos_[id])];
    int nonempty = 0, only = -1;
    for (int o = 0; o < 8; ++o)
      if (count[o]) {
        ++nonempty;
        only = o;
      }
    if (nonempty == 1) {
      // Coincident entries cannot be separated. Depth is relative to the root,
      // so a shrinking root leaf needs an absolute floor.
      if (nodes_[n].half < 1e-12) return;
      // Shrink the leaf onto the occupied octant; it stays inside its parent slot.
      OctreeNode cube = octant_cube(nodes_[n], only);
      nodes_[n].center = cube.center;
      nodes_[n].half = cube.half;
      nodes_[n].level = cube.level;
      continue;
    }
    std::vector<SurfelId> res = std::move(nodes_[n].residents);
    nodes_[n].residents.clear();
    std::array<std::int32_t, 8> kids{-1, -1, -1, -1, -1, -1, -1, -1};
    for (int o = 0; o < 8; ++o) {
      if (!count[o]) continue;
      OctreeNode cube = octant_cube(nodes_[n], o);
      kids[o] = new_node(cube.center, cube.half, cube.level, n);
      nodes_[n].child[o] = kids[o];
    }
    nodes_[n].child_count = nonempty;
    for (SurfelId id : res) add_resident(kids[nodes_[n].octant(pos_[id])], id, false);
    for (int o = 0; o < 8; ++o)
      if (kids[o] >= 0) maybe_split(kids[o]);
    return;
  }
}

std::int32_t CompressedOctree::splice_if_redundant(std::int32_t n) {
  OctreeNode& N = nodes_[n];
  if (N.leaf() || !N.residents.empty() || N.child_count != 1) return n;
  std::int32_t c = -1;
  for (int o = 0; o < 8; ++o)
    if (N.child[o] >= 0) c = N.child[o];
  std::int32_t parent = N.parent;
  if (parent < 0) {
    root_ = c;
    nodes_[c].parent = -1;
  } else {
    nodes_[parent].child[slot_in_parent(n)] = c;
    nodes_[c].parent = parent;
  }
  free_node(n);
  return c;
}

void CompressedOctree::compress(std::int32_t n) {
  while (n >= 0) {
    OctreeNode& N = nodes_[n];
    if (N.leaf() && N.residents.empty()) {
      std::int32_t parent = N.parent;
      if (parent < 0) {
        free_node(n);
        root_ = -1;
        return;
      }
      nodes_[parent].child[slot_in_parent(n)] = -1;
      nodes_[parent].child_count--;
      free_node(n);
      n = parent;
      continue;
    }
    if (!N.leaf() && N.residents.empty() && N.child_count == 1) {
      splice_if_redundant(n);
      return;
    }
    if (N.leaf()) {
      // May have been an interior node holding parked entries.
      for (SurfelId id : N.residents) stale_[id] = 0;
      maybe_split(n);
    }
    return;
  }
}

void CompressedOctree::insert(SurfelId id, const Vec3d& p) {
  if (contains(id)) throw std::invalid_argument("octree insert: duplicate id " + std::to_string(id));
  if (id >= present_.size()) {
    std::size_t n = id + 1;
    pos_.resize(n, Vec3d::Zero());
    node_of_.resize(n, -1);
    index_in_node_.resize(n, 0);
    present_.resize(n, 0);
    stale_.resize(n, 0);
  }
  pos_[id] = p;
  present_[id] = 1;
  ++size_;
  if (root_ < 0) {
    Vec3d c(std::floor(p.x()) + 0.5, std::floor(p.y()) + 0.5, std::floor(p.z()) + 0.5);
    root_ = new_node(c, 0.5, 0, -1);
    add_resident(root_, id, false);
    return;
  }
  grow_to(p);
  place(id, root_, nullptr, 0);
  splice_if_redundant(root_);
}

void CompressedOctree::notify_moved(SurfelId id, const Vec3d& p) {
  if (!contains(id)) throw std::invalid_argument("octree notify_moved: unknown id " + std::to_string(id));
  std::int32_t n = node_of_[id];
  pos_[id] = p;
  if (nodes_[n].contains(p)) return;
  remove_resident(n, id);
  std::int32_t a = nodes_[n].parent;
  while (a >= 0 && !nodes_[a].contains(p)) a = nodes_[a].parent;
  if (a < 0) {
    grow_to(p);
    a = root_;
  }
  add_resident(a, id, !nodes_[a].leaf());
  compress(n);
}

void CompressedOctree::remove(SurfelId id) {
  if (!contains(id)) throw std::invalid_argument("octree remove: unknown id " + std::to_string(id));
  std::int32_t n = node_of_[id];
  remove_resident(n, id);
  present_[id] = 0;
  stale_[id] = 0;
  --size_;
  compress(n);
}

std::vector<OctreeHit> CompressedOctree::radius_search(const Vec3d& center, double radius) {
  std::vector<OctreeHit> out;
  radius_search(center, radius, out);
  return out;
}

void CompressedOctree::radius_search(const Vec3d& center, double radius, std::vector<OctreeHit>& out) {
  out.clear();
  if (root_ < 0) return;
  const double r2 = radius * radius;
  if (!touches(nodes_[root_], center, r2)) return;
  search_node(root_, center, r2, out);
}

void CompressedOctree::search_node(std::int32_t n, const Vec3d& c, double r2, std::vector<OctreeHit>& out) {
  if (!nodes_[n].leaf() && !nodes_[n].residents.empty()) {
    std::vector<SurfelId> parked = std::move(nodes_[n].residents);
    nodes_[n].residents.clear();
    for (SurfelId id : parked) place(id, n, &c, r2);
    n = splice_if_redundant(n);
  }
  if (nodes_[n].leaf()) {
    for (SurfelId id : nodes_[n].residents) {
      double d2 = (pos_[id] - c).squaredNorm();
      if (d2 <= r2) out.push_back(OctreeHit{id, std::sqrt(d2)});
    }
    return;
  }
  const std::array<std::int32_t, 8> kids = nodes_[n].child;
  for (std::int32_t ch : kids)
    if (ch >= 0 && touches(nodes_[ch], c, r2)) search_node(ch, c, r2, out);
}

std::string CompressedOctree::check_invariants() const {
  std::ostringstream err;
  std::size_t seen = 0;
  if (root_ < 0) {
    if (size_ != 0) err << "empty root but size " << size_ << "\n";
    return err.str();
  }
  if (nodes_[root_].parent != -1) err << "root has parent\n";
  std::vector<std::int32_t> stack{root_};
  while (!stack.empty()) {
    std::int32_t n = stack.back();
    stack.pop_back();
    const OctreeNode& N = nodes_[n];
    int kids = 0;
    for (int o = 0; o < 8; ++o) {
      std::int32_t c = N.child[o];
      if (c < 0) continue;
      ++kids;
      const OctreeNode& C = nodes_[c];
      if (C.parent != n) err << "node " << c << " parent link\n";
      if (C.level <= N.level) err << "node " << c << " not smaller than parent\n";
      if (std::abs(C.half - 0.5 * std::ldexp(1.0, -C.level)) > 0) err << "node " << c << " half/level\n";
      OctreeNode cube = octant_cube(N, o);
      for (int d = 0; d < 3; ++d) {
        if (C.center[d] - C.half < cube.center[d] - cube.half || C.center[d] + C.half > cube.center[d] + cube.half)
          err << "node " << c << " outside octant\n";
      }
      stack.push_back(c);
    }
    if (kids != N.child_count) err << "node " << n << " child count\n";
    if (N.leaf() && N.residents.empty()) err << "node " << n << " empty leaf\n";
    if (!N.leaf() && N.residents.empty() && N.child_count == 1) err << "node " << n << " not compressed\n";
    for (std::size_t i = 0; i < N.residents.size(); ++i) {
      SurfelId id = N.residents[i];
      ++seen;
      if (!contains(id)) err << "resident " << id << " not present\n";
      if (node_of_[id] != n) err << "resident " << id << " node_of\n";
      if (index_in_node_[id] != i) err << "resident " << id << " index\n";
      if (!N.contains(pos_[id])) err << "resident " << id << " outside its node\n";
      if (!N.leaf() && !stale_[id]) err << "resident " << id << " at interior but not stale\n";
      if (N.leaf() && stale_[id]) err << "resident " << id << " stale in leaf\n";
    }
  }
  if (seen != size_) err << "resident count " << seen << " != size " << size_ << "\n";
  return err.str();
}

}  // namespace sm
