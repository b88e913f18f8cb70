#include "surfelmesh/denoise.hpp"

#include <algorithm>
#include <stdexcept>

namespace sm {

void update_neighbors(SurfelCloud& cloud, const AssociationResult& assoc,
                      const DenoiseConfig& config) {
  const int w = assoc.width, h = assoc.height;
  // Entries may point at slots that were freed and reused elsewhere.
  for (SurfelId id = 0; id < cloud.capacity(); ++id) {
    if (!cloud.live(id)) continue;
    Surfel& s = cloud[id];
    int k = 0;
    for (int j = 0; j < s.neighbor_count; ++j) {
      SurfelId n = s.neighbors[j];
      if (n != id && cloud.live(n) && (cloud[n].p - s.p).norm() <= config.neighbor_reject_factor * s.r)
        s.neighbors[k++] = n;
    }
    for (int j = k; j < 4; ++j) s.neighbors[j] = kNoSurfel;
    s.neighbor_count = static_cast<std::uint8_t>(k);
  }
  const SurfelId cap = static_cast<SurfelId>(std::min(cloud.capacity(), assoc.class_of_surfel.size()));
  std::vector<std::pair<double, SurfelId>> cand;
  for (SurfelId id = 0; id < cap; ++id) {
    if (!cloud.live(id) || assoc.class_of_surfel[id] != AssocClass::kSupported) continue;
    std::int64_t pix = assoc.projected_pixel[id];
    if (pix < 0) continue;
    Surfel& s = cloud[id];
    const double max_dist = config.neighbor_reject_factor * s.r;
    cand.clear();
    auto consider = [&](SurfelId n) {
      if (n == kNoSurfel || n == id || !cloud.live(n)) return;
      for (const auto& c : cand)
        if (c.second == n) return;
      double d = (cloud[n].p - s.p).norm();
      if (d > max_dist) return;
      cand.emplace_back(d, n);
    };
    for (int k = 0; k < s.neighbor_count; ++k) consider(s.neighbors[k]);
    const int px = int(pix % w), py = int(pix / w);
    const int off[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    for (const auto& o : off) {
      int qx = px + o[0], qy = py + o[1];
      if (qx < 0 || qy < 0 || qx >= w || qy >= h) continue;
      consider(assoc.index_image(qx, qy));
    }
    std::sort(cand.begin(), cand.end());
    s.clear_neighbors();
    for (std::size_t k = 0; k < cand.size() && k < 4; ++k) s.neighbors[s.neighbor_count++] = cand[k].second;
  }
}

void prune_dead_neighbors(SurfelCloud& cloud) {
  for (SurfelId id = 0; id < cloud.capacity(); ++id) {
    if (!cloud.live(id)) continue;
    Surfel& s = cloud[id];
    int k = 0;
    for (int j = 0; j < s.neighbor_count; ++j) {
      SurfelId n = s.neighbors[j];
      if (n != id && cloud.live(n)) s.neighbors[k++] = n;
    }
    for (int j = k; j < 4; ++j) s.neighbors[j] = kNoSurfel;
    s.neighbor_count = static_cast<std::uint8_t>(k);
  }
}

namespace {

int live_neighbor_count(const SurfelCloud& cloud, const Surfel& s) {
  int k = 0;
  for (int j = 0; j < s.neighbor_count; ++j) k += cloud.live(s.neighbors[j]) ? 1 : 0;
  return k;
}

struct ReverseAdjacency {
  std::vector<std::uint32_t> offset;
  std::vector<SurfelId> source;
};

ReverseAdjacency reverse_adjacency(const SurfelCloud& cloud) {
  ReverseAdjacency rev;
  const std::size_t cap = cloud.capacity();
  rev.offset.assign(cap + 1, 0);
  for (SurfelId i = 0; i < cap; ++i) {
    if (!cloud.live(i)) continue;
    const Surfel& s = cloud[i];
    for (int j = 0; j < s.neighbor_count; ++j)
      if (cloud.live(s.neighbors[j])) ++rev.offset[s.neighbors[j] + 1];
  }
  for (std::size_t i = 0; i < cap; ++i) rev.offset[i + 1] += rev.offset[i];
  rev.source.resize(rev.offset[cap]);
  std::vector<std::uint32_t> fill(rev.offset.begin(), rev.offset.end() - 1);
  for (SurfelId i = 0; i < cap; ++i) {
    if (!cloud.live(i)) continue;
    const Surfel& s = cloud[i];
    for (int j = 0; j < s.neighbor_count; ++j)
      if (cloud.live(s.neighbors[j])) rev.source[fill[s.neighbors[j]]++] = i;
  }
  return rev;
}

Vec3d gradient_of(const SurfelCloud& cloud, const ReverseAdjacency& rev, SurfelId id, double w_reg) {
  const Surfel& s = cloud[id];
  Vec3d g = 2.0 * (s.p_bar - s.p);
  const int k = live_neighbor_count(cloud, s);
  if (k > 0) {
    double acc = 0;
    for (int j = 0; j < s.neighbor_count; ++j) {
      SurfelId n = s.neighbors[j];
      if (!cloud.live(n)) continue;
      acc += s.n.dot(cloud[n].p_bar - s.p_bar);
    }
    g -= (2.0 * w_reg / k) * acc * s.n;
  }
  for (std::uint32_t e = rev.offset[id]; e < rev.offset[id + 1]; ++e) {
    const Surfel& o = cloud[rev.source[e]];
    const int ko = live_neighbor_count(cloud, o);
    g += (2.0 * w_reg / ko) * o.n.dot(s.p_bar - o.p_bar) * o.n;
  }
  return g;
}

}  // namespace

double cost(const SurfelCloud& cloud, const DenoiseConfig& config) {
  double c = 0;
  for (SurfelId id = 0; id < cloud.capacity(); ++id) {
    if (!cloud.live(id)) continue;
    const Surfel& s = cloud[id];
    c += (s.p_bar - s.p).squaredNorm();
    const int k = live_neighbor_count(cloud, s);
    if (k == 0) continue;
    double reg = 0;
    for (int j = 0; j < s.neighbor_count; ++j) {
      SurfelId n = s.neighbors[j];
      if (!cloud.live(n)) continue;
      double e = s.n.dot(cloud[n].p_bar - s.p_bar);
      reg += e * e;
    }
    c += config.w_reg * reg / k;
  }
  return c;
}

std::vector<Vec3d> cost_gradient(const SurfelCloud& cloud, const DenoiseConfig& config) {
  ReverseAdjacency rev = reverse_adjacency(cloud);
  std::vector<Vec3d> g(cloud.capacity(), Vec3d::Zero());
  const std::int64_t cap = static_cast<std::int64_t>(cloud.capacity());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < cap; ++i) {
    SurfelId id = static_cast<SurfelId>(i);
    if (cloud.live(id)) g[id] = gradient_of(cloud, rev, id, config.w_reg);
  }
  return g;
}

namespace serial {
std::vector<Vec3d> cost_gradient(const SurfelCloud& cloud, const DenoiseConfig& config) {
  std::vector<Vec3d> g(cloud.capacity(), Vec3d::Zero());
  for (SurfelId id = 0; id < cloud.capacity(); ++id) {
    if (!cloud.live(id)) continue;
    const Surfel& s = cloud[id];
    g[id] += 2.0 * (s.p_bar - s.p);
    const int k = live_neighbor_count(cloud, s);
    for (int j = 0; j < s.neighbor_count; ++j) {
      SurfelId n = s.neighbors[j];
      if (!cloud.live(n)) continue;
      double e = s.n.dot(cloud[n].p_bar - s.p_bar);
      Vec3d d = (2.0 * config.w_reg / k) * e * s.n;
      g[n] += d;
      g[id] -= d;
    }
  }
  return g;
}
}  // namespace serial

std::vector<double> step_sizes(const SurfelCloud& cloud, const DenoiseConfig& config) {
  std::vector<double> back(cloud.capacity(), 0.0);
  for (SurfelId id = 0; id < cloud.capacity(); ++id) {
    if (!cloud.live(id)) continue;
    const Surfel& s = cloud[id];
    const int k = live_neighbor_count(cloud, s);
    for (int j = 0; j < s.neighbor_count; ++j)
      if (cloud.live(s.neighbors[j])) back[s.neighbors[j]] += config.w_reg / k;
  }
  std::vector<double> step(cloud.capacity(), 0.0);
  for (SurfelId id = 0; id < cloud.capacity(); ++id)
    if (cloud.live(id)) step[id] = config.step_scale / (1.0 + config.w_reg + back[id]);
  return step;
}

std::size_t denoise_iteration(SurfelCloud& cloud, std::int64_t now, const DenoiseConfig& config) {
  std::vector<Vec3d> g = cost_gradient(cloud, config);
  std::vector<double> step = step_sizes(cloud, config);
  std::size_t changed = 0;
  for (SurfelId id = 0; id < cloud.capacity(); ++id) {
    if (!cloud.live(id)) continue;
    Surfel& s = cloud[id];
    if (now - s.t > config.active_window) continue;
    s.grad_accum = g[id];
    Vec3d next = s.p_bar - step[id] * g[id];
    if (next != s.p_bar) {
      s.p_bar = next;
      cloud.mark_moved(id);
      ++changed;
    }
  }
  return changed;
}

std::vector<SurfelId> apply_deformation(SurfelCloud& cloud, const std::map<SurfelId, Vec3d>& offsets,
                                        const DenoiseConfig& config) {
  for (const auto& [id, d] : offsets)
    if (!cloud.live(id)) throw std::invalid_argument("apply_deformation: unknown surfel id " + std::to_string(id));
  prune_dead_neighbors(cloud);
  const std::size_t cap = cloud.capacity();
  std::vector<Vec3d> cur(cap, Vec3d::Zero()), next(cap, Vec3d::Zero());
  for (const auto& [id, d] : offsets) cur[id] = d;
  for (int it = 0; it < config.deform_smooth_iters; ++it) {
    for (SurfelId id = 0; id < cap; ++id) {
      if (!cloud.live(id)) continue;
      const Surfel& s = cloud[id];
      if (s.neighbor_count == 0) {
        next[id] = cur[id];
        continue;
      }
      // Mean taken relative to the first neighbor so that equal inputs are
      // reproduced exactly.
      const Vec3d& base = cur[s.neighbors[0]];
      Vec3d acc = Vec3d::Zero();
      for (int j = 1; j < s.neighbor_count; ++j) acc += cur[s.neighbors[j]] - base;
      next[id] = base + acc / s.neighbor_count;
    }
    std::swap(cur, next);
  }
  std::vector<SurfelId> moved;
  for (SurfelId id = 0; id < cap; ++id) {
    if (!cloud.live(id)) continue;
    Surfel& s = cloud[id];
    s.delta_p = cur[id];
    if (cur[id] == Vec3d::Zero()) continue;
    s.p += cur[id];
    s.p_bar += cur[id];
    cloud.mark_moved(id);
    moved.push_back(id);
  }
  return moved;
}

}  // namespace sm
