#include "surfelmesh/fusion.hpp"

#include <algorithm>
#include <cmath>

namespace sm {

namespace {

Vec3d color_of(const Rgb8& c) { return Vec3d(c.r, c.g, c.b) / 255.0; }

}  // namespace

Measurement measurement_at(const DepthFrame& f, const DepthImage& depth, int x, int y,
                           const CameraIntrinsics& K) {
  Measurement m;
  m.p = f.pose.to_world(unproject(x, y, depth(x, y), K));
  m.n = f.pose.rotate_to_world(f.normal(x, y)).normalized();
  m.c = f.color.size() ? color_of(f.color(x, y)) : Vec3d(0.5, 0.5, 0.5);
  m.radius = f.radius(x, y);
  return m;
}

std::optional<Surfel> create_surfel(const DepthFrame& f, const DepthImage& depth, int x, int y,
                                    const CameraIntrinsics& K) {
  if (!f.valid(x, y) || !(depth(x, y) > 0) || !(f.radius(x, y) > 0)) return std::nullopt;
  Measurement m = measurement_at(f, depth, x, y, K);
  Surfel s;
  s.p = s.p_bar = m.p;
  s.n = m.n;
  s.c = m.c;
  s.sigma = 1.0;
  s.r = m.radius;
  s.t0 = s.t = f.t;
  s.tri_state = TriState::kFree;
  return s;
}

void integrate_measurement(Surfel& s, const Measurement& m, double w, std::int64_t t,
                           const FusionConfig& config) {
  const double sum = s.sigma + w;
  s.p = (s.sigma * s.p + w * m.p) / sum;
  Vec3d n = (s.sigma * s.n + w * m.n) / sum;
  double len = n.norm();
  if (len > 1e-12) s.n = n / len;
  s.c = (s.sigma * s.c + w * m.c) / sum;
  s.sigma = std::min(sum, config.sigma_max);
  s.t = t;
  if (m.radius > 0 && m.radius < s.r) s.r = m.radius;
}

FusionStats integrate_frame(SurfelCloud& cloud, const DepthFrame& f, const DepthImage& depth,
                            const AssociationResult& assoc, const CameraIntrinsics& K,
                            const FusionConfig& config) {
  FusionStats stats;
  const int w = f.width(), h = f.height();

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto& sup = assoc.supporters_of_pixel[std::size_t(y) * w + x];
      if (sup.empty() || !f.valid(x, y)) continue;
      Measurement m = measurement_at(f, depth, x, y, K);
      const double weight = 1.0 / sup.size();
      for (SurfelId id : sup) {
        integrate_measurement(cloud[id], m, weight, f.t, config);
        cloud.mark_moved(id);
        ++stats.integrated;
      }
    }
  }

  // Conflicting surfels lose confidence; exhausted ones are replaced by the
  // measurement they conflict with (each pixel used at most once).
  std::vector<std::uint8_t> pixel_used(std::size_t(w) * h, 0);
  const SurfelId cap = static_cast<SurfelId>(std::min(cloud.capacity(), assoc.class_of_surfel.size()));
  for (SurfelId id = 0; id < cap; ++id) {
    if (!cloud.live(id) || assoc.class_of_surfel[id] != AssocClass::kConflicting) continue;
    ++stats.conflicted;
    Surfel& s = cloud[id];
    s.sigma -= 1.0;
    if (s.sigma > 0) continue;
    std::int64_t pix = assoc.conflict_pixel_of_surfel[id];
    std::optional<Surfel> fresh;
    if (pix >= 0 && !pixel_used[pix]) {
      fresh = create_surfel(f, depth, int(pix % w), int(pix / w), K);
    }
    if (fresh) {
      pixel_used[pix] = 1;
      cloud.replace(id, *fresh);
      ++stats.replaced;
    } else {
      cloud.remove(id);
      ++stats.removed;
    }
  }

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t p = std::size_t(y) * w + x;
      if (!assoc.supporters_of_pixel[p].empty() || assoc.conflict_at_pixel.data[p]) continue;
      if (auto s = create_surfel(f, depth, x, y, K)) {
        cloud.add(*s);
        ++stats.created;
      }
    }
  }
  return stats;
}

std::size_t merge_similar(SurfelCloud& cloud, const AssociationResult& assoc,
                          const FusionConfig& config) {
  const double cos_max = std::cos(deg2rad(config.merge_normal_angle));
  std::size_t merged = 0;
  for (const auto& sup : assoc.supporters_of_pixel) {
    if (sup.size() < 2) continue;
    for (std::size_t i = 0; i < sup.size(); ++i) {
      for (std::size_t j = i + 1; j < sup.size(); ++j) {
        SurfelId a = sup[i], b = sup[j];
        if (!cloud.live(a) || !cloud.live(b)) continue;
        Surfel& sa = cloud[a];
        Surfel& sb = cloud[b];
        if (!((sa.p - sb.p).norm() < config.merge_dist_factor * std::min(sa.r, sb.r))) continue;
        if (!(sa.n.dot(sb.n) > cos_max)) continue;
        const bool keep_a = sa.sigma >= sb.sigma;
        SurfelId win = keep_a ? a : b, lose = keep_a ? b : a;
        Surfel& W = cloud[win];
        const Surfel& L = cloud[lose];
        const double wa = W.sigma, wb = L.sigma, sum = wa + wb;
        W.p = (wa * W.p + wb * L.p) / sum;
        W.p_bar = (wa * W.p_bar + wb * L.p_bar) / sum;
        Vec3d n = wa * W.n + wb * L.n;
        if (n.norm() > 1e-12) W.n = n.normalized();
        W.c = (wa * W.c + wb * L.c) / sum;
        W.sigma = std::min(sum, config.sigma_max);
        W.r = std::min(W.r, L.r);
        W.t0 = std::min(W.t0, L.t0);
        W.t = std::max(W.t, L.t);
        cloud.mark_moved(win);
        cloud.remove(lose);
        ++merged;
      }
    }
  }
  return merged;
}

}  // namespace sm
