#include "surfelmesh/association.hpp"

#include <algorithm>
#include <cmath>

namespace sm {

bool is_active(const Surfel& s, std::int64_t now, const AssocConfig& config) {
  return config.active_window < 0 || now - s.t <= config.active_window;
}

AssocClass classify_against_pixel(double surfel_depth, const Vec3d& n_s, const Vec3d& view_dir,
                                  double z, const Vec3d& n_m, const AssocConfig& config) {
  if (surfel_depth < (1.0 - config.gamma) * z) return AssocClass::kConflicting;
  if (surfel_depth > (1.0 + config.gamma) * z) return AssocClass::kOccluded;
  if (n_s.dot(-view_dir) <= 0) return AssocClass::kOccluded;
  if (n_s.dot(n_m) < std::cos(deg2rad(config.occlusion_normal_angle))) return AssocClass::kOccluded;
  return AssocClass::kSupported;
}

namespace {

struct Candidate {
  std::int64_t pixel = -1;
  AssocClass cls = AssocClass::kUnobserved;
};

struct SurfelAssoc {
  std::array<Candidate, 2> cand;
  std::int64_t projected = -1;
  double depth = 0;
  AssocClass cls = AssocClass::kUnobserved;
};

inline SurfelAssoc associate_one(const Surfel& s, const DepthFrame& f, const CameraIntrinsics& K,
                                 const AssocConfig& config) {
  SurfelAssoc out;
  Vec3d pc = f.pose.to_camera(s.p);
  auto sp = project(pc, K);
  if (!sp) return out;
  int px = static_cast<int>(std::floor(sp->u + 0.5));
  int py = static_cast<int>(std::floor(sp->v + 0.5));
  if (!f.depth.in_bounds(px, py)) return out;
  double du = sp->u - px, dv = sp->v - py;
  int qx = px, qy = py;
  if (std::abs(du) >= std::abs(dv))
    qx += du < 0 ? -1 : 1;
  else
    qy += dv < 0 ? -1 : 1;

  out.projected = std::int64_t(py) * f.width() + px;
  out.depth = pc.z();
  Vec3d n_cam = f.pose.rotate_to_camera(s.n);
  Vec3d view_dir = pc.normalized();

  const int xs[2] = {px, qx}, ys[2] = {py, qy};
  bool any_sup = false, any_con = false, any_occ = false;
  for (int k = 0; k < 2; ++k) {
    if (!f.depth.in_bounds(xs[k], ys[k])) continue;
    if (!f.valid(xs[k], ys[k])) continue;
    double z = f.depth(xs[k], ys[k]);
    const Vec3d& nm = f.normal(xs[k], ys[k]);
    AssocClass c = classify_against_pixel(pc.z(), n_cam, view_dir, z, nm, config);
    out.cand[k] = Candidate{std::int64_t(ys[k]) * f.width() + xs[k], c};
    any_sup |= c == AssocClass::kSupported;
    any_con |= c == AssocClass::kConflicting;
    any_occ |= c == AssocClass::kOccluded;
  }
  out.cls = any_sup   ? AssocClass::kSupported
            : any_con ? AssocClass::kConflicting
            : any_occ ? AssocClass::kOccluded
                      : AssocClass::kUnobserved;
  return out;
}

AssociationResult assemble(const SurfelCloud& cloud, const DepthFrame& f,
                           const std::vector<SurfelAssoc>& per, std::uint64_t seed) {
  AssociationResult r;
  r.width = f.width();
  r.height = f.height();
  const std::size_t npix = std::size_t(r.width) * r.height;
  r.class_of_surfel.assign(cloud.capacity(), AssocClass::kUnobserved);
  r.conflict_pixel_of_surfel.assign(cloud.capacity(), -1);
  r.projected_pixel.assign(cloud.capacity(), -1);
  r.supporters_of_pixel.assign(npix, {});
  r.index_image = Image<SurfelId>(r.width, r.height, kNoSurfel);
  r.surfel_depth_image = DepthImage(r.width, r.height, 0.0);
  r.conflict_at_pixel = MaskImage(r.width, r.height, 0);

  std::vector<double> depth_sum(npix, 0.0);
  for (SurfelId id = 0; id < cloud.capacity(); ++id) {
    if (!cloud.live(id)) continue;
    const SurfelAssoc& a = per[id];
    r.class_of_surfel[id] = a.cls;
    if (a.cls == AssocClass::kSupported) {
      r.projected_pixel[id] = a.projected;
      for (const Candidate& c : a.cand) {
        if (c.cls != AssocClass::kSupported) continue;
        r.supporters_of_pixel[c.pixel].push_back(id);
        depth_sum[c.pixel] += a.depth;
      }
    } else if (a.cls == AssocClass::kConflicting) {
      for (const Candidate& c : a.cand) {
        if (c.cls != AssocClass::kConflicting) continue;
        r.conflict_at_pixel.data[c.pixel] = 1;
        if (r.conflict_pixel_of_surfel[id] < 0) r.conflict_pixel_of_surfel[id] = c.pixel;
      }
    }
  }
  SplitMix64 rng(seed ^ static_cast<std::uint64_t>(f.t));
  for (std::size_t p = 0; p < npix; ++p) {
    const auto& sup = r.supporters_of_pixel[p];
    if (sup.empty()) continue;
    r.index_image.data[p] = sup[sup.size() == 1 ? 0 : rng.below(sup.size())];
    r.surfel_depth_image.data[p] = depth_sum[p] / sup.size();
  }
  return r;
}

}  // namespace

AssociationResult associate(const SurfelCloud& cloud, const DepthFrame& frame,
                            const CameraIntrinsics& K, const AssocConfig& config,
                            std::uint64_t seed) {
  std::vector<SurfelAssoc> per(cloud.capacity());
  const std::int64_t n = static_cast<std::int64_t>(cloud.capacity());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    SurfelId id = static_cast<SurfelId>(i);
    if (!cloud.live(id) || !is_active(cloud[id], frame.t, config)) continue;
    per[id] = associate_one(cloud[id], frame, K, config);
  }
  return assemble(cloud, frame, per, seed);
}

namespace serial {
AssociationResult associate(const SurfelCloud& cloud, const DepthFrame& frame,
                            const CameraIntrinsics& K, const AssocConfig& config,
                            std::uint64_t seed) {
  std::vector<SurfelAssoc> per(cloud.capacity());
  for (SurfelId id = 0; id < cloud.capacity(); ++id) {
    if (!cloud.live(id) || !is_active(cloud[id], frame.t, config)) continue;
    per[id] = associate_one(cloud[id], frame, K, config);
  }
  return assemble(cloud, frame, per, seed);
}
}  // namespace serial

}  // namespace sm
