#pragma once

#include <functional>
#include <vector>

#include "surfelmesh/core.hpp"

namespace sm {

struct MeshQualityReport {
  std::size_t vertices = 0;
  std::size_t triangles = 0;
  double free_pct = 0;
  double boundary_pct = 0;
  double manifold_pct = 0;  // of referenced vertices
  double self_intersect_pct = 0;
  double avg_min_angle = 0;   // degrees
  double mean_curvature = 0;  // 0.01/m
};

// Merges vertices with identical positions; faces that collapse are dropped.
PolyMesh merge_coincident_vertices(const PolyMesh& mesh);

// Per-vertex classification; vectors are indexed by vertex.
struct VertexClasses {
  std::vector<std::uint8_t> free, boundary, manifold;
};
VertexClasses classify_vertices(const PolyMesh& mesh);

bool triangles_intersect(const Vec3d& p0, const Vec3d& p1, const Vec3d& p2, const Vec3d& q0,
                         const Vec3d& q1, const Vec3d& q2);
// Flags triangles intersecting another triangle they share no vertex with.
std::vector<std::uint8_t> self_intersecting_faces(const PolyMesh& mesh);

double min_angle_deg(const Vec3d& a, const Vec3d& b, const Vec3d& c);

// Discrete mean curvature magnitude per vertex (1/m); NaN where undefined
// (boundary, non-manifold or degenerate neighborhoods).
std::vector<double> vertex_mean_curvature(const PolyMesh& mesh, const VertexClasses& classes);

MeshQualityReport mesh_quality(const PolyMesh& mesh);

struct ReconEvalPoint {
  double tau = 0;
  double accuracy_pct = 0;
  double completeness_pct = 0;
};

struct ReconEvalReport {
  double tau = 0;
  double accuracy_pct = 0;  // NaN for an empty reconstruction
  double completeness_pct = 0;
  std::vector<ReconEvalPoint> curve;
};

using SurfaceDistance = std::function<double(const Vec3d&)>;

ReconEvalReport accuracy_completeness(const std::vector<Vec3d>& recon, const std::vector<Vec3d>& gt,
                                      const SurfaceDistance& gt_distance, double tau,
                                      const std::vector<double>& sweep = {});

}  // namespace sm
