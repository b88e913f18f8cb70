#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sm {

using Vec2d = Eigen::Vector2d;
using Vec3d = Eigen::Vector3d;
using Mat3d = Eigen::Matrix3d;
using Quatd = Eigen::Quaterniond;

using SurfelId = std::uint32_t;
using TriId = std::uint32_t;
constexpr SurfelId kNoSurfel = 0xffffffffu;

struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;
  double depth_scale = 5000.0;

  bool valid() const;
  // Intrinsics of a camera looking through the image center, scaled from
  // the TUM default focal length (525 px at 640 px width).
  static CameraIntrinsics centered(int width, int height);
};

// Camera-to-world rigid transform.
struct Pose {
  Quatd rotation = Quatd::Identity();
  Vec3d translation = Vec3d::Zero();

  Vec3d to_world(const Vec3d& p_cam) const { return rotation * p_cam + translation; }
  Vec3d to_camera(const Vec3d& p_world) const {
    return rotation.conjugate() * (p_world - translation);
  }
  Vec3d rotate_to_world(const Vec3d& v) const { return rotation * v; }
  Vec3d rotate_to_camera(const Vec3d& v) const { return rotation.conjugate() * v; }
  Vec3d center() const { return translation; }
  bool valid() const;

  static Pose look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up);
};

struct Subpixel {
  double u = 0;
  double v = 0;
  double depth = 0;
};

Vec3d unproject(int x, int y, double depth, const CameraIntrinsics& K);
std::optional<Subpixel> project(const Vec3d& p_cam, const CameraIntrinsics& K);

template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, const T& fill = T()) : width(w), height(h), data(std::size_t(w) * h, fill) {}

  T& operator()(int x, int y) { return data[std::size_t(y) * width + x]; }
  const T& operator()(int x, int y) const { return data[std::size_t(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t size() const { return data.size(); }
};

using DepthImage = Image<double>;
using MaskImage = Image<std::uint8_t>;

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};
using ColorImage = Image<Rgb8>;

enum class TriState : std::uint8_t { kFree = 0, kFront = 1, kCompleted = 2 };

struct Surfel {
  Vec3d p = Vec3d::Zero();
  Vec3d p_bar = Vec3d::Zero();
  Vec3d n = Vec3d::UnitZ();
  Vec3d c = Vec3d::Zero();
  double sigma = 1.0;
  double r = 0.0;
  std::int64_t t0 = 0;
  std::int64_t t = 0;
  std::array<SurfelId, 4> neighbors{kNoSurfel, kNoSurfel, kNoSurfel, kNoSurfel};
  std::uint8_t neighbor_count = 0;
  Vec3d grad_accum = Vec3d::Zero();
  TriState tri_state = TriState::kFree;
  Vec3d delta_p = Vec3d::Zero();

  void clear_neighbors() {
    neighbors.fill(kNoSurfel);
    neighbor_count = 0;
  }
};

// Slot store of surfels. IDs are stable slot indices; removed slots are
// reused. Changes since the last meshing snapshot are tracked in ordered sets.
class SurfelCloud {
 public:
  SurfelId add(const Surfel& s);
  void remove(SurfelId id);
  // Reuses the slot for a new surfel; the old occupant's identity is gone.
  void replace(SurfelId id, const Surfel& s);

  bool live(SurfelId id) const { return id < live_.size() && live_[id]; }
  Surfel& operator[](SurfelId id) { return slots_[id]; }
  const Surfel& operator[](SurfelId id) const { return slots_[id]; }

  std::size_t capacity() const { return slots_.size(); }
  std::size_t live_count() const { return live_count_; }
  std::vector<SurfelId> live_ids() const;
  // Generation counter of a slot; bumped on every remove or replace.
  std::uint32_t generation(SurfelId id) const { return generation_[id]; }

  void mark_moved(SurfelId id) { moved_.insert(id); }

  const std::set<SurfelId>& moved_since_mesh() const { return moved_; }
  const std::set<SurfelId>& replaced_since_mesh() const { return replaced_; }
  const std::set<SurfelId>& created_since_mesh() const { return created_; }
  const std::set<SurfelId>& removed_since_mesh() const { return removed_; }
  const std::vector<SurfelId>& free_list() const { return free_list_; }
  void clear_change_tracking();

 private:
  std::vector<Surfel> slots_;
  std::vector<std::uint8_t> live_;
  std::vector<std::uint32_t> generation_;
  std::vector<SurfelId> free_list_;
  std::size_t live_count_ = 0;
  std::set<SurfelId> moved_;
  std::set<SurfelId> replaced_;
  std::set<SurfelId> created_;
  std::set<SurfelId> removed_;
};

struct Triangle {
  std::array<SurfelId, 3> v;
};

// Triangles over surfel IDs with per-surfel incidence. The triangulation state
// of every surfel is derived from its incident triangles and cached.
class TriangleMesh {
 public:
  TriId add(SurfelId a, SurfelId b, SurfelId c);
  void remove(TriId t);
  void remove_all_of(SurfelId s);
  void clear();

  bool alive(TriId t) const { return t < alive_.size() && alive_[t]; }
  const Triangle& triangle(TriId t) const { return tris_[t]; }
  std::size_t triangle_capacity() const { return tris_.size(); }
  std::size_t triangle_count() const { return count_; }

  const std::vector<TriId>& incident(SurfelId s) const;
  TriState state(SurfelId s) const { return s < state_.size() ? state_[s] : TriState::kFree; }

  // Triangle with the same unordered vertex set, if any.
  std::optional<TriId> find(SurfelId a, SurfelId b, SurfelId c) const;
  // True if a triangle contains the directed edge a->b.
  bool has_directed_edge(SurfelId a, SurfelId b) const;
  int edge_triangle_count(SurfelId a, SurfelId b) const;

  std::vector<Triangle> triangles() const;

 private:
  void ensure(SurfelId s);
  void update_state(SurfelId s);

  std::vector<Triangle> tris_;
  std::vector<std::uint8_t> alive_;
  std::vector<TriId> free_tris_;
  std::size_t count_ = 0;
  std::vector<std::vector<TriId>> incidence_;
  std::vector<TriState> state_;
};

// Rotates triangle t so that s is its first vertex; returns the other two in
// counterclockwise order.
std::pair<SurfelId, SurfelId> opposite_edge(const Triangle& t, SurfelId s);

// Indexed triangle mesh with explicit vertex positions, as exported and
// evaluated.
struct PolyMesh {
  std::vector<Vec3d> vertices;
  std::vector<Rgb8> colors;  // empty or one per vertex
  std::vector<std::array<std::uint32_t, 3>> faces;
};

double angle_between(const Vec3d& a, const Vec3d& b);
double deg2rad(double deg);
double rad2deg(double rad);

}  // namespace sm
