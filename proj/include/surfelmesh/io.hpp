#pragma once

#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "surfelmesh/core.hpp"
#include "surfelmesh/metrics.hpp"

namespace sm {

// 16-bit single channel and 8-bit RGB PNG files.
Image<std::uint16_t> read_png_u16(const std::string& path);
void write_png_u16(const std::string& path, const Image<std::uint16_t>& img);
ColorImage read_png_rgb(const std::string& path);
void write_png_rgb(const std::string& path, const ColorImage& img);

struct TimedPose {
  double timestamp = 0;
  Pose pose;
};

// TUM format: "t tx ty tz qx qy qz qw" per line, '#' comments.
std::vector<TimedPose> read_tum_trajectory(const std::string& path);
void write_tum_trajectory(const std::string& path, const std::vector<TimedPose>& poses);
// Nearest pose within max_dt seconds.
std::optional<Pose> match_pose(const std::vector<TimedPose>& traj, double t, double max_dt = 0.02);

// key=value intrinsics file (fx fy cx cy width height depth_scale).
CameraIntrinsics read_camera_file(const std::string& path);
void write_camera_file(const std::string& path, const CameraIntrinsics& K);

struct DatasetFrameRecord {
  double timestamp = 0;
  std::string depth_path, color_path;  // relative to the dataset directory
  Pose pose;
};

struct TumDataset {
  std::string dir;
  CameraIntrinsics K;
  std::vector<DatasetFrameRecord> frames;
  std::size_t skipped_without_pose = 0;
};

// Reads associations.txt (or depth.txt + rgb.txt) and the trajectory
// (groundtruth.txt, trajectory.txt, or `trajectory_path`). Intrinsics come
// from camera.txt when present, TUM defaults otherwise.
TumDataset load_tum_dataset(const std::string& dir, const std::string& trajectory_path = "");

struct RawFrame {
  std::int64_t index = 0;
  double timestamp = 0;
  DepthImage depth;  // meters
  ColorImage color;
  Pose pose;
};

RawFrame load_frame(const TumDataset& ds, std::size_t i);

// Loads frames on a background thread into a bounded queue.
class FramePrefetcher {
 public:
  FramePrefetcher(const TumDataset& ds, std::size_t capacity = 4);
  ~FramePrefetcher();
  FramePrefetcher(const FramePrefetcher&) = delete;
  FramePrefetcher& operator=(const FramePrefetcher&) = delete;

  // Next frame in order; empty at the end. Rethrows loader errors.
  std::optional<RawFrame> next();

 private:
  void run();

  const TumDataset& ds_;
  std::size_t capacity_;
  std::deque<RawFrame> queue_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool done_ = false;
  bool stop_ = false;
  std::exception_ptr error_;
  std::thread worker_;
};

// Binary little-endian PLY: float xyz, uchar rgb, faces as uchar count +
// int32 indices.
void write_ply(const std::string& path, const PolyMesh& mesh);
std::string ply_bytes(const PolyMesh& mesh);
PolyMesh read_ply(const std::string& path);

struct DeformationEvent {
  std::int64_t frame = 0;
  std::map<SurfelId, Vec3d> offsets;
};

// "event <frame>" lines followed by "id dx dy dz" lines; sorted by frame.
std::vector<DeformationEvent> load_deformation_events(const std::string& path);
void write_deformation_events(const std::string& path, const std::vector<DeformationEvent>& events);

nlohmann::json to_json(const MeshQualityReport& r);
nlohmann::json to_json(const ReconEvalReport& r);
std::string to_key_value(const MeshQualityReport& r);
std::string to_key_value(const ReconEvalReport& r);
// Writes the key=value block to `path` and the JSON document to `path`.json.
void write_report(const std::string& path, const std::string& key_value, const nlohmann::json& j);

}  // namespace sm
