#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>

#include "surfelmesh/config.hpp"
#include "surfelmesh/io.hpp"
#include "surfelmesh/octree.hpp"

namespace sm {

struct TimingRecord {
  std::int64_t frame = 0;
  // Seconds.
  double preprocess = 0, associate = 0, blend = 0, integrate = 0, denoise = 0;
  double snapshot = 0, remesh = 0, mesh = 0, publish = 0;
  std::size_t triangles = 0;
  std::size_t deleted = 0;
  double deletion_fraction = 0;
  std::size_t surfels = 0;
};

std::string timing_csv_header();
std::string timing_csv_row(const TimingRecord& r);

// Triangle list of a finished meshing iteration with the slot generations it
// was built against.
struct PublishedMesh {
  std::vector<Triangle> triangles;
  std::vector<std::uint32_t> generation;  // per slot, at snapshot time
  std::int64_t frame = -1;
};

struct MeshingIterationStats {
  RemeshStats remesh;
  MeshingStats meshing;
  double snapshot = 0, remesh_time = 0, mesh_time = 0, publish = 0;
};

class Pipeline {
 public:
  Pipeline(const PipelineConfig& config, const CameraIntrinsics& K);
  ~Pipeline();
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  // Frames are processed once their temporal window is complete.
  void push_frame(const RawFrame& frame);
  // Processes buffered frames and, in async mode, joins the meshing thread
  // and runs one final synchronous meshing iteration.
  void finish();

  // Deformation events applied after the frame with that index is fused.
  void set_deformation_events(std::vector<DeformationEvent> events);
  // Applies offsets immediately. Returns moved surfels.
  std::vector<SurfelId> apply_deformation_now(const std::map<SurfelId, Vec3d>& offsets);

  // One synchronous snapshot + remesh + mesh + publish.
  MeshingIterationStats mesh_iteration();

  // Live surfels in ID order (denoised positions); faces from the latest
  // published triangulation whose vertices are unchanged slots.
  PolyMesh export_mesh(bool strip_free = false) const;

  SurfelCloud& cloud() { return cloud_; }
  const SurfelCloud& cloud() const { return cloud_; }
  const TriangleMesh& mesh() const { return mesh_; }
  CompressedOctree& octree() { return tree_; }
  const CameraIntrinsics& intrinsics() const { return K_; }
  const PipelineConfig& config() const { return config_; }
  const std::vector<TimingRecord>& timings() const { return timings_; }
  std::int64_t frames_processed() const { return frames_processed_; }
  std::shared_ptr<const PublishedMesh> published() const;

 private:
  struct Buffered {
    std::int64_t index;
    double timestamp;
    DepthImage filtered;
    ColorImage color;
    Pose pose;
  };

  void process_buffered(std::size_t k);
  void after_frame(TimingRecord& rec);
  SurfelSnapshot take_snapshot();
  MeshingIterationStats run_meshing(SurfelSnapshot snap);
  void meshing_thread();
  void stop_meshing_thread();

  PipelineConfig config_;
  CameraIntrinsics K_;
  SurfelCloud cloud_;
  TriangleMesh mesh_;
  CompressedOctree tree_;
  DeferredMoves deferred_;
  std::set<SurfelId> retry_;
  std::set<SurfelId> aborted_before_;
  std::vector<DeformationEvent> events_;
  std::size_t next_event_ = 0;

  std::deque<Buffered> buffer_;
  std::int64_t next_to_process_ = 0;
  std::int64_t frames_processed_ = 0;
  std::vector<TimingRecord> timings_;

  mutable std::mutex publish_mu_;
  std::shared_ptr<const PublishedMesh> published_;

  // Async meshing handoff.
  std::thread worker_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::optional<SurfelSnapshot> pending_;
  bool busy_ = false;
  bool stop_ = false;
  std::exception_ptr worker_error_;
  std::optional<MeshingIterationStats> finished_stats_;
};

struct RunResult {
  PolyMesh mesh;
  std::vector<TimingRecord> timings;
  std::size_t frames = 0;
  std::size_t skipped_without_pose = 0;
};

// Runs a dataset end to end, writing the timing log if configured.
RunResult run_dataset(const TumDataset& dataset, const std::vector<DeformationEvent>& events,
                      const PipelineConfig& config);

}  // namespace sm
