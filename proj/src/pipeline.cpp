#include "surfelmesh/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "surfelmesh/blend.hpp"

namespace sm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string timing_csv_header() {
  return "frame,preprocess,associate,blend,integrate,denoise,snapshot,remesh,mesh,publish,triangles,deleted,"
         "deletion_fraction,surfels";
}

std::string timing_csv_row(const TimingRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%lld,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%zu,%.6f,%zu",
                static_cast<long long>(r.frame), r.preprocess, r.associate, r.blend, r.integrate, r.denoise,
                r.snapshot, r.remesh, r.mesh, r.publish, r.triangles, r.deleted, r.deletion_fraction, r.surfels);
  return buf;
}

Pipeline::Pipeline(const PipelineConfig& config, const CameraIntrinsics& K) : config_(config), K_(K) {
  config_.validate();
  if (!K_.valid()) throw std::invalid_argument("invalid camera intrinsics");
  published_ = std::make_shared<PublishedMesh>();
  if (config_.meshing_mode == MeshingMode::kAsync) worker_ = std::thread([this] { meshing_thread(); });
}

Pipeline::~Pipeline() {
  if (worker_.joinable()) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
      pending_.reset();
    }
    cv_.notify_all();
    worker_.join();
  }
}

void Pipeline::set_deformation_events(std::vector<DeformationEvent> events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const DeformationEvent& a, const DeformationEvent& b) { return a.frame < b.frame; });
  events_ = std::move(events);
  next_event_ = 0;
}

std::vector<SurfelId> Pipeline::apply_deformation_now(const std::map<SurfelId, Vec3d>& offsets) {
  return apply_deformation(cloud_, offsets, config_.denoise);
}

void Pipeline::push_frame(const RawFrame& raw) {
  if (raw.depth.width != K_.width || raw.depth.height != K_.height)
    throw std::invalid_argument("frame size does not match intrinsics");
  auto t0 = Clock::now();
  Buffered b;
  b.index = buffer_.empty() ? next_to_process_ : buffer_.back().index + 1;
  b.timestamp = raw.timestamp;
  b.filtered = preprocess_single(raw.depth, config_.preprocess);
  b.color = raw.color;
  b.pose = raw.pose;
  buffer_.push_back(std::move(b));
  const double pre = seconds_since(t0);
  const std::int64_t W = config_.preprocess.enable_temporal ? config_.preprocess.temporal_window : 0;
  while (!buffer_.empty() && buffer_.back().index >= next_to_process_ + W) {
    std::size_t k = 0;
    while (buffer_[k].index != next_to_process_) ++k;
    process_buffered(k);
    timings_.back().preprocess += pre;
    while (!buffer_.empty() && buffer_.front().index < next_to_process_ - W) buffer_.pop_front();
  }
}

void Pipeline::process_buffered(std::size_t k) {
  const Buffered& c = buffer_[k];
  const std::int64_t f = c.index;
  const std::int64_t W = config_.preprocess.enable_temporal ? config_.preprocess.temporal_window : 0;
  TimingRecord rec;
  rec.frame = f;

  auto t0 = Clock::now();
  std::vector<PosedDepth> window;
  for (const Buffered& o : buffer_)
    if (o.index != f && std::abs(o.index - f) <= W) window.push_back(PosedDepth{&o.filtered, o.pose});
  DepthFrame frame = preprocess_finish(c.filtered, c.color, c.pose, f, window, K_, config_.preprocess);
  rec.preprocess = seconds_since(t0);

  t0 = Clock::now();
  AssociationResult assoc = associate(cloud_, frame, K_, config_.association, config_.seed);
  reactivate_deferred(deferred_, assoc, cloud_);
  rec.associate = seconds_since(t0);

  t0 = Clock::now();
  DepthImage blended = frame.depth;
  blend_boundaries(blended, assoc.surfel_depth_image, config_.blend_iterations);
  rec.blend = seconds_since(t0);

  t0 = Clock::now();
  integrate_frame(cloud_, frame, blended, assoc, K_, config_.fusion);
  merge_similar(cloud_, assoc, config_.fusion);
  rec.integrate = seconds_since(t0);

  t0 = Clock::now();
  update_neighbors(cloud_, assoc, config_.denoise);
  denoise_iteration(cloud_, f, config_.denoise);
  while (next_event_ < events_.size() && events_[next_event_].frame <= f) {
    if (events_[next_event_].frame == f) apply_deformation(cloud_, events_[next_event_].offsets, config_.denoise);
    ++next_event_;
  }
  rec.denoise = seconds_since(t0);

  ++next_to_process_;
  ++frames_processed_;
  after_frame(rec);
  rec.surfels = cloud_.live_count();
  timings_.push_back(rec);
}

void Pipeline::after_frame(TimingRecord& rec) {
  auto fill = [&](const MeshingIterationStats& s) {
    rec.remesh = s.remesh_time;
    rec.mesh = s.mesh_time;
    rec.publish = s.publish;
    rec.deleted = s.remesh.deleted;
    rec.deletion_fraction = s.remesh.deletion_fraction();
  };
  if (config_.meshing_mode == MeshingMode::kLockstep) {
    MeshingIterationStats s = mesh_iteration();
    rec.snapshot = s.snapshot;
    fill(s);
  } else {
    std::unique_lock<std::mutex> lock(mu_);
    if (worker_error_) std::rethrow_exception(worker_error_);
    if (finished_stats_) {
      fill(*finished_stats_);
      finished_stats_.reset();
    }
    if (!busy_ && !pending_) {
      lock.unlock();
      auto t0 = Clock::now();
      SurfelSnapshot snap = take_snapshot();
      rec.snapshot = seconds_since(t0);
      lock.lock();
      pending_ = std::move(snap);
      busy_ = true;
      cv_.notify_all();
    }
  }
  rec.triangles = published()->triangles.size();
}

SurfelSnapshot Pipeline::take_snapshot() {
  SurfelSnapshot snap = make_snapshot(cloud_, frames_processed_ - 1);
  defer_inactive(snap, config_.association.active_window, deferred_);
  return snap;
}

MeshingIterationStats Pipeline::run_meshing(SurfelSnapshot snap) {
  MeshingIterationStats st;
  auto t0 = Clock::now();
  sync_octree(snap, tree_);
  RemeshResult rem = remesh_pass(snap, tree_, mesh_, config_.remesh);
  st.remesh = rem.stats;
  st.remesh_time = seconds_since(t0);

  t0 = Clock::now();
  std::set<SurfelId> scheduled = rem.scheduled;
  for (SurfelId id : retry_)
    if (snap.is_live(id)) scheduled.insert(id);
  MeshingQueue q = build_queue(snap, mesh_, scheduled);
  st.meshing = run_meshing_iteration(q, snap, tree_, mesh_, config_.meshing);
  // Aborted surfels get one more attempt in the following iteration.
  std::set<SurfelId> next_retry;
  for (SurfelId id : st.meshing.aborted_ids)
    if (!retry_.count(id)) next_retry.insert(id);
  retry_ = std::move(next_retry);
  st.mesh_time = seconds_since(t0);

  t0 = Clock::now();
  auto pub = std::make_shared<PublishedMesh>();
  pub->triangles = mesh_.triangles();
  pub->generation = std::move(snap.generation);
  pub->frame = snap.frame;
  {
    std::lock_guard<std::mutex> lock(publish_mu_);
    published_ = std::move(pub);
  }
  st.publish = seconds_since(t0);
  return st;
}

MeshingIterationStats Pipeline::mesh_iteration() {
  auto t0 = Clock::now();
  SurfelSnapshot snap = take_snapshot();
  double snap_time = seconds_since(t0);
  MeshingIterationStats st = run_meshing(std::move(snap));
  st.snapshot = snap_time;
  return st;
}

void Pipeline::meshing_thread() {
  while (true) {
    SurfelSnapshot snap;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [&] { return stop_ || pending_.has_value(); });
      if (!pending_) return;
      snap = std::move(*pending_);
      pending_.reset();
    }
    try {
      MeshingIterationStats st = run_meshing(std::move(snap));
      std::lock_guard<std::mutex> lock(mu_);
      finished_stats_ = st;
      busy_ = false;
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      worker_error_ = std::current_exception();
      busy_ = false;
    }
    cv_.notify_all();
  }
}

void Pipeline::stop_meshing_thread() {
  if (!worker_.joinable()) return;
  {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return !busy_ && !pending_; });
    stop_ = true;
  }
  cv_.notify_all();
  worker_.join();
  if (worker_error_) std::rethrow_exception(worker_error_);
}

void Pipeline::finish() {
  while (!buffer_.empty() && buffer_.back().index >= next_to_process_) {
    std::size_t k = 0;
    while (buffer_[k].index != next_to_process_) ++k;
    process_buffered(k);
  }
  buffer_.clear();
  if (config_.meshing_mode == MeshingMode::kAsync) {
    stop_meshing_thread();
    if (frames_processed_ > 0) mesh_iteration();
  }
}

std::shared_ptr<const PublishedMesh> Pipeline::published() const {
  std::lock_guard<std::mutex> lock(publish_mu_);
  return published_;
}

PolyMesh Pipeline::export_mesh(bool strip_free) const {
  auto pub = published();
  const std::size_t cap = cloud_.capacity();
  std::vector<std::int64_t> vindex(cap, -1);
  PolyMesh m;
  for (SurfelId id = 0; id < cap; ++id) {
    if (!cloud_.live(id)) continue;
    vindex[id] = static_cast<std::int64_t>(m.vertices.size());
    const Surfel& s = cloud_[id];
    m.vertices.push_back(s.p_bar);
    auto ch = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)); };
    m.colors.push_back(Rgb8{ch(s.c.x()), ch(s.c.y()), ch(s.c.z())});
  }
  for (const Triangle& t : pub->triangles) {
    bool ok = true;
    for (SurfelId v : t.v)
      ok = ok && v < cap && cloud_.live(v) && v < pub->generation.size() &&
           pub->generation[v] == cloud_.generation(v);
    if (!ok) continue;
    m.faces.push_back({std::uint32_t(vindex[t.v[0]]), std::uint32_t(vindex[t.v[1]]), std::uint32_t(vindex[t.v[2]])});
  }
  if (!strip_free) return m;
  std::vector<std::int64_t> remap(m.vertices.size(), -1);
  for (const auto& f : m.faces)
    for (std::uint32_t v : f) remap[v] = 0;
  PolyMesh out;
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    if (remap[i] < 0) continue;
    remap[i] = static_cast<std::int64_t>(out.vertices.size());
    out.vertices.push_back(m.vertices[i]);
    out.colors.push_back(m.colors[i]);
  }
  for (const auto& f : m.faces)
    out.faces.push_back({std::uint32_t(remap[f[0]]), std::uint32_t(remap[f[1]]), std::uint32_t(remap[f[2]])});
  return out;
}

RunResult run_dataset(const TumDataset& dataset, const std::vector<DeformationEvent>& events,
                      const PipelineConfig& config) {
  Pipeline p(config, dataset.K);
  p.set_deformation_events(events);
  {
    FramePrefetcher prefetch(dataset);
    while (auto f = prefetch.next()) p.push_frame(*f);
  }
  p.finish();
  RunResult r;
  r.mesh = p.export_mesh(config.strip_free);
  r.timings = p.timings();
  r.frames = static_cast<std::size_t>(p.frames_processed());
  r.skipped_without_pose = dataset.skipped_without_pose;
  if (!config.timing_log.empty()) {
    std::ofstream out(config.timing_log);
    if (!out) throw std::runtime_error("cannot write timing log " + config.timing_log);
    out << timing_csv_header() << "\n";
    for (const auto& t : r.timings) out << timing_csv_row(t) << "\n";
  }
  return r;
}

}  // namespace sm
