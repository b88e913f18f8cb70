#include "surfelmesh/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sm {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path);
  return f;
}

// Decodes a PNG into rows of the requested bit depth and channel count.
// channels: 1 (gray) or 3 (rgb).
std::vector<std::uint8_t> read_png_raw(const std::string& path, int want_bits, int want_channels, int& w,
                                       int& h) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw std::runtime_error("libpng init failed");
  std::vector<std::uint8_t> buf;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("cannot decode PNG " + path);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  int bits = png_get_bit_depth(png, info);
  int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && bits < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (want_channels == 3 && (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA))
    png_set_gray_to_rgb(png);
  if (want_channels == 1 && (color & PNG_COLOR_MASK_COLOR)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("expected single-channel PNG: " + path);
  }
  if (want_bits == 8 && bits == 16) png_set_strip_16(png);
  if (want_bits == 16 && bits != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("expected 16-bit PNG: " + path);
  }
  if (want_bits == 16) png_set_swap(png);  // to host little-endian
  png_read_update_info(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  if (stride != std::size_t(w) * want_channels * (want_bits / 8)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("unsupported PNG layout: " + path);
  }
  buf.resize(stride * h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return buf;
}

void write_png_raw(const std::string& path, const std::uint8_t* data, int w, int h, int bits,
                   int channels) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) throw std::runtime_error("libpng init failed");
  std::vector<png_bytep> rows(h);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("cannot encode PNG " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, w, h, bits, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bits == 16) png_set_swap(png);
  const std::size_t stride = std::size_t(w) * channels * (bits / 8);
  for (int y = 0; y < h; ++y) rows[y] = const_cast<png_bytep>(data + stride * y);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct Listing {
  double t;
  std::string path;
};

std::vector<Listing> read_listing(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Listing> out;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Listing l;
    if (!(ss >> l.t >> l.path)) throw std::runtime_error("malformed line in " + path + ": " + line);
    out.push_back(l);
  }
  return out;
}

}  // namespace

Image<std::uint16_t> read_png_u16(const std::string& path) {
  int w = 0, h = 0;
  auto buf = read_png_raw(path, 16, 1, w, h);
  Image<std::uint16_t> img(w, h);
  std::memcpy(img.data.data(), buf.data(), buf.size());
  return img;
}

void write_png_u16(const std::string& path, const Image<std::uint16_t>& img) {
  write_png_raw(path, reinterpret_cast<const std::uint8_t*>(img.data.data()), img.width, img.height, 16, 1);
}

ColorImage read_png_rgb(const std::string& path) {
  int w = 0, h = 0;
  auto buf = read_png_raw(path, 8, 3, w, h);
  ColorImage img(w, h);
  for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = Rgb8{buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]};
  return img;
}

void write_png_rgb(const std::string& path, const ColorImage& img) {
  std::vector<std::uint8_t> buf(img.size() * 3);
  for (std::size_t i = 0; i < img.size(); ++i) {
    buf[3 * i] = img.data[i].r;
    buf[3 * i + 1] = img.data[i].g;
    buf[3 * i + 2] = img.data[i].b;
  }
  write_png_raw(path, buf.data(), img.width, img.height, 8, 3);
}

std::vector<TimedPose> read_tum_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory " + path);
  std::vector<TimedPose> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> t >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed trajectory line");
    TimedPose p;
    p.timestamp = t;
    p.pose.translation = Vec3d(tx, ty, tz);
    p.pose.rotation = Quatd(qw, qx, qy, qz).normalized();
    out.push_back(p);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TimedPose& a, const TimedPose& b) { return a.timestamp < b.timestamp; });
  return out;
}

void write_tum_trajectory(const std::string& path, const std::vector<TimedPose>& poses) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  char buf[512];
  for (const auto& p : poses) {
    const Quatd& q = p.pose.rotation;
    const Vec3d& t = p.pose.translation;
    std::snprintf(buf, sizeof buf, "%.6f %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", p.timestamp, t.x(),
                  t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    out << buf;
  }
}

std::optional<Pose> match_pose(const std::vector<TimedPose>& traj, double t, double max_dt) {
  auto it = std::lower_bound(traj.begin(), traj.end(), t,
                             [](const TimedPose& p, double v) { return p.timestamp < v; });
  const TimedPose* best = nullptr;
  double best_dt = max_dt;
  if (it != traj.end() && std::abs(it->timestamp - t) <= best_dt) {
    best = &*it;
    best_dt = std::abs(it->timestamp - t);
  }
  if (it != traj.begin()) {
    auto pr = std::prev(it);
    if (std::abs(pr->timestamp - t) < best_dt || (!best && std::abs(pr->timestamp - t) <= max_dt)) best = &*pr;
  }
  if (!best) return std::nullopt;
  return best->pose;
}

CameraIntrinsics read_camera_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CameraIntrinsics K;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    double v = std::stod(trim(line.substr(eq + 1)));
    if (key == "fx") K.fx = v;
    else if (key == "fy") K.fy = v;
    else if (key == "cx") K.cx = v;
    else if (key == "cy") K.cy = v;
    else if (key == "width") K.width = int(v);
    else if (key == "height") K.height = int(v);
    else if (key == "depth_scale") K.depth_scale = v;
    else throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown key " + key);
  }
  if (!K.valid()) throw std::runtime_error("invalid intrinsics in " + path);
  return K;
}

void write_camera_file(const std::string& path, const CameraIntrinsics& K) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[512];
  std::snprintf(buf, sizeof buf, "fx=%.17g\nfy=%.17g\ncx=%.17g\ncy=%.17g\nwidth=%d\nheight=%d\ndepth_scale=%.17g\n",
                K.fx, K.fy, K.cx, K.cy, K.width, K.height, K.depth_scale);
  out << buf;
}

TumDataset load_tum_dataset(const std::string& dir, const std::string& trajectory_path) {
  TumDataset ds;
  ds.dir = dir;
  if (!fs::is_directory(dir)) throw std::runtime_error("dataset directory not found: " + dir);
  const fs::path root(dir);
  if (fs::exists(root / "camera.txt")) ds.K = read_camera_file((root / "camera.txt").string());

  std::string traj = trajectory_path;
  if (traj.empty()) {
    for (const char* name : {"groundtruth.txt", "trajectory.txt"})
      if (fs::exists(root / name)) {
        traj = (root / name).string();
        break;
      }
  }
  if (traj.empty()) throw std::runtime_error("no trajectory file in " + dir);
  std::vector<TimedPose> poses = read_tum_trajectory(traj);

  struct Pair {
    double t;
    std::string depth, color;
  };
  std::vector<Pair> pairs;
  if (fs::exists(root / "associations.txt")) {
    std::ifstream in(root / "associations.txt");
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      double t1, t2;
      std::string p1, p2;
      if (!(ss >> t1 >> p1 >> t2 >> p2)) throw std::runtime_error("malformed associations line: " + line);
      // Either column order is accepted; the depth column is recognized by name.
      if (p1.find("depth") != std::string::npos && p2.find("depth") == std::string::npos)
        pairs.push_back({t1, p1, p2});
      else
        pairs.push_back({t2, p2, p1});
    }
  } else if (fs::exists(root / "depth.txt") && fs::exists(root / "rgb.txt")) {
    auto depth = read_listing((root / "depth.txt").string());
    auto rgb = read_listing((root / "rgb.txt").string());
    for (const auto& d : depth) {
      const Listing* best = nullptr;
      for (const auto& c : rgb)
        if (std::abs(c.t - d.t) <= 0.02 && (!best || std::abs(c.t - d.t) < std::abs(best->t - d.t))) best = &c;
      if (best) pairs.push_back({d.t, d.path, best->path});
    }
  } else {
    throw std::runtime_error("no associations.txt or depth.txt/rgb.txt in " + dir);
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.t < b.t; });
  for (const Pair& p : pairs) {
    auto pose = match_pose(poses, p.t);
    if (!pose) {
      ++ds.skipped_without_pose;
      continue;
    }
    ds.frames.push_back(DatasetFrameRecord{p.t, p.depth, p.color, *pose});
  }
  return ds;
}

RawFrame load_frame(const TumDataset& ds, std::size_t i) {
  const DatasetFrameRecord& rec = ds.frames.at(i);
  const fs::path root(ds.dir);
  Image<std::uint16_t> raw = read_png_u16((root / rec.depth_path).string());
  RawFrame f;
  f.index = static_cast<std::int64_t>(i);
  f.timestamp = rec.timestamp;
  f.pose = rec.pose;
  f.depth = DepthImage(raw.width, raw.height, 0.0);
  for (std::size_t k = 0; k < raw.size(); ++k) f.depth.data[k] = raw.data[k] / ds.K.depth_scale;
  f.color = read_png_rgb((root / rec.color_path).string());
  if (f.color.width != raw.width || f.color.height != raw.height)
    throw std::runtime_error("color/depth size mismatch at frame " + std::to_string(i));
  if (raw.width != ds.K.width || raw.height != ds.K.height)
    throw std::runtime_error("image size does not match intrinsics at frame " + std::to_string(i));
  return f;
}

FramePrefetcher::FramePrefetcher(const TumDataset& ds, std::size_t capacity)
    : ds_(ds), capacity_(std::max<std::size_t>(1, capacity)), worker_([this] { run(); }) {}

FramePrefetcher::~FramePrefetcher() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

void FramePrefetcher::run() {
  for (std::size_t i = 0; i < ds_.frames.size(); ++i) {
    std::optional<RawFrame> f;
    try {
      f = load_frame(ds_, i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      error_ = std::current_exception();
      done_ = true;
      cv_.notify_all();
      return;
    }
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] { return stop_ || queue_.size() < capacity_; });
    if (stop_) return;
    queue_.push_back(std::move(*f));
    cv_.notify_all();
  }
  std::lock_guard<std::mutex> lock(mu_);
  done_ = true;
  cv_.notify_all();
}

std::optional<RawFrame> FramePrefetcher::next() {
  std::unique_lock<std::mutex> lock(mu_);
  cv_.wait(lock, [&] { return !queue_.empty() || done_; });
  if (!queue_.empty()) {
    RawFrame f = std::move(queue_.front());
    queue_.pop_front();
    cv_.notify_all();
    return f;
  }
  if (error_) std::rethrow_exception(error_);
  return std::nullopt;
}

namespace {

template <typename T>
void put(std::string& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.append(b, sizeof(T));
}

}  // namespace

std::string ply_bytes(const PolyMesh& mesh) {
  std::string out;
  out += "ply\nformat binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(mesh.vertices.size()) + "\n";
  out += "property float x\nproperty float y\nproperty float z\n";
  out += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out += "element face " + std::to_string(mesh.faces.size()) + "\n";
  out += "property list uchar int vertex_indices\nend_header\n";
  out.reserve(out.size() + 15 * mesh.vertices.size() + 13 * mesh.faces.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3d& p = mesh.vertices[i];
    put(out, static_cast<float>(p.x()));
    put(out, static_cast<float>(p.y()));
    put(out, static_cast<float>(p.z()));
    Rgb8 c = mesh.colors.empty() ? Rgb8{200, 200, 200} : mesh.colors[i];
    put(out, c.r);
    put(out, c.g);
    put(out, c.b);
  }
  for (const auto& f : mesh.faces) {
    put(out, std::uint8_t(3));
    for (std::uint32_t v : f) put(out, static_cast<std::int32_t>(v));
  }
  return out;
}

void write_ply(const std::string& path, const PolyMesh& mesh) {
  std::string bytes = ply_bytes(mesh);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

PolyMesh read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (trim(line) != "ply") throw std::runtime_error("not a PLY file: " + path);
  std::size_t nv = 0, nf = 0;
  std::vector<std::string> vprops;
  std::string current;
  bool binary_le = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line == "end_header") break;
    std::istringstream ss(line);
    std::string kw;
    ss >> kw;
    if (kw == "format") {
      std::string f;
      ss >> f;
      binary_le = f == "binary_little_endian";
    } else if (kw == "element") {
      std::size_t n;
      ss >> current >> n;
      if (current == "vertex") nv = n;
      else if (current == "face") nf = n;
      else if (n > 0) throw std::runtime_error("unsupported PLY element " + current);
    } else if (kw == "property" && current == "vertex") {
      std::string type, name;
      ss >> type >> name;
      vprops.push_back(type + " " + name);
    } else if (kw == "property" && current == "face") {
      std::string list, ct, it, name;
      ss >> list >> ct >> it >> name;
      if (list != "list" || ct != "uchar" || (it != "int" && it != "int32"))
        throw std::runtime_error("unsupported PLY face layout in " + path);
    }
  }
  const std::vector<std::string> expected = {"float x", "float y", "float z",
                                             "uchar red", "uchar green", "uchar blue"};
  if (!binary_le || vprops != expected) throw std::runtime_error("unsupported PLY layout in " + path);
  PolyMesh m;
  m.vertices.resize(nv);
  m.colors.resize(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    float xyz[3];
    std::uint8_t rgb[3];
    in.read(reinterpret_cast<char*>(xyz), sizeof xyz);
    in.read(reinterpret_cast<char*>(rgb), sizeof rgb);
    m.vertices[i] = Vec3d(xyz[0], xyz[1], xyz[2]);
    m.colors[i] = Rgb8{rgb[0], rgb[1], rgb[2]};
  }
  m.faces.resize(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    std::uint8_t cnt = 0;
    std::int32_t idx[3];
    in.read(reinterpret_cast<char*>(&cnt), 1);
    if (cnt != 3) throw std::runtime_error("non-triangle face in " + path);
    in.read(reinterpret_cast<char*>(idx), sizeof idx);
    for (int k = 0; k < 3; ++k) {
      if (idx[k] < 0 || std::size_t(idx[k]) >= nv) throw std::runtime_error("face index out of range in " + path);
      m.faces[i][k] = static_cast<std::uint32_t>(idx[k]);
    }
  }
  if (!in) throw std::runtime_error("truncated PLY " + path);
  return m;
}

std::vector<DeformationEvent> load_deformation_events(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<DeformationEvent> events;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    auto fail = [&] { throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed line"); };
    if (line.rfind("event", 0) == 0) {
      std::string kw;
      DeformationEvent e;
      std::string rest;
      if (!(ss >> kw >> e.frame) || kw != "event" || (ss >> rest)) fail();
      events.push_back(std::move(e));
      continue;
    }
    if (events.empty()) fail();
    long long id;
    double dx, dy, dz;
    std::string rest;
    if (!(ss >> id >> dx >> dy >> dz) || (ss >> rest) || id < 0 || id >= (long long)kNoSurfel) fail();
    events.back().offsets[static_cast<SurfelId>(id)] = Vec3d(dx, dy, dz);
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const DeformationEvent& a, const DeformationEvent& b) { return a.frame < b.frame; });
  return events;
}

void write_deformation_events(const std::string& path, const std::vector<DeformationEvent>& events) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[256];
  for (const auto& e : events) {
    out << "event " << e.frame << "\n";
    for (const auto& [id, d] : e.offsets) {
      std::snprintf(buf, sizeof buf, "%u %.17g %.17g %.17g\n", id, d.x(), d.y(), d.z());
      out << buf;
    }
  }
}

nlohmann::json to_json(const MeshQualityReport& r) {
  return nlohmann::json{{"vertices", r.vertices},         {"triangles", r.triangles},
                        {"free_pct", r.free_pct},         {"boundary_pct", r.boundary_pct},
                        {"manifold_pct", r.manifold_pct}, {"self_intersect_pct", r.self_intersect_pct},
                        {"avg_min_angle", r.avg_min_angle}, {"mean_curvature", r.mean_curvature}};
}

nlohmann::json to_json(const ReconEvalReport& r) {
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  nlohmann::json j{{"tau", r.tau}, {"accuracy_pct", num(r.accuracy_pct)}, {"completeness_pct", r.completeness_pct}};
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.curve)
    curve.push_back({{"tau", p.tau}, {"accuracy_pct", num(p.accuracy_pct)}, {"completeness_pct", p.completeness_pct}});
  j["curve"] = curve;
  return j;
}

std::string to_key_value(const MeshQualityReport& r) {
  std::ostringstream s;
  s.precision(10);
  s << "vertices=" << r.vertices << "\n"
    << "triangles=" << r.triangles << "\n"
    << "free_pct=" << r.free_pct << "\n"
    << "boundary_pct=" << r.boundary_pct << "\n"
    << "manifold_pct=" << r.manifold_pct << "\n"
    << "self_intersect_pct=" << r.self_intersect_pct << "\n"
    << "avg_min_angle=" << r.avg_min_angle << "\n"
    << "mean_curvature=" << r.mean_curvature << "\n";
  return s.str();
}

std::string to_key_value(const ReconEvalReport& r) {
  std::ostringstream s;
  s.precision(10);
  auto num = [](double v) { return std::isnan(v) ? std::string("nan") : std::to_string(v); };
  s << "tau=" << r.tau << "\n"
    << "accuracy_pct=" << num(r.accuracy_pct) << "\n"
    << "completeness_pct=" << r.completeness_pct << "\n";
  return s.str();
}

void write_report(const std::string& path, const std::string& key_value, const nlohmann::json& j) {
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << key_value;
  }
  std::ofstream out(path + ".json");
  if (!out) throw std::runtime_error("cannot write " + path + ".json");
  out << j.dump(2) << "\n";
}

}  // namespace sm
