#include <benchmark/benchmark.h>

#include "surfelmesh/association.hpp"
#include "surfelmesh/denoise.hpp"
#include "surfelmesh/fusion.hpp"
#include "surfelmesh/preprocess.hpp"
#include "surfelmesh/synth.hpp"

using namespace sm;

namespace {

// One VGA sphere frame fused into an empty cloud; neighbors from a second
// association against the same frame.
struct Fixture {
  CameraIntrinsics K = CameraIntrinsics::centered(640, 480);
  DepthFrame frame;
  SurfelCloud cloud;
  DenoiseConfig denoise;

  Fixture() {
    SyntheticScene scene = make_scene("sphere");
    Pose P = Pose::look_at(Vec3d(1.5, 0, 0), Vec3d::Zero(), Vec3d(0, 0, 1));
    RenderedFrame r = render_frame(scene, P, K);
    frame.depth = r.depth;
    frame.color = r.color;
    frame.valid = mask_from_depth(r.depth);
    frame.pose = P;
    compute_normals_and_radii(frame, K, 85.0);
    AssocConfig ac;
    integrate_frame(cloud, frame, frame.depth, associate(cloud, frame, K, ac, 0), K, FusionConfig{});
    frame.t = 1;
    update_neighbors(cloud, associate(cloud, frame, K, ac, 0), denoise);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_Bilateral(benchmark::State& st) {
  PreprocessConfig c;
  const DepthImage& d = fixture().frame.depth;
  for (auto _ : st) benchmark::DoNotOptimize(bilateral_filter(d, c));
}

void BM_BilateralSerial(benchmark::State& st) {
  PreprocessConfig c;
  const DepthImage& d = fixture().frame.depth;
  for (auto _ : st) benchmark::DoNotOptimize(serial::bilateral_filter(d, c));
}

void BM_Associate(benchmark::State& st) {
  Fixture& f = fixture();
  AssocConfig c;
  for (auto _ : st) benchmark::DoNotOptimize(associate(f.cloud, f.frame, f.K, c, 0));
}

void BM_AssociateSerial(benchmark::State& st) {
  Fixture& f = fixture();
  AssocConfig c;
  for (auto _ : st) benchmark::DoNotOptimize(serial::associate(f.cloud, f.frame, f.K, c, 0));
}

void BM_CostGradient(benchmark::State& st) {
  Fixture& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(cost_gradient(f.cloud, f.denoise));
}

void BM_CostGradientSerial(benchmark::State& st) {
  Fixture& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(serial::cost_gradient(f.cloud, f.denoise));
}

}  // namespace

BENCHMARK(BM_Bilateral)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BilateralSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Associate)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AssociateSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CostGradient)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CostGradientSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
