#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>

#include <Eigen/Core>

#include "meshfeat/parallel.hpp"
#include "meshfeat/pipeline.hpp"

namespace meshfeat {

namespace {

// Sink for timed results.
volatile float g_sink = 0.0f;

class SingleThreadScope {
 public:
  SingleThreadScope() : threads_(num_threads()), eigen_threads_(Eigen::nbThreads()) {
    set_num_threads(1);
    Eigen::setNbThreads(1);
  }
  ~SingleThreadScope() {
    set_num_threads(threads_);
    Eigen::setNbThreads(eigen_threads_);
  }

 private:
  int threads_;
  int eigen_threads_;
};

}  // namespace

TimingStats time_repeated(const std::function<void()>& fn, int warmup, int reps) {
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> ms(static_cast<size_t>(std::max(reps, 0)));
  for (double& t : ms) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    t = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  TimingStats s;
  s.reps = reps;
  if (ms.empty()) return s;
  s.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / double(ms.size());
  std::sort(ms.begin(), ms.end());
  const size_t mid = ms.size() / 2;
  s.median_ms = ms.size() % 2 ? ms[mid] : 0.5 * (ms[mid - 1] + ms[mid]);
  return s;
}

BenchmarkReport benchmark_inference(const Model<float>& model, const Mesh& mesh, const RffBaseline<float>& baseline,
                                    const BenchmarkOptions& options) {
  check_topology(model, mesh);
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<uint32_t> pick_face(0, static_cast<uint32_t>(mesh.num_faces() - 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<SurfaceSample> samples(options.batch);
  Matrix<float> points(3, static_cast<Eigen::Index>(options.batch));
  for (size_t i = 0; i < options.batch; ++i) {
    double a = unit(rng), b = unit(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    samples[i] = {pick_face(rng), {1.0 - a - b, a, b}};
    points.col(static_cast<Eigen::Index>(i)) = point_from_barycentric(mesh, samples[i]).cast<float>();
  }

  SingleThreadScope single_thread;
  BenchmarkReport report;
  report.batch = options.batch;
  report.warmup = options.warmup;
  report.ours_params = model.parameter_count();
  report.baseline_params = baseline.parameter_count();
  report.ours = time_repeated(
      [&] {
        const EncodedBatch<float> enc = encode(model.features, std::span<const SurfaceSample>(samples));
        const Matrix<float> y = model.mlp.forward(enc.features);
        g_sink = g_sink + y(0, 0);
      },
      options.warmup, options.reps);
  report.baseline = time_repeated(
      [&] {
        const Matrix<float> y = baseline.forward(points);
        g_sink = g_sink + y(0, 0);
      },
      options.warmup, options.reps);
  report.speedup = report.baseline.mean_ms / report.ours.mean_ms;
  return report;
}

std::string format_benchmark(const BenchmarkReport& r) {
  char buf[512];
  std::string out;
  std::snprintf(buf, sizeof buf, "batch %zu, warmup %d, reps %d, f32, 1 thread\n", r.batch, r.warmup, r.ours.reps);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s  %12s  %12s  %10s\n", "model", "median[ms]", "mean[ms]", "params");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s  %12.3f  %12.3f  %10zu\n", "meshfeat", r.ours.median_ms, r.ours.mean_ms,
                r.ours_params);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s  %12.3f  %12.3f  %10zu\n", "rff-6x128", r.baseline.median_ms,
                r.baseline.mean_ms, r.baseline_params);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-12s  %12.2fx\n", "speedup", r.speedup);
  out += buf;
  return out;
}

}  // namespace meshfeat
