#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "meshfeat/brdf.hpp"
#include "meshfeat/bvh.hpp"
#include "meshfeat/camera.hpp"
#include "meshfeat/config.hpp"
#include "meshfeat/encoding.hpp"
#include "meshfeat/laplacian.hpp"
#include "meshfeat/metrics.hpp"
#include "meshfeat/nn.hpp"
#include "meshfeat/render.hpp"

namespace meshfeat {

/// Feature hierarchy plus decoder.
template <class T>
struct Model {
  TrainConfig config;
  std::shared_ptr<const Hierarchy> hierarchy;
  FeatureSet<T> features;
  Mlp<T> mlp;

  /// Decoder parameters plus sum_i |V_i| * d.
  size_t parameter_count() const { return mlp.parameter_count() + features.parameter_count(); }

  template <class U>
  Model<U> cast() const;
};

/// Features ~ N(0, 5e-4^2) and uniform decoder init, both seeded from config.seed.
template <class T>
Model<T> make_model(const TrainConfig& config, std::shared_ptr<const Hierarchy> hierarchy);

/// Decoder output (output_dim x N): colours for texture, Disney parameters for BRDF.
template <class T>
Matrix<T> predict(const Model<T>& model, std::span<const SurfaceSample> samples);

/// One record per ray-hit training pixel.
struct Dataset {
  Task task = Task::Texture;
  std::vector<SurfaceSample> samples;
  std::vector<Rgb<float>> targets;
  std::vector<uint32_t> view_index;
  std::vector<uint32_t> pixel;
  // Directional-shading inputs, filled for the BRDF task only.
  std::vector<Vec3> normals;
  std::vector<Vec3> to_view;
  std::vector<Vec3> to_light;
  std::vector<float> intensity;
  std::vector<uint8_t> shadowed;

  size_t size() const { return samples.size(); }
};

/// Traces every pixel of every view and pairs hits with the view's target image.
/// Views without hits are skipped with a warning on `log`.
Dataset prepare_samples(const Bvh& bvh, std::span<const View> views, Task task, bool smooth_normals = false,
                        std::ostream* log = nullptr);

template <class T>
struct TrainState {
  Model<T> model;
  AdamState<T> adam;
  uint64_t epoch = 0;  // completed epochs
};

/// Fresh model with the two optimizer groups: "mlp" (lr_theta, L2) and "features" (lr_feat).
template <class T>
TrainState<T> start_training(const TrainConfig& config, std::shared_ptr<const Hierarchy> hierarchy);

template <class T>
struct Gradients {
  std::vector<RowMatrix<T>> features;
  MlpGradients<T> mlp;
};

template <class T>
struct LossTerms {
  T data = 0;   // mean L1 over batch and channels (gamma-mapped radiance for BRDF)
  T reg = 0;    // sum |L_hat Phi| over the whole mesh, unscaled
  T total = 0;  // data + lambda_reg * reg
};

/// Loss of one batch and, if `grads` is given, its gradient (overwritten).
template <class T>
LossTerms<T> batch_loss(const Model<T>& model, const SparseRowMatrix<T>& lhat, const Dataset& data,
                        std::span<const uint32_t> indices, Gradients<T>* grads);

struct EpochLog {
  uint64_t epoch = 0;
  double data_loss = 0.0;
  double reg_loss = 0.0;
  double lr = 0.0;
  double wall_time = 0.0;
};

struct TrainOptions {
  std::function<void(const EpochLog&)> on_epoch;
  /// Stop after this many batches in total (0 = run all epochs). For tests.
  size_t max_batches = 0;
  /// If set, receives the total loss of every batch.
  std::vector<double>* batch_losses = nullptr;
};

/// Seeded per-epoch permutation of [0, n).
std::vector<uint32_t> epoch_permutation(size_t n, uint64_t seed, uint64_t epoch);

/// Runs epochs state.epoch .. config.epochs. Throws NumericalError on a non-finite loss
/// or gradient, naming the epoch, batch and largest gradient magnitude.
template <class T>
std::vector<EpochLog> train(TrainState<T>& state, const Dataset& data, const SparseLaplacian& laplacian,
                            const TrainOptions& options = {});

void write_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path);

/// Renders the model from `view` on `mesh` (which must share the hierarchy's topology).
/// Texture: predicted colours. BRDF: linear radiance under the view's light.
Image render_prediction(const Model<float>& model, const Bvh& bvh, const View& view, Mask* mask = nullptr);

struct EvalResult {
  std::vector<MetricReport> views;
  MetricReport total;
};

/// Masked PSNR/DSSIM per view; BRDF images are compared after gamma mapping.
/// If `image_dir` is non-empty, predictions are written there.
EvalResult evaluate(const Model<float>& model, const Bvh& bvh, std::span<const View> views,
                    const std::filesystem::path& image_dir = {});

/// Gamma-mapped copy (clamped to [0,1] first).
Image gamma_image(const Image& linear);

void check_topology(const Model<float>& model, const Mesh& mesh);

/// Container "MFC1": u32 version, then sections (4-byte tag, u64 length, payload).
template <class T>
void save_checkpoint(const TrainState<T>& state, const std::filesystem::path& path);
template <class T>
TrainState<T> load_checkpoint(const std::filesystem::path& path);

struct TimingStats {
  double median_ms = 0.0;
  double mean_ms = 0.0;
  int reps = 0;
};

TimingStats time_repeated(const std::function<void()>& fn, int warmup, int reps);

struct BenchmarkOptions {
  size_t batch = size_t(1) << 15;
  int warmup = 10;
  int reps = 300;
  uint64_t seed = 0;
};

struct BenchmarkReport {
  TimingStats ours;
  TimingStats baseline;
  double speedup = 0.0;  // baseline mean / ours mean
  size_t batch = 0;
  int warmup = 0;
  size_t ours_params = 0;
  size_t baseline_params = 0;
};

/// Single-threaded f32 forward passes on the same random surface samples: features
/// (encode + decoder) versus random Fourier features of the positions + 6x128 MLP.
BenchmarkReport benchmark_inference(const Model<float>& model, const Mesh& mesh, const RffBaseline<float>& baseline,
                                    const BenchmarkOptions& options = {});

std::string format_benchmark(const BenchmarkReport& r);

}  // namespace meshfeat
