#include "meshfeat/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>

#include "meshfeat/errors.hpp"

namespace meshfeat {

namespace {

constexpr uint64_t kMlpSeedOffset = 0x9E3779B97F4A7C15ull;
constexpr size_t kPredictChunk = size_t(1) << 16;

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

template <class T>
T sign(T x) {
  return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0));
}

template <class T>
std::vector<std::span<T>> feature_spans(std::vector<RowMatrix<T>>& levels) {
  std::vector<std::span<T>> out;
  for (auto& z : levels) out.emplace_back(z.data(), z.size());
  return out;
}

template <class T>
std::vector<std::span<const T>> feature_spans(const std::vector<RowMatrix<T>>& levels) {
  std::vector<std::span<const T>> out;
  for (const auto& z : levels) out.emplace_back(z.data(), z.size());
  return out;
}

template <class T>
double max_abs(const Gradients<T>& g) {
  double m = 0.0;
  auto visit = [&](const T* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = std::abs(double(p[i]));
      if (!(a <= m)) m = a;  // NaN propagates
    }
  };
  for (const auto& z : g.features) visit(z.data(), z.size());
  for (const auto& w : g.mlp.weights) visit(w.data(), w.size());
  for (const auto& b : g.mlp.biases) visit(b.data(), b.size());
  return m;
}

}  // namespace

template <class T>
template <class U>
Model<U> Model<T>::cast() const {
  Model<U> out;
  out.config = config;
  out.hierarchy = hierarchy;
  out.features.hierarchy = features.hierarchy;
  out.features.dim = features.dim;
  out.features.active = features.active;
  out.features.gather = features.gather;
  for (const auto& z : features.levels) out.features.levels.push_back(z.template cast<U>());
  out.mlp = mlp.template cast<U>();
  return out;
}

template <class T>
Model<T> make_model(const TrainConfig& config, std::shared_ptr<const Hierarchy> hierarchy) {
  config.validate();
  Model<T> m;
  m.config = config;
  m.hierarchy = hierarchy;
  m.features = init_features<T>(hierarchy, config.feature_dim, config.seed);
  m.mlp = Mlp<T>(config.layer_sizes(), Activation::Relu, Activation::Sigmoid);
  m.mlp.init_uniform(splitmix64(config.seed ^ kMlpSeedOffset));
  return m;
}

template <class T>
Matrix<T> predict(const Model<T>& model, std::span<const SurfaceSample> samples) {
  Matrix<T> out(model.config.output_dim(), static_cast<Eigen::Index>(samples.size()));
  for (size_t start = 0; start < samples.size(); start += kPredictChunk) {
    const size_t n = std::min(kPredictChunk, samples.size() - start);
    const EncodedBatch<T> enc = encode(model.features, samples.subspan(start, n));
    out.middleCols(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = model.mlp.forward(enc.features);
  }
  return out;
}

Dataset prepare_samples(const Bvh& bvh, std::span<const View> views, Task task, bool smooth_normals,
                        std::ostream* log) {
  Dataset data;
  data.task = task;
  for (size_t vi = 0; vi < views.size(); ++vi) {
    const View& view = views[vi];
    if (task == Task::Brdf && !view.light_dir) throw DataError("view '" + view.name + "' has no light_dir");
    const ViewHits hits = trace_view(bvh, view);
    if (hits.size() == 0) {
      if (log) *log << "warning: view '" << view.name << "' does not see the mesh; skipped\n";
      continue;
    }
    const Image target = read_image(view.image);
    if (target.width != view.width || target.height != view.height) {
      throw DataError("image size of " + view.image.string() + " does not match its view");
    }
    ShadingInputs shading;
    if (task == Task::Brdf) shading = shading_inputs(bvh, view, hits, smooth_normals);
    for (size_t k = 0; k < hits.size(); ++k) {
      const uint32_t p = hits.pixels[k];
      data.samples.push_back(hits.samples[k]);
      data.targets.push_back({target.data[size_t(p) * 3], target.data[size_t(p) * 3 + 1],
                              target.data[size_t(p) * 3 + 2]});
      data.view_index.push_back(static_cast<uint32_t>(vi));
      data.pixel.push_back(p);
      if (task == Task::Brdf) {
        data.normals.push_back(shading.normals[k]);
        data.to_view.push_back(shading.to_view[k]);
        data.to_light.push_back(*view.light_dir);
        data.intensity.push_back(static_cast<float>(view.light_intensity));
        data.shadowed.push_back(shading.shadowed[k]);
      }
    }
  }
  return data;
}

template <class T>
TrainState<T> start_training(const TrainConfig& config, std::shared_ptr<const Hierarchy> hierarchy) {
  TrainState<T> state;
  state.model = make_model<T>(config, std::move(hierarchy));
  std::vector<size_t> mlp_sizes, feature_sizes;
  for (const auto& p : state.model.mlp.parameters()) mlp_sizes.push_back(p.size());
  for (const auto& z : state.model.features.levels) feature_sizes.push_back(static_cast<size_t>(z.size()));
  state.adam.add_group("mlp", config.lr_mlp, config.l2_mlp, mlp_sizes);
  state.adam.add_group("features", config.lr_features, 0.0, feature_sizes);
  return state;
}

template <class T>
LossTerms<T> batch_loss(const Model<T>& model, const SparseRowMatrix<T>& lhat, const Dataset& data,
                        std::span<const uint32_t> indices, Gradients<T>* grads) {
  const size_t batch = indices.size();
  if (batch == 0) throw DataError("empty batch");
  std::vector<SurfaceSample> samples(batch);
  for (size_t b = 0; b < batch; ++b) samples[b] = data.samples[indices[b]];
  const EncodedBatch<T> enc = encode(model.features, std::span<const SurfaceSample>(samples));
  typename Mlp<T>::Cache cache;
  const Matrix<T> y = model.mlp.forward(enc.features, grads ? &cache : nullptr);

  const double scale = 1.0 / (3.0 * double(batch));
  std::vector<double> per_sample(batch, 0.0);
  Matrix<T> dy;
  if (grads) dy = Matrix<T>::Zero(y.rows(), y.cols());

  if (data.task == Task::Texture) {
    for (size_t b = 0; b < batch; ++b) {
      const auto& target = data.targets[indices[b]];
      for (int c = 0; c < 3; ++c) {
        const T diff = y(c, b) - T(target[c]);
        per_sample[b] += std::abs(double(diff));
        if (grads) dy(c, b) = T(scale) * sign(diff);
      }
    }
  } else {
    using D = Dual<kDisneyParamCount>;
#pragma omp parallel for schedule(static)
    for (long long bb = 0; bb < static_cast<long long>(batch); ++bb) {
      const size_t b = static_cast<size_t>(bb);
      const uint32_t i = indices[b];
      DisneyParams<D> p;
      for (int k = 0; k < kDisneyParamCount; ++k) p[k] = D::variable(double(y(k, b)), k);
      const Rgb<D> radiance = shade_directional(p, data.normals[i], data.to_view[i], data.to_light[i],
                                                double(data.intensity[i]), data.shadowed[i] != 0);
      for (int c = 0; c < 3; ++c) {
        const double diff = gamma_map(radiance[c].v) - gamma_map(double(data.targets[i][c]));
        per_sample[b] += std::abs(diff);
        if (grads) {
          const double coef = scale * sign(diff) * gamma_map_derivative(radiance[c].v);
          if (coef != 0.0) {
            for (int k = 0; k < kDisneyParamCount; ++k) dy(k, b) += T(coef * radiance[c].d[k]);
          }
        }
      }
    }
  }

  LossTerms<T> loss;
  double data_sum = 0.0;
  for (double v : per_sample) data_sum += v;
  loss.data = T(data_sum * scale);

  const RowMatrix<T> phi = accumulate_all(model.features);
  RowMatrix<T> reg_grad;
  const bool want_reg_grad = grads && model.config.lambda_reg > 0;
  loss.reg = reg_loss_and_grad(lhat, phi, want_reg_grad ? &reg_grad : nullptr);
  loss.total = loss.data + T(model.config.lambda_reg) * loss.reg;

  if (grads) {
    grads->features = zero_like(model.features);
    grads->mlp = model.mlp.zero_gradients();
    const Matrix<T> dx = model.mlp.backward(cache, dy, grads->mlp);
    scatter_gradients_into(model.features, enc, dx, grads->features);
    if (want_reg_grad) {
      reg_grad *= T(model.config.lambda_reg);
      scatter_vertex_gradients_into(model.features, reg_grad, grads->features);
    }
  }
  return loss;
}

std::vector<uint32_t> epoch_permutation(size_t n, uint64_t seed, uint64_t epoch) {
  std::vector<uint32_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = static_cast<uint32_t>(i);
  std::mt19937_64 rng(splitmix64(seed) ^ splitmix64(epoch + 0x632BE59BD9B4E019ull));
  for (size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  return perm;
}

template <class T>
std::vector<EpochLog> train(TrainState<T>& state, const Dataset& data, const SparseLaplacian& laplacian,
                            const TrainOptions& options) {
  Model<T>& model = state.model;
  const TrainConfig& config = model.config;
  if (data.size() == 0) throw DataError("training set is empty");
  if (data.task != config.task) throw DataError("dataset task does not match the config");
  if (laplacian.matrix.rows() != static_cast<Eigen::Index>(model.features.num_vertices())) {
    throw DataError("Laplacian size does not match the mesh");
  }
  const SparseRowMatrix<T> lhat = laplacian.normalized<T>();
  const size_t batch = static_cast<size_t>(config.batch_size);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<EpochLog> log;
  Gradients<T> grads;
  size_t batches_done = 0;

  for (uint64_t epoch = state.epoch; epoch < static_cast<uint64_t>(config.epochs); ++epoch) {
    const std::vector<uint32_t> perm = epoch_permutation(data.size(), config.seed, epoch);
    double data_sum = 0.0, reg_last = 0.0;
    size_t batch_index = 0;
    for (size_t start = 0; start < perm.size(); start += batch, ++batch_index) {
      const size_t n = std::min(batch, perm.size() - start);
      const std::span<const uint32_t> idx(perm.data() + start, n);
      LossTerms<T> loss;
      try {
        loss = batch_loss(model, lhat, data, idx, &grads);
      } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << e.what() << " at epoch " << epoch << ", batch " << batch_index;
        throw NumericalError(msg.str());
      }
      const double gmax = max_abs(grads);
      if (!std::isfinite(double(loss.total)) || !std::isfinite(gmax)) {
        std::ostringstream msg;
        msg << "non-finite loss or gradient at epoch " << epoch << ", batch " << batch_index
            << " (loss " << double(loss.total) << ", max |grad| " << gmax << ")";
        throw NumericalError(msg.str());
      }
      adam_step(state.adam, {model.mlp.parameters(), feature_spans(model.features.levels)},
                {Mlp<T>::gradient_spans(grads.mlp), feature_spans(std::as_const(grads.features))});
      data_sum += double(loss.data) * double(n);
      reg_last = double(loss.reg);
      if (options.batch_losses) options.batch_losses->push_back(double(loss.total));
      if (options.max_batches && ++batches_done >= options.max_batches) return log;
    }
    state.epoch = epoch + 1;
    EpochLog entry;
    entry.epoch = state.epoch;
    entry.data_loss = data_sum / double(data.size());
    entry.reg_loss = reg_last;
    entry.lr = config.lr_mlp;
    entry.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
  }
  return log;
}

void write_log_csv(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,data_loss,reg_loss,lr,wall_time\n";
  out << std::setprecision(9);
  for (const auto& e : log) {
    out << e.epoch << "," << e.data_loss << "," << e.reg_loss << "," << e.lr << "," << e.wall_time << "\n";
  }
}

void check_topology(const Model<float>& model, const Mesh& mesh) {
  const Mesh& ref = model.hierarchy->meshes.at(0);
  if (ref.num_vertices() != mesh.num_vertices() || ref.faces != mesh.faces) {
    throw DataError("mesh topology differs from the one the model was trained on");
  }
}

Image render_prediction(const Model<float>& model, const Bvh& bvh, const View& view, Mask* mask) {
  check_topology(model, bvh.mesh());
  const ViewHits hits = trace_view(bvh, view);
  const Matrix<float> y = predict(model, std::span<const SurfaceSample>(hits.samples));
  std::vector<Rgb<float>> colours(hits.size());
  if (model.config.task == Task::Texture) {
    for (size_t k = 0; k < hits.size(); ++k) colours[k] = {y(0, k), y(1, k), y(2, k)};
  } else {
    if (!view.light_dir) throw DataError("view '" + view.name + "' has no light_dir");
    const ShadingInputs shading = shading_inputs(bvh, view, hits, model.config.smooth_normals);
    for (size_t k = 0; k < hits.size(); ++k) {
      DisneyParams<double> p;
      for (int i = 0; i < kDisneyParamCount; ++i) p[i] = y(i, k);
      const Rgb<double> c = shade_directional(p, shading.normals[k], shading.to_view[k], *view.light_dir,
                                              view.light_intensity, shading.shadowed[k] != 0);
      colours[k] = {float(c[0]), float(c[1]), float(c[2])};
    }
  }
  if (mask) *mask = hits.mask();
  return assemble_image(hits, colours, {0.0f, 0.0f, 0.0f});
}

Image gamma_image(const Image& linear) {
  Image out = linear;
  for (float& v : out.data) v = static_cast<float>(gamma_map(v));
  return out;
}

EvalResult evaluate(const Model<float>& model, const Bvh& bvh, std::span<const View> views,
                    const std::filesystem::path& image_dir) {
  EvalResult result;
  if (!image_dir.empty()) std::filesystem::create_directories(image_dir);
  for (const View& view : views) {
    Mask mask;
    Image pred = render_prediction(model, bvh, view, &mask);
    Image target = read_image(view.image);
    if (target.width != view.width || target.height != view.height) {
      throw DataError("image size of " + view.image.string() + " does not match its view");
    }
    if (!image_dir.empty()) {
      if (model.config.task == Task::Texture) {
        write_png(pred, image_dir / (view.name + ".png"));
      } else {
        write_pfm(pred, image_dir / (view.name + ".pfm"));
        write_png(gamma_image(pred), image_dir / (view.name + ".png"));
      }
    }
    if (std::find(mask.begin(), mask.end(), 1) == mask.end()) continue;
    if (model.config.task == Task::Brdf) {
      pred = gamma_image(pred);
      target = gamma_image(target);
    }
    result.views.push_back(measure(view.name, pred, target, &mask));
  }
  result.total = aggregate(result.views);
  return result;
}

#define MESHFEAT_INSTANTIATE(T)                                                                        \
  template struct Model<T>;                                                                            \
  template Model<T> make_model<T>(const TrainConfig&, std::shared_ptr<const Hierarchy>);              \
  template Matrix<T> predict<T>(const Model<T>&, std::span<const SurfaceSample>);                     \
  template TrainState<T> start_training<T>(const TrainConfig&, std::shared_ptr<const Hierarchy>);     \
  template LossTerms<T> batch_loss<T>(const Model<T>&, const SparseRowMatrix<T>&, const Dataset&,     \
                                      std::span<const uint32_t>, Gradients<T>*);                      \
  template std::vector<EpochLog> train<T>(TrainState<T>&, const Dataset&, const SparseLaplacian&,     \
                                          const TrainOptions&);

MESHFEAT_INSTANTIATE(float)
MESHFEAT_INSTANTIATE(double)

#undef MESHFEAT_INSTANTIATE

template Model<double> Model<float>::cast<double>() const;
template Model<float> Model<double>::cast<float>() const;
template Model<float> Model<float>::cast<float>() const;
template Model<double> Model<double>::cast<double>() const;

}  // namespace meshfeat
