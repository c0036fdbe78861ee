#include "meshfeat/encoding.hpp"

#include <random>

#include "meshfeat/errors.hpp"

namespace meshfeat {

template <class T>
size_t FeatureSet<T>::parameter_count() const {
  size_t n = 0;
  for (const auto& z : levels) n += static_cast<size_t>(z.size());
  return n;
}

template <class T>
FeatureSet<T> make_features(std::shared_ptr<const Hierarchy> hierarchy, int dim) {
  if (dim < 1) throw DataError("feature dimension must be positive");
  if (!hierarchy || hierarchy->num_levels() == 0) throw DataError("empty hierarchy");
  FeatureSet<T> fs;
  fs.dim = dim;
  const size_t levels = hierarchy->num_levels();
  const size_t nv = hierarchy->num_original_vertices();
  for (size_t i = 0; i < levels; ++i) {
    fs.levels.push_back(RowMatrix<T>::Zero(hierarchy->meshes[i].num_vertices(), dim));
  }
  fs.active.assign(levels, 1);
  fs.gather.resize(nv * levels);
  for (size_t v = 0; v < nv; ++v) {
    for (size_t i = 0; i < levels; ++i) fs.gather[v * levels + i] = hierarchy->maps[i][v];
  }
  fs.hierarchy = std::move(hierarchy);
  return fs;
}

template <class T>
FeatureSet<T> init_features(std::shared_ptr<const Hierarchy> hierarchy, int dim, uint64_t seed,
                            double sigma) {
  FeatureSet<T> fs = make_features<T>(std::move(hierarchy), dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (auto& z : fs.levels) {
    for (Eigen::Index k = 0; k < z.size(); ++k) z.data()[k] = static_cast<T>(normal(rng));
  }
  return fs;
}

template <class T>
Eigen::Matrix<T, Eigen::Dynamic, 1> accumulate_vertex_features(const FeatureSet<T>& fs, uint32_t v) {
  if (v >= fs.num_vertices()) throw DataError("vertex index out of range");
  Eigen::Matrix<T, Eigen::Dynamic, 1> phi = Eigen::Matrix<T, Eigen::Dynamic, 1>::Zero(fs.dim);
  const size_t levels = fs.num_levels();
  for (size_t i = 0; i < levels; ++i) {
    if (fs.active[i]) phi += fs.levels[i].row(fs.gather[v * levels + i]).transpose();
  }
  return phi;
}

template <class T>
RowMatrix<T> accumulate_all(const FeatureSet<T>& fs) {
  const size_t nv = fs.num_vertices(), levels = fs.num_levels();
  const int d = fs.dim;
  RowMatrix<T> phi = RowMatrix<T>::Zero(nv, d);
  for (size_t v = 0; v < nv; ++v) {
    T* out = phi.data() + v * d;
    for (size_t i = 0; i < levels; ++i) {
      if (!fs.active[i]) continue;
      const T* row = fs.levels[i].data() + size_t(fs.gather[v * levels + i]) * d;
      for (int c = 0; c < d; ++c) out[c] += row[c];
    }
  }
  return phi;
}

template <class T>
EncodedBatch<T> encode(const FeatureSet<T>& fs, std::span<const SurfaceSample> samples) {
  const auto& faces = fs.hierarchy->meshes[0].faces;
  const size_t levels = fs.num_levels();
  const int d = fs.dim;
  EncodedBatch<T> batch;
  batch.levels = levels;
  batch.features = ColMatrix<T>::Zero(d, static_cast<Eigen::Index>(samples.size()));
  batch.faces.resize(samples.size());
  batch.bary.resize(samples.size());
  batch.touched.resize(samples.size() * 3 * levels);
  for (size_t b = 0; b < samples.size(); ++b) {
    const SurfaceSample& s = samples[b];
    if (s.face >= faces.size()) throw DataError("sample face index out of range");
    batch.faces[b] = s.face;
    T* out = batch.features.data() + b * d;
    for (int corner = 0; corner < 3; ++corner) {
      const uint32_t v = faces[s.face][corner];
      const T lambda = static_cast<T>(s.bary[corner]);
      batch.bary[b][corner] = lambda;
      uint32_t* rows = batch.touched.data() + (b * 3 + corner) * levels;
      for (size_t i = 0; i < levels; ++i) {
        rows[i] = fs.gather[v * levels + i];
        if (!fs.active[i]) continue;
        const T* z = fs.levels[i].data() + size_t(rows[i]) * d;
        for (int c = 0; c < d; ++c) out[c] += lambda * z[c];
      }
    }
  }
  return batch;
}

template <class T>
std::vector<RowMatrix<T>> zero_like(const FeatureSet<T>& fs) {
  std::vector<RowMatrix<T>> g;
  g.reserve(fs.num_levels());
  for (const auto& z : fs.levels) g.push_back(RowMatrix<T>::Zero(z.rows(), z.cols()));
  return g;
}

template <class T>
void scatter_gradients_into(const FeatureSet<T>& fs, const EncodedBatch<T>& batch,
                            const ColMatrix<T>& dl_dphi, std::vector<RowMatrix<T>>& grads) {
  const int d = fs.dim;
  const size_t levels = fs.num_levels();
  if (dl_dphi.rows() != d || static_cast<size_t>(dl_dphi.cols()) != batch.size()) {
    throw DataError("gradient shape does not match encoded batch");
  }
  if (grads.size() != levels) throw DataError("gradient buffers do not match feature levels");
  for (size_t b = 0; b < batch.size(); ++b) {
    const T* g = dl_dphi.data() + b * d;
    for (int corner = 0; corner < 3; ++corner) {
      const T lambda = batch.bary[b][corner];
      const uint32_t* rows = batch.touched.data() + (b * 3 + corner) * levels;
      for (size_t i = 0; i < levels; ++i) {
        if (!fs.active[i]) continue;
        T* out = grads[i].data() + size_t(rows[i]) * d;
        for (int c = 0; c < d; ++c) out[c] += lambda * g[c];
      }
    }
  }
}

template <class T>
std::vector<RowMatrix<T>> scatter_gradients(const FeatureSet<T>& fs, const EncodedBatch<T>& batch,
                                            const ColMatrix<T>& dl_dphi) {
  auto grads = zero_like(fs);
  scatter_gradients_into(fs, batch, dl_dphi, grads);
  return grads;
}

template <class T>
void scatter_vertex_gradients_into(const FeatureSet<T>& fs, const RowMatrix<T>& dl_dPhi,
                                   std::vector<RowMatrix<T>>& grads) {
  const size_t nv = fs.num_vertices(), levels = fs.num_levels();
  const int d = fs.dim;
  if (static_cast<size_t>(dl_dPhi.rows()) != nv || dl_dPhi.cols() != d) {
    throw DataError("vertex gradient shape mismatch");
  }
  for (size_t v = 0; v < nv; ++v) {
    const T* g = dl_dPhi.data() + v * d;
    for (size_t i = 0; i < levels; ++i) {
      if (!fs.active[i]) continue;
      T* out = grads[i].data() + size_t(fs.gather[v * levels + i]) * d;
      for (int c = 0; c < d; ++c) out[c] += g[c];
    }
  }
}

#define MESHFEAT_INSTANTIATE(T)                                                                    \
  template struct FeatureSet<T>;                                                                   \
  template FeatureSet<T> make_features<T>(std::shared_ptr<const Hierarchy>, int);                 \
  template FeatureSet<T> init_features<T>(std::shared_ptr<const Hierarchy>, int, uint64_t, double); \
  template Eigen::Matrix<T, Eigen::Dynamic, 1> accumulate_vertex_features<T>(const FeatureSet<T>&, \
                                                                             uint32_t);            \
  template RowMatrix<T> accumulate_all<T>(const FeatureSet<T>&);                                   \
  template EncodedBatch<T> encode<T>(const FeatureSet<T>&, std::span<const SurfaceSample>);        \
  template std::vector<RowMatrix<T>> scatter_gradients<T>(const FeatureSet<T>&,                    \
                                                          const EncodedBatch<T>&,                  \
                                                          const ColMatrix<T>&);                    \
  template void scatter_gradients_into<T>(const FeatureSet<T>&, const EncodedBatch<T>&,            \
                                          const ColMatrix<T>&, std::vector<RowMatrix<T>>&);        \
  template void scatter_vertex_gradients_into<T>(const FeatureSet<T>&, const RowMatrix<T>&,        \
                                                 std::vector<RowMatrix<T>>&);                      \
  template std::vector<RowMatrix<T>> zero_like<T>(const FeatureSet<T>&);

MESHFEAT_INSTANTIATE(float)
MESHFEAT_INSTANTIATE(double)

#undef MESHFEAT_INSTANTIATE

}  // namespace meshfeat
