#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "meshfeat/laplacian.hpp"
#include "meshfeat/mesh.hpp"
#include "meshfeat/simplify.hpp"

namespace meshfeat {

template <class T>
using ColMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kFeatureInitSigma = 5e-4;

/// Learnable per-vertex features Z^(i), one |V_i| x d matrix per hierarchy level.
template <class T>
struct FeatureSet {
  std::shared_ptr<const Hierarchy> hierarchy;
  int dim = 0;
  std::vector<RowMatrix<T>> levels;
  /// Levels excluded from accumulation (progressive-unlock rendering). All on by default.
  std::vector<uint8_t> active;
  /// gather[v * L + i] = m^(i)(v); flattened copy of the hierarchy maps.
  std::vector<uint32_t> gather;

  size_t num_levels() const { return levels.size(); }
  size_t num_vertices() const { return hierarchy->num_original_vertices(); }
  size_t parameter_count() const;
};

/// Zero-initialized feature set bound to `hierarchy`.
template <class T>
FeatureSet<T> make_features(std::shared_ptr<const Hierarchy> hierarchy, int dim);

/// Entries drawn i.i.d. from N(0, sigma^2) with a seeded mt19937_64.
template <class T>
FeatureSet<T> init_features(std::shared_ptr<const Hierarchy> hierarchy, int dim, uint64_t seed,
                            double sigma = kFeatureInitSigma);

/// phi_v = sum_i Z^(i)[m^(i)(v)] over active levels.
template <class T>
Eigen::Matrix<T, Eigen::Dynamic, 1> accumulate_vertex_features(const FeatureSet<T>& fs, uint32_t v);

/// Phi, the |V| x d matrix of accumulated features for every original vertex.
template <class T>
RowMatrix<T> accumulate_all(const FeatureSet<T>& fs);

template <class T>
struct EncodedBatch {
  ColMatrix<T> features;  // d x B, one column per sample
  std::vector<uint32_t> faces;
  std::vector<std::array<T, 3>> bary;
  /// touched[(b * 3 + corner) * L + level] = feature row used at that level.
  std::vector<uint32_t> touched;
  size_t levels = 0;

  size_t size() const { return faces.size(); }
};

/// Barycentric interpolation of accumulated corner features. Reads only the mesh
/// topology and the hierarchy maps, never vertex positions.
template <class T>
EncodedBatch<T> encode(const FeatureSet<T>& fs, std::span<const SurfaceSample> samples);

/// Adjoint of encode(): per-level gradient matrices shaped like fs.levels.
template <class T>
std::vector<RowMatrix<T>> scatter_gradients(const FeatureSet<T>& fs, const EncodedBatch<T>& batch,
                                            const ColMatrix<T>& dl_dphi);

/// Accumulating form of scatter_gradients(); `grads` must already be shaped.
template <class T>
void scatter_gradients_into(const FeatureSet<T>& fs, const EncodedBatch<T>& batch,
                            const ColMatrix<T>& dl_dphi, std::vector<RowMatrix<T>>& grads);

/// Adjoint of accumulate_all(): G_i[m^(i)(v)] += dPhi[v].
template <class T>
void scatter_vertex_gradients_into(const FeatureSet<T>& fs, const RowMatrix<T>& dl_dPhi,
                                   std::vector<RowMatrix<T>>& grads);

template <class T>
std::vector<RowMatrix<T>> zero_like(const FeatureSet<T>& fs);

}  // namespace meshfeat
