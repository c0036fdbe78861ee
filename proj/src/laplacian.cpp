#include "meshfeat/laplacian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "meshfeat/errors.hpp"

namespace meshfeat {

namespace {

double cotangent(const Vec3& apex, const Vec3& p, const Vec3& q) {
  const Vec3 u = p - apex, v = q - apex;
  const double cross = u.cross(v).norm();
  if (!(cross > 0.0)) throw DataError("degenerate triangle in Laplacian assembly");
  return u.dot(v) / cross;
}

}  // namespace

SparseLaplacian build_laplacian(const Mesh& mesh) {
  const int n = static_cast<int>(mesh.num_vertices());
  // Accumulate half-cotangents per undirected edge, then clamp the summed weight.
  std::vector<Eigen::Triplet<double>> half;
  half.reserve(mesh.num_faces() * 3);
  for (const Face& f : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const uint32_t apex = f[k], i = f[(k + 1) % 3], j = f[(k + 2) % 3];
      const double c = 0.5 * cotangent(mesh.vertices[apex], mesh.vertices[i], mesh.vertices[j]);
      half.emplace_back(std::min(i, j), std::max(i, j), c);
    }
  }
  SparseRowMatrix<double> w(n, n);
  w.setFromTriplets(half.begin(), half.end());

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(w.nonZeros() * 2 + n);
  std::vector<double> diag(n, 0.0);
  for (int r = 0; r < w.outerSize(); ++r) {
    for (SparseRowMatrix<double>::InnerIterator it(w, r); it; ++it) {
      const double weight = std::max(it.value(), kMinCotangentWeight);
      entries.emplace_back(it.row(), it.col(), -weight);
      entries.emplace_back(it.col(), it.row(), -weight);
      diag[it.row()] += weight;
      diag[it.col()] += weight;
    }
  }
  for (int i = 0; i < n; ++i) entries.emplace_back(i, i, diag[i]);

  SparseLaplacian lap;
  lap.matrix.resize(n, n);
  lap.matrix.setFromTriplets(entries.begin(), entries.end());
  lap.matrix.makeCompressed();
  PowerIterationOptions opts;
  opts.max_iterations = kLaplacianPowerIterations;
  lap.norm = spectral_norm(lap.matrix, opts);
  return lap;
}

double spectral_norm(const SparseRowMatrix<double>& m, const PowerIterationOptions& opts) {
  const Eigen::Index n = m.rows();
  if (n == 0 || m.cols() != n) throw NumericalError("spectral_norm needs a square, nonempty matrix");
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  x(0) += 1e-3;
  x.normalize();
  // Rayleigh-quotient estimates converge linearly; stop once the extrapolated remaining
  // error delta / (1 - rho) is within tolerance, rho being the observed contraction.
  double estimate = 0.0, delta_prev = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    Eigen::VectorXd y = m * x;
    const double norm = y.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw NumericalError("power iteration collapsed to zero at iteration " + std::to_string(it));
    }
    const double next = std::abs(x.dot(y));
    const double delta = std::abs(next - estimate);
    if (it > 2 && delta <= delta_prev) {
      const double rho = delta_prev > 0.0 ? std::min(delta / delta_prev, 1.0 - 1e-6) : 0.0;
      if (delta / (1.0 - rho) <= opts.rel_tol * next) return next;
    }
    x = y / norm;
    estimate = next;
    delta_prev = delta;
  }
  throw NumericalError("power iteration did not converge after " +
                       std::to_string(opts.max_iterations) + " iterations");
}

template <class T>
T reg_loss_and_grad(const SparseRowMatrix<T>& lhat, const RowMatrix<T>& phi, RowMatrix<T>* grad) {
  if (phi.rows() != lhat.cols()) throw DataError("feature rows do not match Laplacian size");
  const RowMatrix<T> r = lhat * phi;
  if (grad != nullptr) {
    // Rounding-level entries get sign 0.
    T row_abs = T(0);
    for (int i = 0; i < lhat.outerSize(); ++i) {
      T sum = T(0);
      for (typename SparseRowMatrix<T>::InnerIterator it(lhat, i); it; ++it) sum += std::abs(it.value());
      row_abs = std::max(row_abs, sum);
    }
    const Eigen::Matrix<T, 1, Eigen::Dynamic> tau =
        T(16) * std::numeric_limits<T>::epsilon() * row_abs * phi.cwiseAbs().colwise().maxCoeff();
    RowMatrix<T> s(r.rows(), r.cols());
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
      for (Eigen::Index j = 0; j < r.cols(); ++j) {
        const T v = r(i, j);
        s(i, j) = std::abs(v) <= tau(j) ? T(0) : T((v > T(0)) - (v < T(0)));
      }
    }
    // L-hat is symmetric, so L-hat^T sign(r) = L-hat sign(r).
    *grad = lhat * s;
  }
  return r.cwiseAbs().sum();
}

template float reg_loss_and_grad<float>(const SparseRowMatrix<float>&, const RowMatrix<float>&,
                                        RowMatrix<float>*);
template double reg_loss_and_grad<double>(const SparseRowMatrix<double>&, const RowMatrix<double>&,
                                          RowMatrix<double>*);

}  // namespace meshfeat
