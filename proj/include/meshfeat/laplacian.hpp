#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "meshfeat/mesh.hpp"

namespace meshfeat {

template <class T>
using SparseRowMatrix = Eigen::SparseMatrix<T, Eigen::RowMajor, int>;

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Cotangent Laplacian (positive semidefinite convention: off-diagonals -w_ij,
/// diagonal sum_j w_ij) together with its spectral norm.
struct SparseLaplacian {
  SparseRowMatrix<double> matrix;
  double norm = 0.0;

  /// L / ||L||_2 cast to the requested scalar type.
  template <class T>
  SparseRowMatrix<T> normalized() const {
    return (matrix / norm).template cast<T>();
  }
};

inline constexpr double kMinCotangentWeight = 1e-6;

SparseLaplacian build_laplacian(const Mesh& mesh);

struct PowerIterationOptions {
  double rel_tol = 1e-6;
  int max_iterations = 10000;
};

/// Iteration cap used by build_laplacian.
inline constexpr int kLaplacianPowerIterations = 200000;

/// Largest singular value of a symmetric matrix by power iteration. Start vector is
/// the normalized all-ones vector with +1e-3 added to entry 0. Throws NumericalError
/// if the estimate has not settled after max_iterations. The estimate is the Rayleigh
/// quotient; iteration stops when its extrapolated remaining error is below rel_tol.
double spectral_norm(const SparseRowMatrix<double>& m, const PowerIterationOptions& opts = {});

/// Sum_ij |(L Phi)_ij| and its subgradient L^T sign(L Phi) with sign(0) = 0; entries
/// within rounding error of zero count as zero.
template <class T>
T reg_loss_and_grad(const SparseRowMatrix<T>& lhat, const RowMatrix<T>& phi, RowMatrix<T>* grad);

}  // namespace meshfeat
