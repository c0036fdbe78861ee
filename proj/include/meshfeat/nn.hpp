#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace meshfeat {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class Activation { Relu, Sigmoid, Identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

template <class T>
struct MlpGradients {
  std::vector<Matrix<T>> weights;
  std::vector<Vector<T>> biases;
};

/// Fully connected network on column batches: X is d_in x B, Y is d_out x B.
/// Hidden layers share one activation; the output layer has its own.
template <class T>
class Mlp {
 public:
  struct Cache {
    const Mlp* owner = nullptr;
    uint64_t version = 0;
    std::vector<Matrix<T>> inputs;       // input to each layer
    std::vector<Matrix<T>> activations;  // output of each layer (post-activation)
  };

  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation hidden, Activation output);

  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  void init_uniform(uint64_t seed);

  const std::vector<int>& sizes() const { return sizes_; }
  size_t num_layers() const { return weights_.size(); }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  size_t parameter_count() const;

  const Matrix<T>& weight(size_t layer) const { return weights_[layer]; }
  const Vector<T>& bias(size_t layer) const { return biases_[layer]; }
  Matrix<T>& mutable_weight(size_t layer);
  Vector<T>& mutable_bias(size_t layer);

  /// Spans over every parameter tensor (W0, b0, W1, b1, ...). Invalidates caches.
  std::vector<std::span<T>> parameters();
  static std::vector<std::span<const T>> gradient_spans(const MlpGradients<T>& g);
  MlpGradients<T> zero_gradients() const;

  Matrix<T> forward(const Matrix<T>& x, Cache* cache = nullptr) const;
  /// Accumulates parameter gradients into `grads` and returns dL/dX.
  Matrix<T> backward(const Cache& cache, const Matrix<T>& dl_dy, MlpGradients<T>& grads) const;

  template <class U>
  Mlp<U> cast() const;

 private:
  template <class U>
  friend class Mlp;

  std::vector<int> sizes_;
  Activation hidden_ = Activation::Relu;
  Activation output_ = Activation::Sigmoid;
  std::vector<Matrix<T>> weights_;
  std::vector<Vector<T>> biases_;
  uint64_t version_ = 0;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments for one parameter group; the L2 term adds weight_decay * param to the
/// gradient before the moment update.
template <class T>
struct AdamGroup {
  std::string name;
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

template <class T>
struct AdamState {
  AdamHyper hyper;
  int64_t step = 0;
  std::vector<AdamGroup<T>> groups;

  /// Adds a group with zeroed moments matching the given tensor sizes.
  void add_group(std::string name, double lr, double weight_decay, const std::vector<size_t>& sizes);
};

/// One bias-corrected Adam update for every group. params[g][k] and grads[g][k] are the
/// k-th tensor of group g.
template <class T>
void adam_step(AdamState<T>& state, const std::vector<std::vector<std::span<T>>>& params,
               const std::vector<std::vector<std::span<const T>>>& grads);

/// Random Fourier features: [cos(2 pi B x); sin(2 pi B x)] with a frozen Gaussian B (k x 3).
template <class T>
class RffEncoder {
 public:
  RffEncoder() = default;
  RffEncoder(int frequencies, double sigma, uint64_t seed);

  int frequencies() const { return static_cast<int>(b_.rows()); }
  int output_dim() const { return 2 * frequencies(); }
  double sigma() const { return sigma_; }
  const Matrix<T>& matrix() const { return b_; }

  /// points: 3 x N. Returns 2k x N.
  Matrix<T> encode(const Matrix<T>& points) const;

  void save(std::ostream& out) const;
  static RffEncoder load(std::istream& in);

 private:
  Matrix<T> b_;
  double sigma_ = 0.0;
};

inline constexpr int kRffFrequencies = 128;
inline constexpr double kRffSigma = 12.0;

/// Frequency-encoding comparison model: RFF input, 6 hidden layers of width 128.
template <class T>
struct RffBaseline {
  RffEncoder<T> encoder;
  Mlp<T> mlp;

  static RffBaseline make(int out_dim, uint64_t seed, int frequencies = kRffFrequencies,
                          double sigma = kRffSigma);
  Matrix<T> forward(const Matrix<T>& points) const { return mlp.forward(encoder.encode(points)); }
  /// MLP parameters plus the (non-learned) frequency matrix.
  size_t parameter_count() const {
    return mlp.parameter_count() + static_cast<size_t>(encoder.matrix().size());
  }
};

}  // namespace meshfeat
