#include "meshfeat/nn.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "meshfeat/binary_io.hpp"
#include "meshfeat/errors.hpp"

namespace meshfeat {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "identity") return Activation::Identity;
  throw DataError("unknown activation '" + s + "'");
}

namespace {

template <class T>
void apply_activation(Matrix<T>& z, Activation a) {
  switch (a) {
    case Activation::Relu: z = z.cwiseMax(T(0)); break;
    case Activation::Sigmoid: z = (T(1) + (-z.array()).exp()).inverse().matrix(); break;
    case Activation::Identity: break;
  }
}

// dL/dz given dL/da and the post-activation values a.
template <class T>
Matrix<T> activation_backward(const Matrix<T>& dl_da, const Matrix<T>& a, Activation act) {
  switch (act) {
    case Activation::Relu:
      return (a.array() > T(0)).select(dl_da, T(0));
    case Activation::Sigmoid:
      return (dl_da.array() * a.array() * (T(1) - a.array())).matrix();
    case Activation::Identity:
      return dl_da;
  }
  return dl_da;
}

}  // namespace

template <class T>
Mlp<T>::Mlp(std::vector<int> sizes, Activation hidden, Activation output)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw DataError("MLP needs at least input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw DataError("MLP layer sizes must be positive");
  }
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weights_.push_back(Matrix<T>::Zero(sizes_[l + 1], sizes_[l]));
    biases_.push_back(Vector<T>::Zero(sizes_[l + 1]));
  }
}

template <class T>
void Mlp<T>::init_uniform(uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (size_t l = 0; l < weights_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index k = 0; k < weights_[l].size(); ++k) weights_[l].data()[k] = T(u(rng));
    for (Eigen::Index k = 0; k < biases_[l].size(); ++k) biases_[l].data()[k] = T(u(rng));
  }
  ++version_;
}

template <class T>
size_t Mlp<T>::parameter_count() const {
  size_t n = 0;
  for (size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

template <class T>
Matrix<T>& Mlp<T>::mutable_weight(size_t layer) {
  ++version_;
  return weights_[layer];
}

template <class T>
Vector<T>& Mlp<T>::mutable_bias(size_t layer) {
  ++version_;
  return biases_[layer];
}

template <class T>
std::vector<std::span<T>> Mlp<T>::parameters() {
  ++version_;
  std::vector<std::span<T>> out;
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.emplace_back(weights_[l].data(), weights_[l].size());
    out.emplace_back(biases_[l].data(), biases_[l].size());
  }
  return out;
}

template <class T>
std::vector<std::span<const T>> Mlp<T>::gradient_spans(const MlpGradients<T>& g) {
  std::vector<std::span<const T>> out;
  for (size_t l = 0; l < g.weights.size(); ++l) {
    out.emplace_back(g.weights[l].data(), g.weights[l].size());
    out.emplace_back(g.biases[l].data(), g.biases[l].size());
  }
  return out;
}

template <class T>
MlpGradients<T> Mlp<T>::zero_gradients() const {
  MlpGradients<T> g;
  for (size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Matrix<T>::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Vector<T>::Zero(biases_[l].size()));
  }
  return g;
}

template <class T>
Matrix<T> Mlp<T>::forward(const Matrix<T>& x, Cache* cache) const {
  if (weights_.empty()) throw DataError("MLP has no layers");
  if (x.rows() != sizes_.front()) {
    throw DataError("MLP input has " + std::to_string(x.rows()) + " rows, expected " +
                    std::to_string(sizes_.front()));
  }
  if (!x.allFinite()) throw NumericalError("non-finite MLP input");
  if (cache) {
    cache->owner = this;
    cache->version = version_;
    cache->inputs.clear();
    cache->activations.clear();
  }
  Matrix<T> a = x;
  for (size_t l = 0; l < weights_.size(); ++l) {
    Matrix<T> z(weights_[l].rows(), a.cols());
    z.noalias() = weights_[l] * a;
    z.colwise() += biases_[l];
    apply_activation(z, l + 1 == weights_.size() ? output_ : hidden_);
    if (cache) cache->inputs.push_back(std::move(a));
    a = std::move(z);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

template <class T>
Matrix<T> Mlp<T>::backward(const Cache& cache, const Matrix<T>& dl_dy, MlpGradients<T>& grads) const {
  if (cache.owner != this || cache.version != version_ ||
      cache.activations.size() != weights_.size()) {
    throw DataError("stale MLP cache: parameters changed since the forward pass");
  }
  const Matrix<T>& y = cache.activations.back();
  if (dl_dy.rows() != y.rows() || dl_dy.cols() != y.cols()) {
    throw DataError("output gradient shape mismatch");
  }
  if (grads.weights.size() != weights_.size()) grads = zero_gradients();
  Matrix<T> delta = dl_dy;
  for (size_t l = weights_.size(); l-- > 0;) {
    const Activation act = l + 1 == weights_.size() ? output_ : hidden_;
    const Matrix<T> dz = activation_backward(delta, cache.activations[l], act);
    grads.weights[l].noalias() += dz * cache.inputs[l].transpose();
    grads.biases[l] += dz.rowwise().sum();
    delta.resize(weights_[l].cols(), dz.cols());
    delta.noalias() = weights_[l].transpose() * dz;
  }
  return delta;
}

template <class T>
template <class U>
Mlp<U> Mlp<T>::cast() const {
  Mlp<U> out(sizes_, hidden_, output_);
  for (size_t l = 0; l < weights_.size(); ++l) {
    out.weights_[l] = weights_[l].template cast<U>();
    out.biases_[l] = biases_[l].template cast<U>();
  }
  return out;
}

template <class T>
void AdamState<T>::add_group(std::string name, double lr, double weight_decay,
                             const std::vector<size_t>& sizes) {
  AdamGroup<T> g;
  g.name = std::move(name);
  g.lr = lr;
  g.weight_decay = weight_decay;
  for (size_t n : sizes) {
    g.m.emplace_back(n, T(0));
    g.v.emplace_back(n, T(0));
  }
  groups.push_back(std::move(g));
}

template <class T>
void adam_step(AdamState<T>& state, const std::vector<std::vector<std::span<T>>>& params,
               const std::vector<std::vector<std::span<const T>>>& grads) {
  if (params.size() != state.groups.size() || grads.size() != state.groups.size()) {
    throw DataError("Adam: group count mismatch");
  }
  ++state.step;
  const double b1 = state.hyper.beta1, b2 = state.hyper.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (size_t gi = 0; gi < state.groups.size(); ++gi) {
    AdamGroup<T>& group = state.groups[gi];
    if (params[gi].size() != group.m.size() || grads[gi].size() != group.m.size()) {
      throw DataError("Adam: tensor count mismatch in group " + group.name);
    }
    const T step_size = T(group.lr / c1);
    const T inv_c2 = T(1.0 / c2);
    const T wd = T(group.weight_decay);
    const T eps = T(state.hyper.eps);
    const T tb1 = T(b1), tb2 = T(b2);
    for (size_t k = 0; k < group.m.size(); ++k) {
      std::span<T> p = params[gi][k];
      std::span<const T> g = grads[gi][k];
      if (p.size() != group.m[k].size() || g.size() != p.size()) {
        throw DataError("Adam: tensor size mismatch in group " + group.name);
      }
      T* m = group.m[k].data();
      T* v = group.v[k].data();
      for (size_t i = 0; i < p.size(); ++i) {
        const T gi_ = g[i] + wd * p[i];
        m[i] = tb1 * m[i] + (T(1) - tb1) * gi_;
        v[i] = tb2 * v[i] + (T(1) - tb2) * gi_ * gi_;
        p[i] -= step_size * m[i] / (std::sqrt(v[i] * inv_c2) + eps);
      }
    }
  }
}

template <class T>
RffEncoder<T>::RffEncoder(int frequencies, double sigma, uint64_t seed) : sigma_(sigma) {
  if (frequencies < 1) throw DataError("RFF needs at least one frequency");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  b_.resize(frequencies, 3);
  for (Eigen::Index k = 0; k < b_.size(); ++k) b_.data()[k] = T(normal(rng));
}

template <class T>
Matrix<T> RffEncoder<T>::encode(const Matrix<T>& points) const {
  if (points.rows() != 3) throw DataError("RFF expects 3 x N points");
  const Eigen::Index k = b_.rows();
  Matrix<T> proj(k, points.cols());
  proj.noalias() = (T(2.0 * M_PI) * b_) * points;
  Matrix<T> out(2 * k, points.cols());
  out.topRows(k) = proj.array().cos().matrix();
  out.bottomRows(k) = proj.array().sin().matrix();
  return out;
}

template <class T>
void RffEncoder<T>::save(std::ostream& out) const {
  out.write("RFF1", 4);
  io::write_pod<uint32_t>(out, static_cast<uint32_t>(b_.rows()));
  io::write_pod<uint8_t>(out, static_cast<uint8_t>(sizeof(T)));
  io::write_pod<double>(out, sigma_);
  io::write_array<T>(out, std::span<const T>(b_.data(), b_.size()));
}

template <class T>
RffEncoder<T> RffEncoder<T>::load(std::istream& in) {
  io::expect_magic(in, "RFF1");
  RffEncoder<T> enc;
  const uint32_t k = io::read_pod<uint32_t>(in);
  const uint8_t width = io::read_pod<uint8_t>(in);
  if (width != sizeof(T)) throw DataError("RFF scalar width mismatch");
  enc.sigma_ = io::read_pod<double>(in);
  enc.b_.resize(k, 3);
  io::read_array<T>(in, std::span<T>(enc.b_.data(), enc.b_.size()));
  return enc;
}

template <class T>
RffBaseline<T> RffBaseline<T>::make(int out_dim, uint64_t seed, int frequencies, double sigma) {
  RffBaseline<T> m;
  m.encoder = RffEncoder<T>(frequencies, sigma, seed);
  std::vector<int> sizes{m.encoder.output_dim()};
  for (int i = 0; i < 6; ++i) sizes.push_back(128);
  sizes.push_back(out_dim);
  m.mlp = Mlp<T>(sizes, Activation::Relu, Activation::Sigmoid);
  m.mlp.init_uniform(seed + 1);
  return m;
}

template class Mlp<float>;
template class Mlp<double>;
template Mlp<double> Mlp<float>::cast<double>() const;
template Mlp<float> Mlp<double>::cast<float>() const;
template Mlp<float> Mlp<float>::cast<float>() const;
template Mlp<double> Mlp<double>::cast<double>() const;
template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(AdamState<float>&, const std::vector<std::vector<std::span<float>>>&,
                               const std::vector<std::vector<std::span<const float>>>&);
template void adam_step<double>(AdamState<double>&,
                                const std::vector<std::vector<std::span<double>>>&,
                                const std::vector<std::vector<std::span<const double>>>&);
template class RffEncoder<float>;
template class RffEncoder<double>;
template struct RffBaseline<float>;
template struct RffBaseline<double>;

}  // namespace meshfeat
