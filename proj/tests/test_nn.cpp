#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "meshfeat/errors.hpp"
#include "meshfeat/nn.hpp"

using namespace meshfeat;

namespace {

Matrix<double> random_matrix(int r, int c, uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, scale);
  Matrix<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

double act(Activation a, double x) {
  switch (a) {
    case Activation::Relu: return x > 0 ? x : 0;
    case Activation::Sigmoid: return 1 / (1 + std::exp(-x));
    case Activation::Identity: return x;
  }
  return x;
}

// Element-by-element forward pass with plain loops.
Matrix<double> naive_forward(const Mlp<double>& net, const Matrix<double>& x) {
  std::vector<std::vector<double>> cols(x.cols());
  Matrix<double> y(net.sizes().back(), x.cols());
  for (Eigen::Index b = 0; b < x.cols(); ++b) {
    std::vector<double> h(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) h[i] = x(i, b);
    for (size_t l = 0; l < net.num_layers(); ++l) {
      const auto& w = net.weight(l);
      std::vector<double> next(w.rows());
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        double s = net.bias(l)(r);
        for (Eigen::Index c = 0; c < w.cols(); ++c) s += w(r, c) * h[c];
        next[r] = act(l + 1 == net.num_layers() ? net.output_activation() : net.hidden_activation(), s);
      }
      h = next;
    }
    for (size_t i = 0; i < h.size(); ++i) y(i, b) = h[i];
  }
  return y;
}

}  // namespace

TEST(Mlp, ZeroWeightsSigmoidGivesHalf) {
  Mlp<double> net({4, 32, 32, 3}, Activation::Relu, Activation::Sigmoid);
  for (auto p : net.parameters()) std::fill(p.begin(), p.end(), 0.0);
  const auto y = net.forward(random_matrix(4, 10, 1));
  EXPECT_TRUE((y.array() == 0.5).all());
}

TEST(Mlp, IdentityLayerPassesThrough) {
  Mlp<double> net({5, 5}, Activation::Relu, Activation::Identity);
  net.mutable_weight(0).setIdentity();
  net.mutable_bias(0).setZero();
  const auto x = random_matrix(5, 7, 2);
  EXPECT_EQ(net.forward(x), x);
}

TEST(Mlp, MatchesNaiveLoopOracle) {
  for (Activation out : {Activation::Sigmoid, Activation::Identity, Activation::Relu}) {
    Mlp<double> net({6, 9, 7, 4}, Activation::Relu, out);
    net.init_uniform(3);
    const auto x = random_matrix(6, 25, 4);
    EXPECT_LT((net.forward(x) - naive_forward(net, x)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Mlp, SigmoidOutputStaysInsideUnitInterval) {
  Mlp<double> net({3, 16, 2}, Activation::Relu, Activation::Sigmoid);
  net.init_uniform(5);
  const auto y = net.forward(random_matrix(3, 200, 6, 3.0));
  EXPECT_GT(y.minCoeff(), 0.0);
  EXPECT_LT(y.maxCoeff(), 1.0);
}

TEST(Mlp, RejectsBadInput) {
  Mlp<double> net({3, 4, 2}, Activation::Relu, Activation::Sigmoid);
  net.init_uniform(1);
  EXPECT_THROW(net.forward(random_matrix(4, 2, 1)), DataError);
  Matrix<double> x = random_matrix(3, 2, 1);
  x(1, 1) = std::nan("");
  EXPECT_THROW(net.forward(x), NumericalError);
}

TEST(Mlp, StaleCacheIsRejected) {
  Mlp<double> net({3, 4, 2}, Activation::Relu, Activation::Sigmoid);
  net.init_uniform(1);
  Mlp<double>::Cache cache;
  net.forward(random_matrix(3, 2, 1), &cache);
  net.parameters()[0][0] += 0.1;
  auto g = net.zero_gradients();
  EXPECT_THROW(net.backward(cache, Matrix<double>::Ones(2, 2), g), DataError);
}

TEST(Mlp, ParameterCountOfDefaultDecoder) {
  Mlp<float> net({4, 32, 32, 3}, Activation::Relu, Activation::Sigmoid);
  EXPECT_EQ(net.parameter_count(), size_t(4 * 32 + 32 + 32 * 32 + 32 + 32 * 3 + 3));
  EXPECT_EQ(net.parameter_count(), 1315u);
}

TEST(Mlp, BackwardMatchesFiniteDifferences) {
  Mlp<double> net({3, 5, 5, 2}, Activation::Relu, Activation::Sigmoid);
  net.init_uniform(7);
  const auto x = random_matrix(3, 8, 8);
  const auto w = random_matrix(2, 8, 9);
  auto loss = [&] { return (net.forward(x).array() * w.array()).sum(); };
  Mlp<double>::Cache cache;
  net.forward(x, &cache);
  auto grads = net.zero_gradients();
  const Matrix<double> dx = net.backward(cache, w, grads);
  const auto gspans = Mlp<double>::gradient_spans(grads);
  const double h = 1e-5;
  double worst = 0;
  auto params = net.parameters();
  for (size_t t = 0; t < params.size(); ++t) {
    for (size_t i = 0; i < params[t].size(); ++i) {
      const double saved = params[t][i];
      params[t][i] = saved + h;
      const double up = loss();
      params[t][i] = saved - h;
      const double down = loss();
      params[t][i] = saved;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(fd - gspans[t][i]) / std::max(1e-3, std::abs(fd)));
    }
  }
  EXPECT_LT(worst, 1e-4);
  // Input gradient via a directional derivative.
  const auto dir = random_matrix(3, 8, 10);
  const double up = (net.forward(x + h * dir).array() * w.array()).sum();
  const double down = (net.forward(x - h * dir).array() * w.array()).sum();
  const double fd = (up - down) / (2 * h);
  const double an = (dx.array() * dir.array()).sum();
  EXPECT_NEAR(fd, an, 1e-4 * std::max(1.0, std::abs(an)));
}

TEST(Mlp, ZeroOutputGradientGivesZeroGradients) {
  Mlp<double> net({3, 5, 2}, Activation::Relu, Activation::Sigmoid);
  net.init_uniform(1);
  Mlp<double>::Cache cache;
  net.forward(random_matrix(3, 4, 2), &cache);
  auto g = net.zero_gradients();
  const auto dx = net.backward(cache, Matrix<double>::Zero(2, 4), g);
  EXPECT_TRUE((dx.array() == 0).all());
  for (auto s : Mlp<double>::gradient_spans(g)) {
    for (double v : s) EXPECT_EQ(v, 0.0);
  }
}

TEST(Mlp, LinearNetMatchesLeastSquaresGradient) {
  // One identity-activation layer, loss 0.5 ||W X + b - Y||^2:
  // dW = (WX + b - Y) X^T, db = row sums of the residual.
  Mlp<double> net({4, 3}, Activation::Identity, Activation::Identity);
  net.init_uniform(11);
  const auto x = random_matrix(4, 10, 12);
  const auto y = random_matrix(3, 10, 13);
  Mlp<double>::Cache cache;
  const Matrix<double> out = net.forward(x, &cache);
  const Matrix<double> residual = out - y;
  auto g = net.zero_gradients();
  net.backward(cache, residual, g);
  EXPECT_LT((g.weights[0] - residual * x.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((g.biases[0] - residual.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Mlp, ConstantTargetSmokeFit) {
  Mlp<double> net({2, 8, 1}, Activation::Relu, Activation::Sigmoid);
  net.init_uniform(3);
  AdamState<double> adam;
  std::vector<size_t> sizes;
  for (auto p : net.parameters()) sizes.push_back(p.size());
  adam.add_group("mlp", 1e-2, 0.0, sizes);
  const Matrix<double> x = random_matrix(2, 1, 4);
  const double target = 0.83;
  double y = 0;
  for (int step = 0; step < 2000; ++step) {
    Mlp<double>::Cache cache;
    y = net.forward(x, &cache)(0, 0);
    auto g = net.zero_gradients();
    net.backward(cache, Matrix<double>::Constant(1, 1, y > target ? 1.0 : -1.0), g);
    auto spans = Mlp<double>::gradient_spans(g);
    adam_step<double>(adam, {net.parameters()}, {spans});
  }
  EXPECT_LT(std::abs(y - target), 1e-3);
}

TEST(Mlp, CastPreservesOutputs) {
  Mlp<double> net({4, 32, 32, 3}, Activation::Relu, Activation::Sigmoid);
  net.init_uniform(1);
  const Mlp<float> f = net.cast<float>();
  const auto x = random_matrix(4, 10, 2);
  EXPECT_LT((f.forward(x.cast<float>()).cast<double>() - net.forward(x)).cwiseAbs().maxCoeff(), 1e-6);
}

namespace {

AdamState<double> one_tensor_adam(double lr, double wd, size_t n) {
  AdamState<double> a;
  a.add_group("p", lr, wd, {n});
  return a;
}

}  // namespace

TEST(Adam, SingleStepFromZeroState) {
  std::vector<double> p{1.0, -2.0, 0.5};
  const std::vector<double> g{0.5, -3.0, 1e-3};
  auto state = one_tensor_adam(0.1, 0.0, 3);
  adam_step<double>(state, {{std::span<double>(p)}}, {{std::span<const double>(g)}});
  // m_hat = g and v_hat = g^2 after bias correction, so the step is lr g / (|g| + eps).
  const double expect[3] = {1.0 - 0.1 * 0.5 / (0.5 + 1e-8), -2.0 + 0.1 * 3.0 / (3.0 + 1e-8),
                            0.5 - 0.1 * 1e-3 / (1e-3 + 1e-8)};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], expect[i], 1e-15);
}

TEST(Adam, SecondStepHandEvaluated) {
  std::vector<double> p{0.0};
  auto state = one_tensor_adam(0.01, 0.0, 1);
  const std::vector<double> g1{2.0}, g2{-1.0};
  adam_step<double>(state, {{std::span<double>(p)}}, {{std::span<const double>(g1)}});
  adam_step<double>(state, {{std::span<double>(p)}}, {{std::span<const double>(g2)}});
  const double m = 0.9 * 0.1 * 2.0 + 0.1 * -1.0;
  const double v = 0.999 * 0.001 * 4.0 + 0.001 * 1.0;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  const double want = -0.01 * 2.0 / (2.0 + 1e-8) - 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
  EXPECT_NEAR(p[0], want, 1e-12);
}

TEST(Adam, ConstantGradientMovesByLearningRate) {
  std::vector<double> p{0.0, 0.0};
  const std::vector<double> g{0.3, -7.0};
  auto state = one_tensor_adam(1e-3, 0.0, 2);
  for (int i = 0; i < 500; ++i) {
    const double before0 = p[0], before1 = p[1];
    adam_step<double>(state, {{std::span<double>(p)}}, {{std::span<const double>(g)}});
    EXPECT_NEAR(p[0] - before0, -1e-3, 1e-9);
    EXPECT_NEAR(p[1] - before1, 1e-3, 1e-9);
  }
}

TEST(Adam, ZeroGradientWithoutDecayIsNoOp) {
  std::vector<double> p{1.5, -0.25};
  const std::vector<double> g{0.0, 0.0};
  auto state = one_tensor_adam(0.1, 0.0, 2);
  for (int i = 0; i < 10; ++i) adam_step<double>(state, {{std::span<double>(p)}}, {{std::span<const double>(g)}});
  EXPECT_EQ(p, (std::vector<double>{1.5, -0.25}));
}

TEST(Adam, WeightDecayAddsToGradient) {
  std::vector<double> p{2.0}, q{2.0};
  auto decayed = one_tensor_adam(0.1, 0.5, 1);
  auto plain = one_tensor_adam(0.1, 0.0, 1);
  const std::vector<double> g{0.0}, g_equiv{0.5 * 2.0};
  adam_step<double>(decayed, {{std::span<double>(p)}}, {{std::span<const double>(g)}});
  adam_step<double>(plain, {{std::span<double>(q)}}, {{std::span<const double>(g_equiv)}});
  EXPECT_EQ(p[0], q[0]);
}

TEST(Adam, GroupsUseTheirOwnRates) {
  std::vector<double> a{0.0}, b{0.0};
  AdamState<double> state;
  state.add_group("mlp", 2e-4, 1e-5, {1});
  state.add_group("features", 5e-3, 0.0, {1});
  const std::vector<double> g{1.0};
  adam_step<double>(state, {{std::span<double>(a)}, {std::span<double>(b)}},
                    {{std::span<const double>(g)}, {std::span<const double>(g)}});
  EXPECT_NEAR(a[0], -2e-4 / (1 + 1e-8), 1e-15);
  EXPECT_NEAR(b[0], -5e-3 / (1 + 1e-8), 1e-15);
}

TEST(Rff, OriginAndUnitCircle) {
  const RffEncoder<double> enc(kRffFrequencies, kRffSigma, 3);
  const auto zero = enc.encode(Matrix<double>::Zero(3, 1));
  EXPECT_TRUE((zero.topRows(kRffFrequencies).array() == 1.0).all());
  EXPECT_TRUE((zero.bottomRows(kRffFrequencies).array() == 0.0).all());
  const auto e = enc.encode(random_matrix(3, 20, 4));
  const Matrix<double> s = e.topRows(kRffFrequencies).array().square() + e.bottomRows(kRffFrequencies).array().square();
  EXPECT_LT((s.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Rff, FrequencyScaleMatchesSigma) {
  const RffEncoder<double> enc(4096, kRffSigma, 5);
  const auto& b = enc.matrix();
  const double var = b.array().square().mean() - std::pow(b.mean(), 2);
  EXPECT_NEAR(std::sqrt(var), kRffSigma, 0.02 * kRffSigma);
}

TEST(Rff, SerializationRoundTripIsBitwise) {
  const RffEncoder<float> enc(kRffFrequencies, kRffSigma, 6);
  std::stringstream ss;
  enc.save(ss);
  const RffEncoder<float> back = RffEncoder<float>::load(ss);
  const Matrix<float> pts = random_matrix(3, 50, 7).cast<float>();
  EXPECT_EQ(enc.encode(pts), back.encode(pts));
  std::stringstream wrong;
  RffEncoder<double>(8, 1.0, 1).save(wrong);
  EXPECT_THROW(RffEncoder<float>::load(wrong), DataError);
}

TEST(Rff, BaselineShape) {
  const auto base = RffBaseline<float>::make(3, 1);
  ASSERT_EQ(base.mlp.sizes(), (std::vector<int>{256, 128, 128, 128, 128, 128, 128, 3}));
  const size_t mlp = 256 * 128 + 128 + 5 * (128 * 128 + 128) + 128 * 3 + 3;
  EXPECT_EQ(base.mlp.parameter_count(), mlp);
  EXPECT_EQ(base.parameter_count(), mlp + 128 * 3);
  const auto y = base.forward(random_matrix(3, 10, 2).cast<float>());
  EXPECT_EQ(y.rows(), 3);
  EXPECT_GT(y.minCoeff(), 0.0f);
  EXPECT_LT(y.maxCoeff(), 1.0f);
}
