#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "qpf/engine/activation.hpp"
#include "qpf/engine/adam.hpp"
#include "qpf/engine/combinators.hpp"
#include "qpf/engine/conv.hpp"
#include "qpf/engine/gemm.hpp"
#include "qpf/engine/loss.hpp"
#include "qpf/errors.hpp"
#include "support/gradcheck.hpp"
#include "support/reference.hpp"
#include "support/suites.hpp"

using namespace qpf;
using engine::ConvGeometry;
using engine::Shape;
using engine::Tensor;

namespace {

template <typename T>
double dot(const Tensor<T>& a, const Tensor<T>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

ConvGeometry random_geometry(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 99);
  const std::size_t kernels[] = {1, 3, 5};
  ConvGeometry g;
  g.kh = kernels[pick(rng) % 3];
  g.kw = pick(rng) % 4 == 0 ? kernels[pick(rng) % 3] : g.kh;
  g.groups = pick(rng) % 5 == 0 ? 2 : 1;
  g.in = g.groups * (1 + pick(rng) % 4);
  // Cover both the direct path (few outputs) and the GEMM path.
  g.out = g.groups * (pick(rng) % 2 == 0 ? 1 + pick(rng) % 3 : 5 + pick(rng) % 20);
  g.has_bias = pick(rng) % 4 != 0;
  return g;
}

}  // namespace

TEST(Conv, IdentityKernel) {
  Tensor<double> x(Shape{1, 1, 1, 1}, 5.0);
  engine::ConvParams<double> p(ConvGeometry{1, 1, 1, 1, 1, true});
  p.weights[0] = 1.0;
  EXPECT_EQ(engine::conv2d_forward(x, p)[0], 5.0);
}

TEST(Conv, ZeroPaddedBoxSum) {
  Tensor<double> x(Shape{1, 1, 3, 3}, 1.0);
  engine::ConvParams<double> p(ConvGeometry{1, 1, 3, 3, 1, true});
  for (auto& v : p.weights.data()) v = 1.0;
  const auto y = engine::conv2d_forward(x, p);
  EXPECT_EQ(y.at(0, 0, 1, 1), 9.0);
  EXPECT_EQ(y.at(0, 0, 0, 0), 4.0);
  EXPECT_EQ(y.at(0, 0, 2, 2), 4.0);
  EXPECT_EQ(y.at(0, 0, 0, 1), 6.0);
}

TEST(Conv, MatchesNestedLoopsExactlyOnRandomShapes) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_geometry(rng);
    const Shape s{1 + static_cast<std::size_t>(rng() % 3), g.in, 1 + static_cast<std::size_t>(rng() % 12),
                  1 + static_cast<std::size_t>(rng() % 12)};
    SCOPED_TRACE(::testing::Message() << "trial " << trial << " in " << s.str() << " out " << g.out << " k " << g.kh
                                    << "x" << g.kw << " groups " << g.groups);
    const auto xf = qpf::testing::random_tensor<float>(s, 100 + trial);
    const auto pf = qpf::testing::random_conv<float>(g, 200 + trial);
    EXPECT_EQ(engine::conv2d_forward(xf, pf), qpf::testing::naive_conv(xf, pf));
    const auto xd = qpf::testing::random_tensor<double>(s, 300 + trial);
    const auto pd = qpf::testing::random_conv<double>(g, 400 + trial);
    EXPECT_EQ(engine::conv2d_forward(xd, pd), qpf::testing::naive_conv(xd, pd));
  }
}

TEST(Conv, BackwardMatchesNestedLoopAdjoint) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const auto g = random_geometry(rng);
    const Shape s{1 + static_cast<std::size_t>(rng() % 3), g.in, 2 + static_cast<std::size_t>(rng() % 9),
                  2 + static_cast<std::size_t>(rng() % 9)};
    SCOPED_TRACE(::testing::Message() << "trial " << trial);
    const auto x = qpf::testing::random_tensor<double>(s, 10 + trial);
    const auto p = qpf::testing::random_conv<double>(g, 20 + trial);
    const auto go = qpf::testing::random_tensor<double>(Shape{s.n, g.out, s.h, s.w}, 30 + trial);
    const auto got = engine::conv2d_backward(x, p, go);
    const auto ref = qpf::testing::naive_conv_backward(x, p, go);
    EXPECT_LT(qpf::testing::max_rel_diff(got.input.vec(), ref.input, 1e-9), 1e-12);
    EXPECT_LT(qpf::testing::max_rel_diff(got.weights.vec(), ref.weights, 1e-9), 1e-12);
    EXPECT_LT(qpf::testing::max_rel_diff(got.bias, ref.bias, 1e-9), 1e-12);
  }
}

TEST(Conv, FloatBackwardCloseToReference) {
  const ConvGeometry g{8, 16, 3, 3, 1, true};
  const auto x = qpf::testing::random_tensor<float>(Shape{2, 8, 10, 10}, 1);
  const auto p = qpf::testing::random_conv<float>(g, 2);
  const auto go = qpf::testing::random_tensor<float>(Shape{2, 16, 10, 10}, 3);
  const auto got = engine::conv2d_backward(x, p, go);
  const auto ref = qpf::testing::naive_conv_backward(x, p, go);
  EXPECT_LT(qpf::testing::max_rel_diff(got.input.vec(), ref.input, 1e-2), 1e-4);
  EXPECT_LT(qpf::testing::max_rel_diff(got.weights.vec(), ref.weights, 1e-2), 1e-4);
}

TEST(Conv, ZeroGradOutGivesZeroGradients) {
  const ConvGeometry g{2, 3, 3, 3, 1, true};
  const auto x = qpf::testing::random_tensor<double>(Shape{1, 2, 4, 4}, 5);
  const auto p = qpf::testing::random_conv<double>(g, 6);
  const auto r = engine::conv2d_backward(x, p, Tensor<double>(Shape{1, 3, 4, 4}));
  for (double v : r.input.data()) EXPECT_EQ(v, 0.0);
  for (double v : r.weights.data()) EXPECT_EQ(v, 0.0);
  for (double v : r.bias) EXPECT_EQ(v, 0.0);
}

TEST(Conv, SinglePixelWeightGradient) {
  Tensor<double> x(Shape{1, 1, 1, 1}, 3.0);
  engine::ConvParams<double> p(ConvGeometry{1, 1, 1, 1, 1, true});
  p.weights[0] = 0.7;
  const auto r = engine::conv2d_backward(x, p, Tensor<double>(Shape{1, 1, 1, 1}, 2.0));
  EXPECT_EQ(r.weights[0], 6.0);
  EXPECT_EQ(r.bias[0], 2.0);
  EXPECT_DOUBLE_EQ(r.input[0], 1.4);
}

TEST(Conv, ShapeErrorsNameTheLayer) {
  engine::ConvParams<double> p(ConvGeometry{3, 2, 3, 3, 1, true});
  Tensor<double> x(Shape{1, 2, 4, 4});
  try {
    engine::conv2d_forward(x, p, "block7");
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("block7"), std::string::npos);
  }
  ConvGeometry even{1, 1, 2, 2, 1, true};
  EXPECT_THROW(even.validate("x"), ShapeError);
  ConvGeometry bad_groups{3, 4, 3, 3, 2, true};
  EXPECT_THROW(bad_groups.validate("x"), ShapeError);
}

TEST(Conv, NonFiniteInputIsRejected) {
  engine::ConvParams<double> p(ConvGeometry{1, 1, 3, 3, 1, true});
  Tensor<double> x(Shape{1, 1, 4, 4});
  x[5] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(engine::conv2d_forward(x, p), NonFiniteError);
}

TEST(Gemm, MatchesNaiveProductExactly) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 1 + rng() % 20, n = 1 + rng() % 70, k = 1 + rng() % 300;
    const auto a = qpf::testing::random_tensor<float>(Shape{1, 1, m, k}, trial);
    const auto b = qpf::testing::random_tensor<float>(Shape{1, 1, k, n}, trial + 100);
    auto c = qpf::testing::random_tensor<float>(Shape{1, 1, m, n}, trial + 200);
    auto ref = c;
    engine::gemm_accumulate(m, n, k, a.vec().data(), k, b.vec().data(), n, c.plane(0, 0), n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        float acc = ref[i * n + j];
        for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
        ref[i * n + j] = acc;
      }
    }
    EXPECT_EQ(c, ref) << m << "x" << n << "x" << k;
  }
}

TEST(Gemm, Transpose) {
  const auto a = qpf::testing::random_tensor<double>(Shape{1, 1, 7, 13}, 3);
  std::vector<double> t(91);
  engine::transpose(7, 13, a.vec().data(), t.data());
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 13; ++j) EXPECT_EQ(t[j * 7 + i], a[i * 13 + j]);
  }
}

TEST(Activation, Values) {
  Tensor<double> x(Shape{1, 1, 1, 3}, std::vector<double>{-3.0, 0.0, 2.0});
  const auto r = engine::activation_forward(engine::Activation::relu(), x);
  EXPECT_EQ(r[0], 0.0);
  EXPECT_EQ(r[2], 2.0);
  const auto l = engine::activation_forward(engine::Activation::leaky_relu(0.01), x);
  EXPECT_DOUBLE_EQ(l[0], -0.03);
  EXPECT_EQ(l[2], 2.0);
  EXPECT_THROW(engine::Activation::leaky_relu(1.5), std::invalid_argument);
}

TEST(Activation, SubgradientAtZeroIsNegativeSlope) {
  Tensor<double> x(Shape{1, 1, 1, 1}, 0.0);
  Tensor<double> g(Shape{1, 1, 1, 1}, 1.0);
  EXPECT_EQ(engine::activation_backward(engine::Activation::relu(), x, g)[0], 0.0);
  EXPECT_EQ(engine::activation_backward(engine::Activation::leaky_relu(0.2), x, g)[0], 0.2);
}

TEST(Combinators, ConcatOrderingAndSplitInverse) {
  const auto a = qpf::testing::random_tensor<double>(Shape{1, 1, 2, 2}, 1);
  const auto b = qpf::testing::random_tensor<double>(Shape{1, 2, 2, 2}, 2);
  const auto c = engine::concat_channels(a, b);
  EXPECT_EQ(c.shape(), (Shape{1, 3, 2, 2}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(c[i], a[i]);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(c[4 + i], b[i]);
  const auto [a2, b2] = engine::split_channels(c, 1);
  EXPECT_EQ(a2, a);
  EXPECT_EQ(b2, b);
  EXPECT_THROW(engine::concat_channels(a, Tensor<double>(Shape{1, 1, 3, 2})), ShapeError);
}

TEST(Combinators, VrcnnBranchMergeWidth) {
  const auto a = qpf::testing::random_tensor<float>(Shape{2, 16, 4, 4}, 1);
  const auto b = qpf::testing::random_tensor<float>(Shape{2, 32, 4, 4}, 2);
  EXPECT_EQ(engine::concat_channels(a, b).shape().c, 48u);
}

TEST(Combinators, AdjointIdentities) {
  const auto a = qpf::testing::random_tensor<double>(Shape{2, 3, 4, 5}, 1);
  const auto b = qpf::testing::random_tensor<double>(Shape{2, 2, 4, 5}, 2);
  const auto g = qpf::testing::random_tensor<double>(Shape{2, 5, 4, 5}, 3);
  const auto [ga, gb] = engine::split_channels(g, 3);
  EXPECT_NEAR(dot(engine::concat_channels(a, b), g), dot(a, ga) + dot(b, gb), 1e-10);

  const auto c = qpf::testing::random_tensor<double>(Shape{2, 3, 4, 5}, 4);
  const auto h = qpf::testing::random_tensor<double>(Shape{2, 3, 4, 5}, 5);
  const auto [ha, hc] = engine::residual_add_backward(h);
  EXPECT_NEAR(dot(engine::residual_add(a, c), h), dot(a, ha) + dot(c, hc), 1e-10);
  EXPECT_EQ(engine::residual_add(a, Tensor<double>(a.shape())), a);
}

TEST(Loss, MseValuesAndGradient) {
  const auto t = qpf::testing::random_tensor<double>(Shape{2, 1, 3, 3}, 1);
  EXPECT_EQ(engine::mse_loss(t, t).value, 0.0);
  auto p = t;
  for (auto& v : p.data()) v += 2.0;
  EXPECT_NEAR(engine::mse_loss(p, t).value, 4.0, 1e-12);

  auto q = qpf::testing::random_tensor<double>(Shape{2, 1, 3, 3}, 2);
  const auto r = engine::mse_loss(q, t);
  auto st = qpf::testing::check_gradient(q.data(), r.grad.data(), qpf::testing::sample_indices(q.size(), 100, 0),
                                         [&] { return qpf::testing::Probe{engine::mse_loss(q, t).value}; });
  EXPECT_LT(st.max_rel, 1e-6);
}

TEST(Adam, FirstStepHandEvaluation) {
  std::vector<double> p{0.5};
  std::vector<double> g{1.0};
  engine::AdamMoments<double> mom;
  engine::adam_step<double>(p, g, mom, {}, 1);
  EXPECT_NEAR(0.5 - p[0], 0.001 / (1.0 + 1e-8), 1e-15);
}

TEST(Adam, SecondStepHandEvaluation) {
  std::vector<double> p{0.0};
  engine::AdamMoments<double> mom;
  const engine::AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
  engine::adam_step<double>(p, std::vector<double>{1.0}, mom, cfg, 1);
  engine::adam_step<double>(p, std::vector<double>{-3.0}, mom, cfg, 2);
  // m2 = 0.9*0.1 - 0.3 = -0.21, v2 = 0.999*0.001 + 0.001*9 = 0.009999.
  const double mhat = -0.21 / (1 - 0.81);
  const double vhat = 0.009999 / (1 - 0.998001);
  const double expected = -0.01 / (1 + 1e-8) - 0.01 * mhat / (std::sqrt(vhat) + 1e-8);
  EXPECT_NEAR(p[0], expected, 1e-14);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<float> p{0.25f, -1.0f};
  const auto before = p;
  engine::AdamMoments<float> mom;
  for (std::uint64_t s = 1; s <= 5; ++s) engine::adam_step<float>(p, std::vector<float>{0.0f, 0.0f}, mom, {}, s);
  EXPECT_EQ(p, before);
}

TEST(Adam, DeterministicAcrossEngines) {
  auto run = [] {
    std::vector<float> a(17), b(5);
    std::mt19937_64 rng(42);
    std::normal_distribution<float> n(0.0f, 1.0f);
    for (auto& v : a) v = n(rng);
    for (auto& v : b) v = n(rng);
    engine::Adam<float> opt;
    for (int step = 0; step < 10; ++step) {
      std::vector<float> ga(a.size()), gb(b.size());
      for (auto& v : ga) v = n(rng);
      for (auto& v : gb) v = n(rng);
      const std::vector<std::span<float>> ps{a, b};
      const std::vector<std::span<const float>> gs{ga, gb};
      opt.step(ps, gs);
    }
    return std::make_pair(a, b);
  };
  EXPECT_EQ(run(), run());
}

TEST(Tensor, AllFiniteDetectsNanAndInf) {
  std::vector<float> v(33, 1.0f);
  EXPECT_TRUE(engine::all_finite<float>(v));
  v[31] = std::numeric_limits<float>::infinity();
  EXPECT_FALSE(engine::all_finite<float>(v));
  v[31] = -std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(engine::all_finite<float>(v));
  std::vector<double> d{std::numeric_limits<double>::max(), -0.0, std::numeric_limits<double>::denorm_min()};
  EXPECT_TRUE(engine::all_finite<double>(d));
}

TEST(GradientSuite, EveryLayerPassesFiniteDifferences) {
  for (const auto& c : qpf::testing::layer_gradient_checks(5)) {
    SCOPED_TRACE(c.name);
    EXPECT_TRUE(c.stats.passes()) << "max rel " << c.stats.max_rel << " scaled " << c.stats.max_rel_scaled
                                  << " checked " << c.stats.checked << " skipped " << c.stats.skipped;
  }
}
