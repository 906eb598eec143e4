#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "op_cases.hpp"
#include "sain/ops.hpp"

namespace sain {
namespace {

using testing::gradcheck;
using testing::random_tensor;

Tensor vec(std::initializer_list<double> v, bool grad = false) {
  std::vector<double> data(v);
  Tensor t = Tensor::from_vector({1, 1, 1, data.size()}, data);
  if (grad) t.set_requires_grad(true);
  return t;
}

TEST(Elementwise, HadamardProduct) {
  const Tensor out = mul(vec({2, 3}), vec({4, 5}));
  EXPECT_EQ(out.to_vector(), (std::vector<double>{8, 15}));
}

TEST(Elementwise, ExpOfZerosIsOnes) {
  const Tensor out = exp(Tensor::zeros({2, 3, 4, 5}));
  for (double v : out.to_vector()) EXPECT_EQ(v, 1.0);
}

TEST(Elementwise, SquareDerivativeAtThree) {
  Tensor x = vec({3.0}, true);
  sum(mul(x, x)).backward();
  EXPECT_DOUBLE_EQ(x.grad().item(), 6.0);
  // Central difference with step 1e-6.
  const double h = 1e-6;
  const double numeric = ((3 + h) * (3 + h) - (3 - h) * (3 - h)) / (2 * h);
  EXPECT_LE(testing::relative_error(x.grad().item(), numeric, 1e-12), 1e-6);
}

TEST(Elementwise, ShapeMismatchNamesBothShapes) {
  try {
    add(Tensor::zeros({1, 2, 3, 4}), Tensor::zeros({1, 2, 4, 3}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(1,2,3,4)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("(1,2,4,3)"), std::string::npos) << msg;
  }
}

TEST(Elementwise, ScaleAndOffset) {
  EXPECT_EQ(scale(vec({1, -2}), 3.0).to_vector(), (std::vector<double>{3, -6}));
  EXPECT_EQ(add_scalar(vec({1, -2}), 0.5).to_vector(), (std::vector<double>{1.5, -1.5}));
  EXPECT_EQ(neg(vec({1, -2})).to_vector(), (std::vector<double>{-1, 2}));
}

TEST(Elementwise, LeakyReluAndSigmoid) {
  EXPECT_EQ(leaky_relu(vec({-1, 2}), 0.2).to_vector(), (std::vector<double>{-0.2, 2}));
  EXPECT_DOUBLE_EQ(sigmoid(vec({0})).item(), 0.5);
}

class OpGradients : public ::testing::TestWithParam<testing::OpCase> {};

TEST_P(OpGradients, MatchFiniteDifferences) {
  Rng rng(17);
  const auto r = GetParam().check(rng);
  EXPECT_GT(r.checked, 0u);
  EXPECT_LE(r.max_error, 1e-5) << GetParam().name << ": " << r.worst;
}

INSTANTIATE_TEST_SUITE_P(AllOps, OpGradients, ::testing::ValuesIn(testing::op_gradient_cases()),
                         [](const auto& info) { return info.param.name; });

// Forward takes the hard value, backward passes the upstream gradient to the
// soft input unchanged, so finite differences do not apply.
TEST(StraightThrough, ValueIsHardGradientIsIdentity) {
  Rng rng(4);
  const Tensor hard = random_tensor({1, 2, 3, 3}, rng);
  Tensor soft = random_tensor({1, 2, 3, 3}, rng, -1, 1, true);
  const Tensor w = random_tensor({1, 2, 3, 3}, rng);
  const Tensor out = straight_through(hard, soft);
  EXPECT_EQ(out.to_vector(), hard.to_vector());
  sum(mul(out, w)).backward();
  EXPECT_EQ(soft.grad().to_vector(), w.to_vector());
}

TEST(Conv2d, IdentityKernel) {
  Rng rng(1);
  const Tensor x = random_tensor({2, 1, 5, 5}, rng);
  const Tensor w = Tensor::full({1, 1, 1, 1}, 1.0);
  const Tensor b = Tensor::zeros({1, 1, 1, 1});
  EXPECT_EQ(conv2d(x, w, b, 0).to_vector(), x.to_vector());
}

TEST(Conv2d, OnesKernelOnConstantInterior) {
  const double c = 1.75;
  const Tensor x = Tensor::full({1, 1, 6, 6}, c);
  const Tensor out = conv2d(x, Tensor::full({1, 1, 3, 3}, 1.0), Tensor(), 1);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 2, 3), 9 * c);
  EXPECT_DOUBLE_EQ(out.at(0, 0, 0, 0), 4 * c);  // zero padding at the corner
}

TEST(Conv2d, RejectsChannelMismatchAndBadPadding) {
  const Tensor x = Tensor::zeros({1, 2, 4, 4});
  EXPECT_THROW(conv2d(x, Tensor::zeros({1, 3, 3, 3}), Tensor(), 1), ShapeError);
  EXPECT_THROW(conv2d(x, Tensor::zeros({1, 2, 3, 3}), Tensor(), 0), ShapeError);
  EXPECT_THROW(conv2d(x, Tensor::zeros({1, 2, 2, 2}), Tensor(), 0), ShapeError);
}

TEST(Reshape, SplitShapesAndConcatInverse) {
  Rng rng(2);
  const Tensor t = random_tensor({2, 12, 3, 3}, rng);
  const Tensor a = slice_channels(t, 0, 3);
  const Tensor b = slice_channels(t, 3, 9);
  EXPECT_EQ(a.shape(), (Shape{2, 3, 3, 3}));
  EXPECT_EQ(b.shape(), (Shape{2, 9, 3, 3}));
  EXPECT_EQ(concat_channels({a, b}).to_vector(), t.to_vector());
  EXPECT_THROW(slice_channels(t, 10, 3), ShapeError);
}

TEST(Reshape, SpaceToDepthRoundTripIsBitExact) {
  std::vector<double> ramp(16);
  for (int i = 0; i < 16; ++i) ramp[i] = i;
  const Tensor t = Tensor::from_vector({1, 1, 4, 4}, ramp);
  const Tensor s = space_to_depth(t, 2);
  EXPECT_EQ(s.shape(), (Shape{1, 4, 2, 2}));
  EXPECT_EQ(depth_to_space(s, 2).to_vector(), ramp);
  EXPECT_THROW(space_to_depth(Tensor::zeros({1, 1, 3, 4}), 2), ShapeError);
}

TEST(Backward, SumGivesOnes) {
  Rng rng(4);
  Tensor x = random_tensor({2, 3, 2, 5}, rng, -1, 1, true);
  sum(x).backward();
  for (double g : x.grad().to_vector()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, HalfSumOfSquaresGivesInput) {
  Rng rng(4);
  Tensor x = random_tensor({1, 2, 3, 3}, rng, -1, 1, true);
  scale(sum(mul(x, x)), 0.5).backward();
  EXPECT_EQ(x.grad().to_vector(), x.to_vector());
}

TEST(Backward, RejectsNonScalarAndSecondPass) {
  Tensor x = Tensor::full({1, 1, 2, 2}, 1.0);
  x.set_requires_grad(true);
  EXPECT_THROW(mul(x, x).backward(), ShapeError);
  const Tensor loss = sum(mul(x, x));
  loss.backward();
  EXPECT_THROW(loss.backward(), std::logic_error);
  EXPECT_THROW(Tensor::scalar(1.0).backward(), std::logic_error);
}

TEST(Backward, GradientsAccumulateAcrossGraphs) {
  Tensor x = vec({1.5, -2.0}, true);
  sum(mul(x, x)).backward();
  const auto g1 = x.grad().to_vector();
  sum(scale(x, 3.0)).backward();
  const auto g2 = x.grad().to_vector();
  EXPECT_DOUBLE_EQ(g2[0], g1[0] + 3.0);
  EXPECT_DOUBLE_EQ(g2[1], g1[1] + 3.0);
  x.zero_grad();
  EXPECT_FALSE(x.grad().defined());
}

TEST(Backward, SharedSubgraphVisitedOnce) {
  Tensor x = vec({2.0}, true);
  const Tensor y = exp(x);
  sum(add(mul(y, y), y)).backward();  // d/dx (e^{2x} + e^x)
  EXPECT_NEAR(x.grad().item(), 2 * std::exp(4.0) + std::exp(2.0), 1e-9);
}

TEST(Backward, FreeingGraphKeepsParameters) {
  Tensor w = vec({0.5, 0.25}, true);
  {
    const Tensor loss = sum(exp(w));
    loss.backward();
  }
  EXPECT_EQ(w.to_vector(), (std::vector<double>{0.5, 0.25}));
  EXPECT_TRUE(w.grad().defined());
}

TEST(NoGrad, GuardStopsRecording) {
  Tensor x = vec({1.0}, true);
  NoGradGuard guard;
  EXPECT_FALSE(mul(x, x).requires_grad());
}

TEST(Determinism, IdenticalInputsGiveIdenticalGradients) {
  auto run = [] {
    Rng rng(99);
    Tensor x = random_tensor({1, 2, 4, 4}, rng, -1, 1, true);
    Tensor w = random_tensor({2, 2, 3, 3}, rng, -1, 1, true);
    sum(sigmoid(conv2d(x, w, Tensor(), 1))).backward();
    auto g = w.grad().to_vector();
    g.push_back(x.grad().flat(7));
    return g;
  };
  EXPECT_EQ(run(), run());
}

TEST(Precision, Float32Path) {
  Rng rng(8);
  Tensor x = random_tensor({1, 1, 2, 2}, rng, -1, 1, true, DType::f32);
  EXPECT_EQ(x.dtype(), DType::f32);
  sum(mul(x, x)).backward();
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(x.grad().flat(i), 2 * x.flat(i), 1e-6);
  EXPECT_THROW(add(x, Tensor::zeros({1, 1, 2, 2})), ShapeError);
}

TEST(Invariants, DataLengthAndGradShape) {
  Tensor x = Tensor::zeros({2, 3, 4, 5});
  EXPECT_EQ(x.to_vector().size(), 120u);
  x.set_requires_grad(true);
  sum(exp(x)).backward();
  EXPECT_EQ(x.grad().shape(), x.shape());
}

}  // namespace
}  // namespace sain
