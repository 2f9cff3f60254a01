#include <gtest/gtest.h>

#include <cmath>

#include "scs/ops.hpp"
#include "scs/params.hpp"
#include "support/finite_difference.hpp"

namespace scs {
namespace {

using testing::check_gradients;
using testing::random_tensor;

constexpr int kSeeds = 20;
constexpr double kPrimitiveTol = 1e-6;

TEST(Conv2d, IdentityKernelReproducesInput) {
  Rng rng(1);
  Tensor<float> x(Shape{2, 3, 5, 4});
  for (auto& v : x.mutable_data()) v = static_cast<float>(rng.uniform(-2, 2));
  Tensor<float> w(Shape{3, 3, 1, 1});
  for (int c = 0; c < 3; ++c) w.mutable_data()[c * 3 + c] = 1.0f;
  Tensor<float> b(Shape{3});
  auto y = conv2d(x, w, b, 1, 0);
  ASSERT_EQ(y.shape(), x.shape());
  for (std::int64_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(Conv2d, OutputShapeArithmetic) {
  auto y = conv2d(Tensor<float>(Shape{1, 3, 8, 8}), Tensor<float>(Shape{16, 3, 3, 3}), Tensor<float>(Shape{16}), 1, 1);
  EXPECT_EQ(y.shape(), (Shape{1, 16, 8, 8}));
  auto z = conv2d(Tensor<float>(Shape{1, 3, 9, 8}), Tensor<float>(Shape{4, 3, 3, 3}), Tensor<float>(Shape{4}), 2, 1);
  EXPECT_EQ(z.shape(), (Shape{1, 4, 5, 4}));
}

TEST(Conv2d, ChannelMismatchNamesBothShapes) {
  try {
    conv2d(Tensor<float>(Shape{1, 2, 4, 4}), Tensor<float>(Shape{4, 3, 3, 3}), Tensor<float>(Shape{4}), 1, 1);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[1,2,4,4]"), std::string::npos);
    EXPECT_NE(msg.find("[4,3,3,3]"), std::string::npos);
  }
}

TEST(Conv2d, RejectsEvenKernel) {
  EXPECT_THROW(conv2d(Tensor<float>(Shape{1, 1, 4, 4}), Tensor<float>(Shape{1, 1, 2, 2}), Tensor<float>(Shape{1}), 1, 0),
               ShapeError);
}

TEST(Conv2d, FiniteDifferenceAcrossSeeds) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(100 + seed);
    const int stride = 1 + seed % 2;
    auto x = random_tensor({1, 2, 5, 5}, rng);
    auto w = random_tensor({3, 2, 3, 3}, rng);
    auto b = random_tensor({3}, rng);
    auto r = check_gradients(
        [stride](const auto& in) { return conv2d(in[0], in[1], in[2], stride, 1); }, {x, w, b}, 1e-5, seed);
    EXPECT_LT(r.max_rel_error, kPrimitiveTol) << "seed " << seed;
  }
}

TEST(Conv2d, PointwiseFiniteDifference) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(200 + seed);
    auto x = random_tensor({2, 3, 3, 4}, rng);
    auto w = random_tensor({2, 3, 1, 1}, rng);
    auto b = random_tensor({2}, rng);
    auto r = check_gradients([](const auto& in) { return conv2d(in[0], in[1], in[2], 1, 0); }, {x, w, b}, 1e-5, seed);
    EXPECT_LT(r.max_rel_error, kPrimitiveTol);
  }
}

TEST(Linear, IdentityWeight) {
  Tensor<float> x(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor<float> w(Shape{3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  auto y = linear(x, w, Tensor<float>(Shape{3}));
  for (int i = 0; i < 6; ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(Linear, ShapeContractAndMismatch) {
  auto y = linear(Tensor<float>(Shape{64, 258}), Tensor<float>(Shape{128, 258}), Tensor<float>(Shape{128}));
  EXPECT_EQ(y.shape(), (Shape{64, 128}));
  auto z = linear(Tensor<float>(Shape{2, 5, 7}), Tensor<float>(Shape{3, 7}), Tensor<float>(Shape{3}));
  EXPECT_EQ(z.shape(), (Shape{2, 5, 3}));
  EXPECT_THROW(linear(Tensor<float>(Shape{4, 5}), Tensor<float>(Shape{3, 6}), Tensor<float>(Shape{3})), ShapeError);
}

TEST(Linear, FiniteDifferenceAcrossSeeds) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(300 + seed);
    auto x = random_tensor({3, 4}, rng);
    auto w = random_tensor({5, 4}, rng);
    auto b = random_tensor({5}, rng);
    auto r = check_gradients([](const auto& in) { return linear(in[0], in[1], in[2]); }, {x, w, b}, 1e-5, seed);
    EXPECT_LT(r.max_rel_error, kPrimitiveTol);
  }
}

TEST(Softmax, ConstantInputIsUniform) {
  Tensor<double> x(Shape{2, 5}, 3.7);
  auto y = softmax(x, 1);
  for (double v : y.data()) EXPECT_NEAR(v, 0.2, 1e-15);
}

TEST(Softmax, HandEvaluatedPair) {
  Tensor<double> x(Shape{2}, {0.0, std::log(2.0)});
  auto y = softmax(x, 0);
  EXPECT_NEAR(y.data()[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(y.data()[1], 2.0 / 3.0, 1e-12);
}

TEST(Softmax, SlicesSumToOneForAllAxes) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor<float> x(Shape{3, 4, 5});
    for (auto& v : x.mutable_data()) v = static_cast<float>(rng.uniform(-30, 30));
    for (int axis = 0; axis < 3; ++axis) {
      auto y = softmax(x, axis);
      auto s = reduce_mean(y, axis);
      const auto n = static_cast<double>(x.dim(axis));
      for (float v : s.data()) EXPECT_NEAR(v * n, 1.0, 1e-6);
      for (float v : y.data()) EXPECT_GE(v, 0.0f);
    }
  }
}

TEST(Softmax, StableForHugeLogits) {
  Tensor<float> x(Shape{3}, {1000.0f, 1000.0f, -1000.0f});
  auto y = softmax(x, 0);
  EXPECT_NEAR(y.data()[0], 0.5f, 1e-6f);
  EXPECT_FALSE(std::isnan(y.data()[2]));
}

TEST(Softmax, FiniteDifferenceAcrossSeeds) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(400 + seed);
    auto x = random_tensor({2, 3, 4}, rng, -2, 2);
    const int axis = seed % 3;
    auto r = check_gradients([axis](const auto& in) { return softmax(in[0], axis); }, {x}, 1e-5, seed);
    EXPECT_LT(r.max_rel_error, kPrimitiveTol);
  }
}

TEST(BilinearResize, ConstantStaysConstant) {
  Tensor<float> x(Shape{1, 2, 3, 5}, 0.25f);
  auto y = bilinear_resize_corner_aligned(x, 7, 4);
  for (float v : y.data()) EXPECT_FLOAT_EQ(v, 0.25f);
}

TEST(BilinearResize, RowToWidthThree) {
  Tensor<double> x(Shape{1, 1, 1, 2}, {0.0, 1.0});
  auto y = bilinear_resize_corner_aligned(x, 1, 3);
  EXPECT_EQ(y.data()[0], 0.0);
  EXPECT_EQ(y.data()[1], 0.5);
  EXPECT_EQ(y.data()[2], 1.0);
}

TEST(BilinearResize, EqualSizeIsIdentity) {
  Rng rng(9);
  Tensor<float> x(Shape{2, 3, 6, 5});
  for (auto& v : x.mutable_data()) v = static_cast<float>(rng.uniform(-1, 1));
  auto y = bilinear_resize_corner_aligned(x, 6, 5);
  for (std::int64_t i = 0; i < x.size(); ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(BilinearResize, CornersAreFixedPoints) {
  Rng rng(11);
  for (std::int64_t h = 2; h <= 17; ++h) {
    for (std::int64_t oh : {2L, 3L, 9L, 17L, 31L}) {
      Tensor<float> x(Shape{1, 1, h, h + 1});
      for (auto& v : x.mutable_data()) v = static_cast<float>(rng.uniform(-1, 1));
      auto y = bilinear_resize_corner_aligned(x, oh, oh + 2);
      const auto w = h + 1, ow = oh + 2;
      EXPECT_EQ(y.at({0, 0, 0, 0}), x.at({0, 0, 0, 0}));
      EXPECT_EQ(y.at({0, 0, 0, ow - 1}), x.at({0, 0, 0, w - 1}));
      EXPECT_EQ(y.at({0, 0, oh - 1, 0}), x.at({0, 0, h - 1, 0}));
      EXPECT_EQ(y.at({0, 0, oh - 1, ow - 1}), x.at({0, 0, h - 1, w - 1}));
    }
  }
}

TEST(BilinearResize, DegenerateOutputSamplesOrigin) {
  Tensor<float> x(Shape{1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto y = bilinear_resize_corner_aligned(x, 1, 1);
  EXPECT_EQ(y.item(), 1.0f);
}

TEST(BilinearResize, FiniteDifferenceAcrossSeeds) {
  for (int seed = 0; seed < kSeeds; ++seed) {
    Rng rng(500 + seed);
    auto x = random_tensor({1, 2, 3, 4}, rng);
    const std::int64_t oh = 2 + seed % 5, ow = 3 + seed % 4;
    auto r = check_gradients([oh, ow](const auto& in) { return bilinear_resize_corner_aligned(in[0], oh, ow); }, {x},
                             1e-5, seed);
    EXPECT_LT(r.max_rel_error, kPrimitiveTol);
  }
}

TEST(Elementwise, SigmoidOfZero) {
  EXPECT_EQ(sigmoid(Tensor<float>::scalar(0.0f)).item(), 0.5f);
}

TEST(Elementwise, ConcatChannelsShape) {
  auto y = concat_channels(Tensor<float>(Shape{1, 64, 8, 8}), Tensor<float>(Shape{1, 2, 8, 8}));
  EXPECT_EQ(y.shape(), (Shape{1, 66, 8, 8}));
  EXPECT_THROW(concat_channels(Tensor<float>(Shape{1, 4, 8, 8}), Tensor<float>(Shape{1, 2, 8, 7})), ShapeError);
}

TEST(Elementwise, BroadcastShapeErrors) {
  EXPECT_THROW(add(Tensor<float>(Shape{2, 3}), Tensor<float>(Shape{4})), ShapeError);
  EXPECT_EQ(add(Tensor<float>(Shape{2, 3}), Tensor<float>(Shape{3})).shape(), (Shape{2, 3}));
  EXPECT_EQ(mul(Tensor<float>(Shape{2, 1, 4}), Tensor<float>(Shape{3, 1})).shape(), (Shape{2, 3, 4}));
}

TEST(Elementwise, MatmulAndReshapeErrors) {
  EXPECT_THROW(matmul(Tensor<float>(Shape{2, 3}), Tensor<float>(Shape{4, 2})), ShapeError);
  EXPECT_THROW(reshape(Tensor<float>(Shape{2, 3}), Shape{4}), ShapeError);
  EXPECT_EQ(reshape(Tensor<float>(Shape{2, 3, 4}), Shape{-1, 4}).shape(), (Shape{6, 4}));
}

// Each primitive in the suite, wrapped as a function of its inputs.
struct SuiteCase {
  const char* name;
  std::vector<Shape> shapes;
  testing::Fn fn;
  double lo = -1.0;
};

std::vector<SuiteCase> suite_cases() {
  return {
      {"add", {{2, 3}, {2, 3}}, [](const auto& in) { return add(in[0], in[1]); }},
      {"add_broadcast", {{2, 3, 4}, {3, 1}}, [](const auto& in) { return add(in[0], in[1]); }},
      {"sub", {{4, 3}, {4, 3}}, [](const auto& in) { return sub(in[0], in[1]); }},
      {"sub_broadcast", {{4, 3}, {}}, [](const auto& in) { return sub(in[0], in[1]); }},
      {"mul", {{3, 5}, {3, 5}}, [](const auto& in) { return mul(in[0], in[1]); }},
      {"mul_broadcast", {{2, 3, 2}, {1, 3, 1}}, [](const auto& in) { return mul(in[0], in[1]); }},
      {"sigmoid", {{3, 4}}, [](const auto& in) { return sigmoid(in[0]); }},
      {"leaky_relu", {{3, 4}}, [](const auto& in) { return leaky_relu(in[0], 0.2); }},
      {"abs_mean", {{3, 4}}, [](const auto& in) { return abs_mean(in[0]); }},
      {"concat_channels", {{1, 2, 3, 3}, {1, 3, 3, 3}}, [](const auto& in) { return concat_channels(in[0], in[1]); }},
      {"slice", {{2, 5, 3}}, [](const auto& in) { return slice(in[0], 1, 1, 4); }},
      {"matmul", {{2, 3, 4}, {2, 4, 5}}, [](const auto& in) { return matmul(in[0], in[1]); }},
      {"matmul_shared", {{2, 3, 4}, {4, 2}}, [](const auto& in) { return matmul(in[0], in[1]); }},
      {"reshape", {{2, 6}}, [](const auto& in) { return reshape(in[0], Shape{3, 4}); }},
      {"permute", {{2, 3, 4}}, [](const auto& in) { return permute(in[0], {2, 0, 1}); }},
      {"reduce_mean", {{3, 4}}, [](const auto& in) { return reduce_mean(in[0]); }},
      {"reduce_mean_axis", {{3, 4, 2}}, [](const auto& in) { return reduce_mean(in[0], 1); }},
      {"sum", {{3, 4}}, [](const auto& in) { return sum(in[0]); }},
      {"avg_pool2d", {{1, 2, 4, 6}}, [](const auto& in) { return avg_pool2d(in[0], 2); }},
      {"scale", {{5}}, [](const auto& in) { return scale(in[0], -1.5); }},
  };
}

TEST(Elementwise, SuitePassesFiniteDifferenceAcrossSeeds) {
  for (const auto& c : suite_cases()) {
    double worst = 0.0;
    for (int seed = 0; seed < kSeeds; ++seed) {
      Rng rng(1000 + seed);
      std::vector<Tensor<double>> inputs;
      for (const auto& s : c.shapes) inputs.push_back(random_tensor(s, rng, c.lo, 1.0));
      worst = std::max(worst, check_gradients(c.fn, inputs, 1e-5, seed).max_rel_error);
    }
    EXPECT_LT(worst, kPrimitiveTol) << c.name;
  }
}

TEST(Backward, SumGivesOnes) {
  Tensor<double> x(Shape{2, 3, 2}, 0.3);
  x.set_requires_grad(true);
  Tape<double> tape;
  TapeScope<double> scope(tape);
  tape.backward(sum(x));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, MeanOfSquares) {
  Tensor<double> x(Shape{3}, {1, 2, 3});
  x.set_requires_grad(true);
  Tape<double> tape;
  TapeScope<double> scope(tape);
  tape.backward(reduce_mean(mul(x, x)));
  EXPECT_NEAR(x.grad()[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(x.grad()[1], 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(x.grad()[2], 2.0, 1e-15);
}

TEST(Backward, SecondCallWithoutResetThrows) {
  Tensor<double> x(Shape{2}, 1.0);
  x.set_requires_grad(true);
  Tape<double> tape;
  TapeScope<double> scope(tape);
  auto loss = sum(x);
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), AutodiffError);
  tape.reset();
  x.zero_grad();
  tape.backward(sum(x));
  EXPECT_EQ(x.grad()[0], 1.0);
}

TEST(Backward, NonScalarLossThrows) {
  Tensor<double> x(Shape{2}, 1.0);
  x.set_requires_grad(true);
  Tape<double> tape;
  TapeScope<double> scope(tape);
  EXPECT_THROW(tape.backward(scale(x, 2.0)), AutodiffError);
}

TEST(Backward, LossMustBeOnThisTape) {
  Tensor<double> x(Shape{2}, 1.0);
  x.set_requires_grad(true);
  Tape<double> tape;
  EXPECT_THROW(tape.backward(sum(x)), AutodiffError);
}

TEST(Backward, RecordedTensorsAreImmutable) {
  Tensor<float> x(Shape{2}, 1.0f);
  x.set_requires_grad(true);
  Tape<float> tape;
  TapeScope<float> scope(tape);
  auto y = scale(x, 2.0f);
  EXPECT_THROW(y.mutable_data(), AutodiffError);
  EXPECT_THROW(x.mutable_data(), AutodiffError);
  tape.reset();
  EXPECT_NO_THROW(x.mutable_data());
}

TEST(Backward, NoRecordingWithoutTape) {
  Tensor<float> x(Shape{2}, 1.0f);
  x.set_requires_grad(true);
  auto y = scale(x, 2.0f);
  EXPECT_FALSE(y.on_tape());
}

TEST(Backward, NodesVisitedInReverseRecordingOrder) {
  Tensor<double> x(Shape{1}, 2.0);
  x.set_requires_grad(true);
  Tape<double> tape;
  TapeScope<double> scope(tape);
  auto a = mul(x, x);       // x^2
  auto b = mul(a, x);       // x^3
  auto c = add(b, a);       // x^3 + x^2
  tape.backward(sum(c));
  EXPECT_EQ(x.grad()[0], 3 * 4.0 + 2 * 2.0);
  EXPECT_LT(a.tape_id(), b.tape_id());
  EXPECT_LT(b.tape_id(), c.tape_id());
}

TEST(Determinism, ForwardIsBitIdentical) {
  auto run = [] {
    Rng rng(77);
    Tensor<float> x(Shape{2, 4, 9, 9});
    for (auto& v : x.mutable_data()) v = static_cast<float>(rng.uniform(-1, 1));
    Tensor<float> w(Shape{6, 4, 3, 3});
    kaiming_uniform(w, 36, rng);
    Tensor<float> b(Shape{6});
    auto y = softmax(leaky_relu(conv2d(x, w, b, 2, 1), 0.2f), 1);
    return std::vector<float>(y.data().begin(), y.data().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(Params, DuplicateNamesRejectedAndCounted) {
  ParamStore<float> store;
  store.add("a.weight", {3, 4});
  store.add("a.bias", {3});
  EXPECT_THROW(store.add("a.bias", {3}), std::invalid_argument);
  EXPECT_EQ(store.param_count(), 15);
  EXPECT_EQ(store.param_count("a.w"), 12);
  EXPECT_TRUE(store.get("a.weight").requires_grad());
}

}  // namespace
}  // namespace scs
