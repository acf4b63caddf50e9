// Copyright 2026 The medfed Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "medfed/errors.hpp"
#include "medfed/tensor.hpp"
#include "test_support.hpp"

namespace medfed {
namespace {

using testing::random_tensor;

TEST(TensorTest, ShapeAndDataMustAgree) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
  const Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  for (double v : t.values()) EXPECT_EQ(v, 0.0);
}

TEST(TensorTest, ScalarHasRankZero) {
  const Tensor s = Tensor::scalar(2.5);
  EXPECT_EQ(s.rank(), 0u);
  EXPECT_EQ(s.item(), 2.5);
  EXPECT_THROW(Tensor::vector({1.0, 2.0}).item(), DimensionError);
}

TEST(TensorTest, ReshapeKeepsElementCount) {
  const Tensor t = Tensor::vector({1, 2, 3, 4, 5, 6});
  const Tensor m = t.reshaped({2, 3});
  EXPECT_EQ(m.at(1, 0), 4.0);
  EXPECT_THROW(t.reshaped({4, 2}), DimensionError);
}

TEST(TensorTest, EqualityComparesShapeAndBits) {
  EXPECT_EQ(Tensor::vector({1, 2}), Tensor::vector({1, 2}));
  EXPECT_FALSE(Tensor::vector({1, 2}) == Tensor::matrix({{1, 2}}));
  EXPECT_FALSE(Tensor::vector({0.0}) == Tensor::vector({-0.0}));
}

TEST(TensorTest, AllFiniteDetectsNanAndInf) {
  Tensor t = Tensor::vector({1, 2, 3});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
  t[1] = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(t.all_finite());
  EXPECT_THROW(require_finite(t, "test"), NumericError);
}

TEST(MatmulTest, IdentityTimesColumn) {
  const Tensor r = kernels::matmul(Tensor::identity(2), Tensor::matrix({{3}, {4}}));
  EXPECT_EQ(r, Tensor::matrix({{3}, {4}}));
}

TEST(MatmulTest, ZeroColumn) {
  const Tensor r = kernels::matmul(Tensor::matrix({{1, 2}, {3, 4}}),
                                   Tensor::matrix({{0}, {0}}));
  EXPECT_EQ(r, Tensor::matrix({{0}, {0}}));
}

TEST(MatmulTest, HandExpandedProduct) {
  const Tensor r = kernels::matmul(Tensor::matrix({{1, 2}, {3, 4}}),
                                   Tensor::matrix({{5}, {6}}));
  EXPECT_EQ(r, Tensor::matrix({{17}, {39}}));
}

TEST(MatmulTest, MismatchNamesBothShapes) {
  try {
    kernels::matmul(Tensor({2, 3}), Tensor({2, 3}));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[2x3]"), std::string::npos) << what;
  }
}

TEST(MatmulTest, IdentityIsExactOnBothSides) {
  Rng rng(7);
  const Tensor a = random_tensor({4, 5}, rng);
  EXPECT_EQ(kernels::matmul(Tensor::identity(4), a), a);
  EXPECT_EQ(kernels::matmul(a, Tensor::identity(5)), a);
}

TEST(MatmulTest, TransposedVariantsMatchNaiveLoops) {
  Rng rng(11);
  const Tensor a = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({3, 5}, rng);
  const Tensor c = random_tensor({6, 4}, rng);
  const Tensor tn = kernels::matmul_tn(a, b);
  const Tensor nt = kernels::matmul_nt(a, c);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 3; ++k) s += a.at(k, i) * b.at(k, j);
      EXPECT_NEAR(tn.at(i, j), s, 1e-12);
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += a.at(i, k) * c.at(j, k);
      EXPECT_NEAR(nt.at(i, j), s, 1e-12);
    }
  }
}

TEST(ElementwiseTest, SpecExamples) {
  EXPECT_EQ(kernels::tanh(Tensor::vector({0, 0})), Tensor::vector({0, 0}));
  EXPECT_EQ(kernels::sigmoid(Tensor::vector({0})), Tensor::vector({0.5}));
  EXPECT_EQ(kernels::add(Tensor::vector({1, 2}), Tensor::vector({3, 4})),
            Tensor::vector({4, 6}));
}

TEST(ElementwiseTest, MatchStandardLibrary) {
  Rng rng(3);
  const Tensor x = random_tensor({101}, rng, -30.0, 30.0);
  const Tensor y = random_tensor({101}, rng);
  const Tensor t = kernels::tanh(x);
  const Tensor s = kernels::sigmoid(x);
  const Tensor m = kernels::mul(x, y);
  const Tensor d = kernels::sub(x, y);
  const Tensor k = kernels::scale(x, -0.25);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(t[i], std::tanh(x[i]), 1e-15);
    EXPECT_NEAR(s[i], 1.0 / (1.0 + std::exp(-x[i])), 1e-15);
    EXPECT_EQ(m[i], x[i] * y[i]);
    EXPECT_EQ(d[i], x[i] - y[i]);
    EXPECT_EQ(k[i], x[i] * -0.25);
  }
}

TEST(ElementwiseTest, SaturatesWithoutOverflow) {
  const Tensor x = Tensor::vector({-1e3, 1e3});
  EXPECT_EQ(kernels::tanh(x), Tensor::vector({-1.0, 1.0}));
  const Tensor s = kernels::sigmoid(x);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 1.0);
}

TEST(ElementwiseTest, ShapeMismatchThrows) {
  EXPECT_THROW(kernels::add(Tensor({2}), Tensor({3})), DimensionError);
  EXPECT_THROW(kernels::mul(Tensor({2, 1}), Tensor({2})), DimensionError);
}

TEST(ElementwiseTest, AccumulateAndAxpy) {
  Tensor a = Tensor::vector({1, 2, 3});
  kernels::accumulate(a, Tensor::vector({1, 1, 1}));
  EXPECT_EQ(a, Tensor::vector({2, 3, 4}));
  kernels::axpy(2.0, Tensor::vector({1, 0, -1}), a);
  EXPECT_EQ(a, Tensor::vector({4, 3, 2}));
  EXPECT_THROW(kernels::accumulate(a, Tensor({2})), DimensionError);
}

TEST(SoftmaxTest, UniformScores) {
  const Tensor s = kernels::softmax(Tensor::vector({0, 0, 0}));
  for (double v : s.values()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(SoftmaxTest, SingleElementIsOne) {
  for (double c : {-700.0, 0.0, 3.5, 900.0}) {
    EXPECT_EQ(kernels::softmax(Tensor::vector({c})), Tensor::vector({1.0}));
  }
}

TEST(SoftmaxTest, LogTwoAgainstZero) {
  const Tensor s = kernels::softmax(Tensor::vector({std::log(2.0), 0.0}));
  EXPECT_NEAR(s[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(s[1], 1.0 / 3.0, 1e-15);
}

TEST(SoftmaxTest, EmptyInputThrows) {
  EXPECT_THROW(kernels::softmax(Tensor({0})), DimensionError);
}

TEST(SoftmaxTest, NormalizedForLargeMagnitudes) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor x = random_tensor({17}, rng, -1e3, 1e3);
    const Tensor s = kernels::softmax(x);
    double sum = 0;
    for (double v : s.values()) {
      EXPECT_GT(v, 0.0 - 1e-300);
      EXPECT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(SoftmaxTest, StrictlyPositiveForModerateInputs) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor s = kernels::softmax(random_tensor({9}, rng, -20, 20));
    for (double v : s.values()) EXPECT_GT(v, 0.0);
  }
}

TEST(SoftmaxTest, ShiftInvariant) {
  Rng rng(8);
  const Tensor x = random_tensor({6}, rng);
  Tensor shifted = x;
  for (double& v : shifted.data()) v += 123.0;
  EXPECT_LT(max_abs_diff(kernels::softmax(x), kernels::softmax(shifted)), 1e-12);
}

TEST(SoftmaxTest, ValidLengthsMaskTail) {
  const Tensor x = Tensor::matrix({{1, 2, 3}, {0, 0, 0}});
  const std::size_t lengths[] = {3, 2};
  const Tensor s = kernels::softmax(x, lengths);
  EXPECT_EQ(s.at(1, 2), 0.0);
  EXPECT_NEAR(s.at(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(s.at(0, 0) + s.at(0, 1) + s.at(0, 2), 1.0, 1e-15);
}

TEST(ConcatTest, SpecExamples) {
  EXPECT_EQ(kernels::concat(Tensor::vector({1, 2}), Tensor::vector({3})),
            Tensor::vector({1, 2, 3}));
  EXPECT_EQ(kernels::concat(Tensor({0}), Tensor::vector({5})), Tensor::vector({5}));
  EXPECT_EQ(kernels::concat(Tensor::matrix({{1}, {2}}), Tensor::matrix({{3}, {4}})),
            Tensor::matrix({{1, 3}, {2, 4}}));
}

TEST(ConcatTest, LeadingMismatchThrows) {
  EXPECT_THROW(kernels::concat(Tensor({2, 1}), Tensor({3, 1})), DimensionError);
}

}  // namespace
}  // namespace medfed
