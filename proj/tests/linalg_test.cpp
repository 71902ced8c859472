// Copyright 2026 The convbeam Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace convbeam {
namespace {

using testing::Rng;

TEST(Linalg, SolveMatchesGaussianElimination) {
  Rng rng(11);
  for (std::size_t n : {1, 2, 3, 6, 12, 24}) {
    const auto a = rng.hpd(n);
    const auto b = rng.matrix(n, 3);
    const auto x = hermitian_solve(a, b, 0.0);
    EXPECT_LT(testing::max_abs_diff(x, testing::gauss_solve(a, b)), 1e-10) << "n=" << n;
    EXPECT_LT(testing::max_abs_diff(matmul(a, x), b), 1e-10);
  }
}

TEST(Linalg, LoadingIsRelativeToMeanDiagonal) {
  Rng rng(12);
  const auto a = rng.hpd(4);
  const auto b = rng.matrix(4, 2);
  const double loading = 0.25;
  const double mean_diag = trace(a).real() / 4.0;
  const auto loaded = a + (loading * mean_diag) * ComplexMatrix::Identity(4);
  EXPECT_LT(testing::max_abs_diff(hermitian_solve(a, b, loading), testing::gauss_solve(loaded, b)), 1e-12);
}

TEST(Linalg, ScaledSystemScalesSolution) {
  Rng rng(13);
  const auto a = rng.hpd(5);
  const auto b = rng.vector(5);
  const auto x1 = hermitian_solve(a, b);
  const auto x2 = hermitian_solve(1e6 * a, b);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(std::abs(x1[i] - 1e6 * x2[i]), 0.0, 1e-9 * x1.norm());
}

TEST(Linalg, ZeroMatrixGetsAbsoluteLoading) {
  ComplexMatrix zero(2, 2);
  const ComplexVector b{1.0, Complex(0.0, 2.0)};
  const auto x = hermitian_solve(zero, b, 0.5);
  EXPECT_NEAR(std::abs(x[0] - 2.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(x[1] - Complex(0.0, 4.0)), 0.0, 1e-15);
}

TEST(Linalg, SingularWithoutLoadingThrows) {
  const ComplexMatrix a{{1.0, 1.0}, {1.0, 1.0}};
  const ComplexVector b{1.0, 0.0};
  try {
    hermitian_solve(a, b, 0.0);
    FAIL() << "expected SingularMatrix";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingularMatrix);
  }
  EXPECT_NO_THROW(hermitian_solve(a, b, 1e-3));
}

TEST(Linalg, ShapeChecks) {
  EXPECT_THROW(hermitian_solve(ComplexMatrix(2, 3), ComplexMatrix(2, 1)), Error);
  EXPECT_THROW(hermitian_solve(ComplexMatrix::Identity(2), ComplexMatrix(3, 1)), Error);
  EXPECT_THROW(hermitian_solve(ComplexMatrix::Identity(2), ComplexMatrix(2, 1), -1.0), Error);
}

TEST(Linalg, BasicAlgebra) {
  const ComplexMatrix a{{1.0, Complex(0, 1)}, {2.0, 3.0}};
  const auto ah = conj_transpose(a);
  EXPECT_EQ(ah(0, 1), 2.0);
  EXPECT_EQ(ah(1, 0), Complex(0, -1));
  EXPECT_EQ(trace(a), Complex(4.0, 0.0));

  const ComplexVector x{1.0, Complex(0, 1)};
  const ComplexVector y{2.0, 1.0};
  const auto xy = outer(x, y);
  EXPECT_EQ(xy(1, 0), Complex(0, 2));
  EXPECT_EQ(dot(x, y), Complex(2.0, -1.0));  // x^H y

  const auto ax = matvec(a, x);
  EXPECT_EQ(ax[0], Complex(0.0, 0.0));
  EXPECT_EQ(ax[1], Complex(2.0, 3.0));

  const auto id = matmul(a, ComplexMatrix::Identity(2));
  EXPECT_EQ(testing::max_abs_diff(id, a), 0.0);
}

TEST(Linalg, HermitianSymmetrizeAveragesTriangles) {
  ComplexMatrix a{{Complex(1, 0.5), Complex(2, 2)}, {Complex(4, 0), 3.0}};
  hermitian_symmetrize(a);
  EXPECT_EQ(a(0, 0), Complex(1, 0));
  EXPECT_EQ(a(0, 1), std::conj(a(1, 0)));
  EXPECT_EQ(a(0, 1), Complex(3, 1));
}

}  // namespace
}  // namespace convbeam
