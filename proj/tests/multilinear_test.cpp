// Copyright 2026 The diffsub Authors.
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
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "diffsub/datagen.hpp"
#include "diffsub/multilinear.hpp"
#include "test_util.hpp"

namespace diffsub {
namespace {

const SetFunction kTable = QualitativeInstance().f();

TEST(MultilinearTest, ThreeRoutesValues) {
  EXPECT_DOUBLE_EQ(MultilinearValue(kTable, std::vector<double>{1, 0, 0}), 16);
  EXPECT_DOUBLE_EQ(MultilinearValue(kTable, std::vector<double>{0.5, 0, 0}), 8);
  EXPECT_DOUBLE_EQ(MultilinearValue(kTable, std::vector<double>{0.5, 0.5, 0}), 13.5);
}

TEST(MultilinearTest, ThreeRoutesGradient) {
  EXPECT_DOUBLE_EQ(MultilinearGrad(kTable, std::vector<double>{0, 0, 0})[0], 16);
  EXPECT_DOUBLE_EQ(MultilinearGrad(kTable, std::vector<double>{1, 1, 1})[2], 20);
}

TEST(MultilinearTest, RelaxedScaledObjective) {
  const auto inst = QualitativeInstance();
  const CostVector w{2, 2, 1};
  EXPECT_DOUBLE_EQ(
      RelaxedGScaled(inst, w, SelectionVector::Indicator(Subset::FromIndices({2}, 3), 3)),
      23);
  EXPECT_DOUBLE_EQ(RelaxedGScaled(inst, w, SelectionVector::Zeros(3)), 0);
  EXPECT_DOUBLE_EQ(RelaxedGScaled(inst, w, SelectionVector{0.5, 0, 0}), 6);
}

TEST(MultilinearTest, VertexAgreementCoverage) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto inst = GenRandomInstance(12, 3, 1.0, seed);
    for (std::uint64_t s = 0; s < 4096; ++s) {
      const auto x = SelectionVector::Indicator(Subset(s), 12);
      ASSERT_EQ(MultilinearValue(inst.f(), x.values()), inst.f()(Subset(s)));
    }
  }
}

TEST(MultilinearTest, VertexAgreementTabular) {
  const SetFunction tab = TabularSubmodular(8, Tabulate(GenRandomInstance(8, 2, 1, 5).f()));
  for (std::uint64_t s = 0; s < 256; ++s) {
    const auto x = SelectionVector::Indicator(Subset(s), 8);
    ASSERT_DOUBLE_EQ(MultilinearValue(tab, x.values()), tab(Subset(s)));
  }
}

TEST(MultilinearTest, AgreesWithEnumerationOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = GenRandomInstance(9, 3, 1.0, seed);
    const SetFunction tab = TabularSubmodular(9, Tabulate(inst.f()));
    std::vector<double> x(9);
    for (double& v : x) v = u(rng);
    const double oracle = testing::OracleMultilinear(inst.f(), x);
    EXPECT_NEAR(MultilinearValue(inst.f(), x), oracle, 1e-9);
    EXPECT_NEAR(MultilinearValue(tab, x), oracle, 1e-9);
  }
}

TEST(MultilinearTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = GenRandomInstance(10, 3, 1.0, seed);
    const SetFunction tab = TabularSubmodular(10, Tabulate(inst.f()));
    std::vector<double> x(10);
    for (double& v : x) v = u(rng);
    for (const SetFunction* f : {&inst.f(), &tab}) {
      const auto fd = testing::CentralDiff(
          [&](const std::vector<double>& p) { return MultilinearValue(*f, p); }, x,
          1e-5);
      const auto g = MultilinearGrad(*f, x);
      for (int i = 0; i < 10; ++i) EXPECT_NEAR(g[i], fd[i], 1e-6);
    }
  }
}

TEST(MultilinearTest, AffineInEachCoordinate) {
  const auto inst = GenRandomInstance(8, 3, 1.0, 2);
  std::vector<double> x = {0.1, 0.7, 0.3, 0.9, 0.5, 0.2, 0.8, 0.4};
  for (int i = 0; i < 8; ++i) {
    std::vector<double> a = x, b = x, c = x;
    a[i] = 0.0;
    b[i] = 0.5;
    c[i] = 1.0;
    const double fa = MultilinearValue(inst.f(), a);
    const double fb = MultilinearValue(inst.f(), b);
    const double fc = MultilinearValue(inst.f(), c);
    EXPECT_NEAR(fb, 0.5 * (fa + fc), 1e-12);
  }
}

TEST(MultilinearTest, MonteCarloWithinOnePercent) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = GenRandomInstance(10, 3, 1.0, seed);
    std::vector<double> x(10);
    for (double& v : x) v = u(rng);
    const double exact = MultilinearValue(inst.f(), x);
    const ExtensionConfig mc{ExtensionMode::kMonteCarlo, 100000, seed};
    EXPECT_LT(std::abs(MultilinearValue(inst.f(), x, mc) - exact) /
                  std::max(1.0, std::abs(exact)),
              0.01);
  }
}

TEST(MultilinearTest, MonteCarloVertexExact) {
  // Rounding a vertex is deterministic, so the estimate has no variance.
  // Only summation order separates it from the direct value.
  const auto inst = GenRandomInstance(6, 3, 1.0, 1);
  const ExtensionConfig mc{ExtensionMode::kMonteCarlo, 50, 9};
  for (std::uint64_t s = 0; s < 64; ++s) {
    const auto x = SelectionVector::Indicator(Subset(s), 6);
    EXPECT_NEAR(MultilinearValue(inst.f(), x.values(), mc), inst.f()(Subset(s)), 1e-12);
  }
}

TEST(MultilinearTest, MonteCarloIsSeeded) {
  const auto inst = GenRandomInstance(6, 3, 1.0, 1);
  const std::vector<double> x = {0.2, 0.4, 0.6, 0.8, 0.1, 0.3};
  const ExtensionConfig a{ExtensionMode::kMonteCarlo, 200, 5};
  const ExtensionConfig b{ExtensionMode::kMonteCarlo, 200, 6};
  EXPECT_EQ(MultilinearValue(inst.f(), x, a), MultilinearValue(inst.f(), x, a));
  EXPECT_EQ(MultilinearGrad(inst.f(), x, a), MultilinearGrad(inst.f(), x, a));
  EXPECT_NE(MultilinearValue(inst.f(), x, a), MultilinearValue(inst.f(), x, b));
}

TEST(MultilinearTest, InputValidation) {
  EXPECT_THROW(SelectionVector({1.1}), std::domain_error);
  EXPECT_THROW(SelectionVector({-0.5}), std::domain_error);
  EXPECT_EQ(SelectionVector({1 + 1e-10})[0], 1.0);
  EXPECT_EQ(SelectionVector({-1e-10})[0], 0.0);
  EXPECT_THROW(MultilinearValue(kTable, std::vector<double>{0.5, 0.5}),
               std::invalid_argument);
  const ExtensionConfig bad{ExtensionMode::kMonteCarlo, 0, 0};
  EXPECT_THROW(MultilinearValue(kTable, std::vector<double>{0, 0, 0}, bad),
               std::invalid_argument);
}

}  // namespace
}  // namespace diffsub
