//
// Copyright 2026 The dpacct Authors.
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
//

#include "dpacct/analytic_gdp.h"

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "gtest/gtest.h"

namespace dpacct {
namespace {

// Frozen 40-digit evaluations of Phi(-eps/mu + mu/2) - e^eps Phi(-eps/mu - mu/2).
constexpr double kDeltaMu1Eps1 = 0.12693673750664395;
constexpr double kDeltaMu1Eps0 = 0.38292492254802621;
// Frozen 40-digit inversions at delta = 1e-5.
constexpr double kEpsMu1 = 4.3771780956812246;
constexpr double kEpsSqrt500 = 0.81972833039812863;

// Extended-precision oracle built on Boost's erfc.
long double OraclePhi(long double x) {
  return boost::math::erfc(-x / std::sqrt(2.0L)) / 2;
}

double OracleDelta(double mu, double eps) {
  const long double m = mu, e = eps;
  return static_cast<double>(OraclePhi(-e / m + m / 2) -
                             std::exp(e) * OraclePhi(-e / m - m / 2));
}

TEST(GdpDeltaTest, PaperExamples) {
  EXPECT_NEAR(GdpDelta(1.0, 0.0), kDeltaMu1Eps0, 1e-15);
  EXPECT_NEAR(GdpDelta(1.0, 1.0), kDeltaMu1Eps1, 1e-15);
  EXPECT_EQ(GdpDelta(0.0, 2.0), 0.0);
  EXPECT_EQ(GdpDelta(0.0, 0.0), 0.0);
  EXPECT_NEAR(GdpDelta(0.0, -1.0), 1.0 - std::exp(-1.0), 1e-15);
}

TEST(GdpDeltaTest, MatchesExtendedPrecisionOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> um(0.01, 8.0), ue(0.0, 30.0);
  for (int i = 0; i < 5000; ++i) {
    const double mu = um(rng), eps = ue(rng);
    const double ref = OracleDelta(mu, eps);
    if (ref < 1e-250) continue;
    // The oracle itself cancels for tiny delta; compare relatively above
    // 1e-12 and absolutely below.
    EXPECT_NEAR(GdpDelta(mu, eps), ref, std::max(1e-9 * ref, 1e-18))
        << "mu=" << mu << " eps=" << eps;
  }
}

TEST(GdpDeltaTest, MonotoneInEpsAndMu) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> um(0.05, 5.0), ue(0.0, 15.0);
  for (int i = 0; i < 5000; ++i) {
    const double mu = um(rng);
    double e1 = ue(rng), e2 = ue(rng);
    if (e1 > e2) std::swap(e1, e2);
    const double d1 = GdpDelta(mu, e1), d2 = GdpDelta(mu, e2);
    EXPECT_GE(d1, d2);
    if (d2 > 1e-200 && e2 - e1 > 1e-6) EXPECT_GT(d1, d2);

    const double eps = ue(rng);
    double m1 = um(rng), m2 = um(rng);
    if (m1 > m2) std::swap(m1, m2);
    const double a = GdpDelta(m1, eps), b = GdpDelta(m2, eps);
    EXPECT_LE(a, b);
    if (a > 1e-200 && m2 - m1 > 1e-6) EXPECT_LT(a, b);
  }
}

TEST(GdpDeltaTest, InUnitInterval) {
  for (double mu : {1e-8, 0.1, 1.0, 10.0, 40.0}) {
    for (double eps : {0.0, 1e-6, 0.5, 5.0, 50.0, 500.0}) {
      const double d = GdpDelta(mu, eps);
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 1.0);
    }
  }
}

TEST(GdpEpsilonTest, Examples) {
  absl::StatusOr<double> eps = GdpEpsilon(1.0, 0.126936);
  ASSERT_TRUE(eps.ok());
  EXPECT_NEAR(*eps, 1.0, 1e-5);
  EXPECT_NEAR(*GdpEpsilon(1.0, kDeltaMu1Eps1), 1.0, 1e-9);
  EXPECT_NEAR(*GdpEpsilon(1.0, 1e-5), kEpsMu1, 1e-10);
  EXPECT_NEAR(*GdpEpsilon(std::sqrt(500.0) / 100.0, 1e-5), kEpsSqrt500, 1e-10);
  EXPECT_EQ(*GdpEpsilon(1e-9, 0.5), 0.0);
  EXPECT_EQ(*GdpEpsilon(0.0, 1e-5), 0.0);
}

TEST(GdpEpsilonTest, Errors) {
  EXPECT_EQ(GdpEpsilon(1.0, 1.0).status().code(),
            absl::StatusCode::kOutOfRange);
  EXPECT_EQ(GdpEpsilon(1.0, 2.0).status().code(),
            absl::StatusCode::kOutOfRange);
  EXPECT_EQ(GdpEpsilon(1.0, 0.0).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(GdpEpsilon(-1.0, 0.1).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(GdpEpsilonTest, RoundTrip) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> um(1e-3, 5.0), ue(0.0, 10.0);
  int checked = 0;
  for (int i = 0; i < 5000; ++i) {
    const double mu = um(rng), eps = ue(rng);
    const double delta = GdpDelta(mu, eps);
    if (delta < 1e-250) continue;  // not representable meaningfully
    absl::StatusOr<double> back = GdpEpsilon(mu, delta);
    ASSERT_TRUE(back.ok());
    EXPECT_NEAR(*back, eps, 1e-9) << "mu=" << mu << " eps=" << eps;
    // The returned epsilon always satisfies the target.
    EXPECT_LE(GdpDelta(mu, *back), delta);
    ++checked;
  }
  EXPECT_GT(checked, 4000);
}

TEST(GdpComposeTest, Examples) {
  EXPECT_DOUBLE_EQ(GdpCompose(std::vector<double>{3.0, 4.0}), 5.0);
  EXPECT_EQ(GdpCompose(std::vector<double>{}), 0.0);
  EXPECT_NEAR(GdpCompose(std::vector<double>(100, 0.1)), 1.0, 1e-14);
  const std::vector<GdpParam> params = {*GdpParam::Create(3.0),
                                        *GdpParam::Create(4.0)};
  EXPECT_DOUBLE_EQ(GdpCompose(params).mu(), 5.0);
}

TEST(GdpParamTest, Validation) {
  EXPECT_FALSE(GdpParam::Create(-0.1).ok());
  EXPECT_FALSE(GdpParam::Create(INFINITY).ok());
  EXPECT_FALSE(GdpParam::Create(NAN).ok());
  EXPECT_EQ(GdpParam::Zero().mu(), 0.0);
}

TEST(GdStepMuTest, Examples) {
  EXPECT_DOUBLE_EQ(GdStepMu(2.5, 5.0)->mu(), 0.5);
  EXPECT_EQ(GdStepMu(0.0, 5.0)->mu(), 0.0);
  EXPECT_DOUBLE_EQ(GdStepMu(1.0, 100.0)->mu(), 0.01);
  EXPECT_FALSE(GdStepMu(1.0, 0.0).ok());
  EXPECT_FALSE(GdStepMu(-1.0, 1.0).ok());
}

TEST(GdpCurveTest, IsValidProfile) {
  std::vector<double> eps;
  for (int i = 0; i <= 100; ++i) eps.push_back(0.1 * i);
  const EpsDeltaCurve curve = GdpCurve(1.5, eps);
  EXPECT_TRUE(curve.IsValid());
  ASSERT_EQ(curve.points.size(), eps.size());
  EXPECT_EQ(curve.points[10].delta, GdpDelta(1.5, 1.0));

  EpsDeltaCurve bad = curve;
  bad.points[5].delta = 2.0;
  EXPECT_FALSE(bad.IsValid());
  bad = curve;
  std::swap(bad.points[3].delta, bad.points[4].delta);
  EXPECT_FALSE(bad.IsValid());
}

}  // namespace
}  // namespace dpacct
