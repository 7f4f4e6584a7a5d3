#include <gtest/gtest.h>

#include "oracles.hpp"
#include "renoq/calibration.hpp"
#include "support.hpp"

using namespace renoq;
using support::make;

namespace {

CalibrationTarget target_of(const ModelParams& p) {
  const auto a = analyze(p);
  CalibrationTarget t;
  t.target_loss = a.loss.pi;
  t.target_mean_queue = a.mean_number();
  return t;
}

void expect_on_simplex(const std::vector<double>& q) {
  double s = 0.0;
  for (double v : q) {
    EXPECT_GE(v, 0.0);
    s += v;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
}

}  // namespace

TEST(Simplex, ProjectionExamples) {
  const std::vector<double> inside{0.2, 0.3, 0.5};
  const auto same = project_to_simplex(inside);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(same[i], inside[i], 1e-15);
  const std::vector<double> outside{2.0, -1.0, 0.0};
  EXPECT_EQ(project_to_simplex(outside), (std::vector<double>{1.0, 0.0, 0.0}));
  const std::vector<double> shifted{0.5, 0.5, 0.5};
  for (double v : project_to_simplex(shifted)) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Simplex, SoftmaxPinsFirstLogit) {
  const std::vector<double> zero{0.0, 0.0, 0.0};
  for (double v : softmax_simplex(zero)) EXPECT_NEAR(v, 0.25, 1e-15);
  const std::vector<double> huge{800.0, -800.0};
  const auto q = softmax_simplex(huge);
  EXPECT_NEAR(q[1], 1.0, 1e-15);
  expect_on_simplex(q);
}

TEST(Objective, ZeroAtSource) {
  const auto p = make(0.9, 1, {0.5, 0.2, 0.1, 0.1, 0.05, 0.05});
  EXPECT_EQ(calibration_objective(p, target_of(p)), 0.0);
}

TEST(Objective, ZeroTargetUsesAbsoluteScale) {
  auto p = make(0.9, 1, {0.5, 0.5});
  CalibrationTarget t;
  t.target_loss = 0.0;
  const double pi = analyze(p).loss.pi;
  EXPECT_NEAR(calibration_objective(p, t), pi * pi, 1e-15);
}

TEST(Calibrate, ValidatesInputs) {
  const auto base = make(1, 1, support::classic_q(3));
  CalibrationTarget none;
  EXPECT_THROW(calibrate(base, none, 100, SearchMethod::DirectSearch, 1), Error);
  CalibrationTarget t;
  t.target_loss = 0.1;
  EXPECT_THROW(calibrate(base, t, 9, SearchMethod::DirectSearch, 1), Error);
  t.target_loss = 1.5;
  EXPECT_THROW(calibrate(base, t, 100, SearchMethod::PSO, 1), Error);
  t.target_loss = 0.1;
  t.weight_loss = 0.0;
  t.weight_queue = 0.0;
  EXPECT_THROW(calibrate(base, t, 100, SearchMethod::PSO, 1), Error);
}

TEST(Calibrate, ClassicTargetNeedsNoRenovation) {
  const auto ref = oracle::classic_md1n(0.9, 1, 4);
  CalibrationTarget t;
  t.target_loss = ref.back();
  for (auto method : {SearchMethod::DirectSearch, SearchMethod::PSO}) {
    const auto res = calibrate(make(0.9, 1, support::classic_q(4)), t, 100, method, 3);
    EXPECT_LT(res.objective, 1e-14);
    EXPECT_FALSE(res.budget_exhausted);
  }
}

TEST(Calibrate, UnreachableTargetIsBestEffort) {
  CalibrationTarget t;
  t.target_loss = 1.0;
  for (auto method : {SearchMethod::DirectSearch, SearchMethod::PSO}) {
    const auto res = calibrate(make(0.9, 1, support::classic_q(3)), t, 120, method, 4);
    EXPECT_GT(res.objective, 0.0);
    EXPECT_TRUE(res.budget_exhausted);
    EXPECT_EQ(res.evaluations, 120);
    expect_on_simplex(res.q);
  }
}

TEST(Calibrate, RecoversTargetsOfKnownVector) {
  for (auto opt : {Option::Option1, Option::Option2}) {
    const auto source = make(0.9, 1, {0.5, 0.2, 0.1, 0.1, 0.05, 0.05}, opt);
    const auto t = target_of(source);
    for (auto method : {SearchMethod::DirectSearch, SearchMethod::PSO}) {
      for (std::uint64_t seed : {1, 2, 3}) {
        const auto res = calibrate(source, t, 500, method, seed);
        EXPECT_LE(res.objective, 1e-6) << to_string(opt) << " " << to_string(method) << " seed " << seed;
        EXPECT_LE(res.evaluations, 500);
      }
    }
  }
}

TEST(Calibrate, TraceIsConsistent) {
  const auto source = make(1.2, 1, {0.4, 0.3, 0.2, 0.1}, Option::Option2);
  const auto t = target_of(source);
  for (auto method : {SearchMethod::DirectSearch, SearchMethod::PSO}) {
    const auto res = calibrate(source, t, 200, method, 8);
    ASSERT_EQ(static_cast<int>(res.trace.size()), res.evaluations);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : res.trace) {
      expect_on_simplex(e.q);
      best = std::min(best, e.objective);
      EXPECT_EQ(e.best, best);
    }
    EXPECT_EQ(res.objective, best);
    auto p = source;
    p.q = res.q;
    EXPECT_EQ(calibration_objective(p, t), res.objective);
  }
}

TEST(Calibrate, DeterministicGivenSeed) {
  const auto source = make(0.8, 1, {0.6, 0.2, 0.1, 0.1});
  const auto t = target_of(source);
  for (auto method : {SearchMethod::DirectSearch, SearchMethod::PSO}) {
    const auto a = calibrate(source, t, 150, method, 5);
    const auto b = calibrate(source, t, 150, method, 5);
    EXPECT_EQ(a.q, b.q);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.evaluations, b.evaluations);
  }
}
