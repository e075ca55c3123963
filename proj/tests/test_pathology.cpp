#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mumle/mumle.hpp"
#include "oracles.hpp"

namespace {

using namespace mumle;
using mumle::test::within_se;

ParameterPoint truth_for(FamilyId id, double psi = 1.0) {
  if (id == FamilyId::NormalMeanVar || id == FamilyId::NeymanScott) return {{0.0}, psi};
  if (id == FamilyId::ShiftedExponential) return {{2.0}, psi};
  return {{1.0}, psi};
}

TEST(Analytic, ParetoRateExample) {
  const auto mle = analytic_bias_variance(FamilyId::ParetoRate, EstimatorKind::MLE, 10, 2, 2.0);
  EXPECT_NEAR(mle.bias, 0.5, 1e-15);
  EXPECT_NEAR(mle.variance, 100.0 * 4.0 / (64.0 * 7.0), 1e-14);
  const auto mu = analytic_bias_variance(FamilyId::ParetoRate, EstimatorKind::MUMLE, 10, 2, 2.0);
  EXPECT_NEAR(mu.bias, 0.25, 1e-15);
  EXPECT_NEAR(mu.variance, 81.0 * 4.0 / (64.0 * 7.0), 1e-14);
}

TEST(Analytic, ParetoRateMomentsMatchQuadrature) {
  // psi_hat = c / Y with Y ~ Gamma(n - 1, rate psi).
  const double psi = 1.3;
  for (std::size_t n : {5u, 8u, 20u}) {
    for (auto kind : {EstimatorKind::MLE, EstimatorKind::MUMLE}) {
      const double c = kind == EstimatorKind::MLE ? double(n) : double(n - 1);
      const double scale = 1.0 / psi;
      const double e1 = mumle::test::gamma_expectation([&](double y) { return c / y; }, n - 1.0, scale);
      const double e2 =
          mumle::test::gamma_expectation([&](double y) { return c * c / (y * y); }, n - 1.0, scale);
      EXPECT_NEAR(analytic_bias(FamilyId::ParetoRate, kind, n, 2, psi), e1 - psi, 1e-8);
      EXPECT_NEAR(analytic_variance(FamilyId::ParetoRate, kind, n, 2, psi), e2 - e1 * e1, 1e-7);
    }
  }
}

TEST(Analytic, FinitenessThresholds) {
  EXPECT_THROW(analytic_bias(FamilyId::ParetoRate, EstimatorKind::MLE, 2, 2, 1.0), DomainError);
  EXPECT_THROW(analytic_variance(FamilyId::ParetoRate, EstimatorKind::MLE, 3, 2, 1.0), DomainError);
  EXPECT_NO_THROW(analytic_bias(FamilyId::ParetoRate, EstimatorKind::MLE, 3, 2, 1.0));
  EXPECT_THROW(analytic_bias(FamilyId::GammaTwoParam, EstimatorKind::MLE, 10, 2, 1.0),
               UnsupportedOperationError);
  EXPECT_THROW(analytic_bias(FamilyId::NormalMeanVar, EstimatorKind::Firth, 10, 2, 1.0),
               UnsupportedOperationError);
}

TEST(Analytic, MumleNeverWorseThanMle) {
  const FamilyId ids[] = {FamilyId::NormalMeanVar, FamilyId::NeymanScott,
                          FamilyId::ShiftedExponential, FamilyId::ParetoRate,
                          FamilyId::ParetoScaleParam};
  for (auto id : ids) {
    for (std::size_t n = 4; n <= 60; ++n) {
      const auto a = analytic_bias_variance(id, EstimatorKind::MLE, n, 3, 1.7);
      const auto b = analytic_bias_variance(id, EstimatorKind::MUMLE, n, 3, 1.7);
      EXPECT_LE(std::abs(b.bias), std::abs(a.bias));
      if (id == FamilyId::ParetoRate) {
        // Improvement ratio on the variance is ((n - 1) / n)^2.
        EXPECT_NEAR(b.variance / a.variance, std::pow((n - 1.0) / n, 2), 1e-12);
      }
    }
  }
}

TEST(Regularity, PassesAtTruth) {
  PathologyConfig c;
  c.family = FamilyId::ShiftedExponential;
  c.params = truth_for(c.family);
  c.replicates = 20'000;
  c.seed = 3;
  const auto r = check_regularity(c);
  EXPECT_TRUE(r.regularity_pass);
  EXPECT_FALSE(r.score_at_theta_hat.has_value());
}

TEST(Regularity, TooFewReplicates) {
  PathologyConfig c;
  c.family = FamilyId::NormalMeanVar;
  c.params = truth_for(c.family);
  c.replicates = 100;
  EXPECT_THROW(check_regularity(c), DomainError);
}

TEST(Pathology, GammaIsUnsupported) {
  PathologyConfig c;
  c.family = FamilyId::GammaTwoParam;
  c.params = {{2.0}, 1.0};
  c.replicates = 10'000;
  EXPECT_THROW(check_pathology(c), UnsupportedOperationError);
}

// Expected plugged-in score means, computed by quadrature over the law of Y.
double expected_pathology_mean(FamilyId id, std::size_t n, std::size_t m) {
  using mumle::test::gamma_expectation;
  const double nd = static_cast<double>(n);
  switch (id) {
    case FamilyId::NormalMeanVar:
      return mumle::test::chi_square_expectation([&](double y) { return (-nd + y) / 2.0; }, nd - 1);
    case FamilyId::NeymanScott: {
      const double total = nd * m;
      return mumle::test::chi_square_expectation([&](double y) { return (-total + y) / 2.0; },
                                                 nd * (m - 1.0));
    }
    case FamilyId::ShiftedExponential:
    case FamilyId::ParetoScaleParam:
      return gamma_expectation([&](double y) { return -nd + y; }, nd - 1, 1.0);
    case FamilyId::ParetoRate:
      return gamma_expectation([&](double y) { return nd - y; }, nd - 1, 1.0);
    default:
      return 0.0;
  }
}

TEST(Pathology, DetectedWithPredictedSignAndMagnitude) {
  const FamilyId ids[] = {FamilyId::NormalMeanVar, FamilyId::NeymanScott,
                          FamilyId::ShiftedExponential, FamilyId::ParetoRate,
                          FamilyId::ParetoScaleParam};
  for (auto id : ids) {
    PathologyConfig c;
    c.family = id;
    c.params = truth_for(id);
    c.n = 10;
    c.m = 2;
    c.replicates = 100'000;
    c.seed = 17;
    const auto r = check_pathology(c);
    EXPECT_TRUE(r.regularity_pass) << static_cast<int>(id);
    EXPECT_TRUE(r.pathology_detected) << static_cast<int>(id);
    EXPECT_EQ(r.pathology_sign, predicted_pathology_sign(id));
    EXPECT_TRUE(within_se(r.score_at_theta_hat->mean, expected_pathology_mean(id, c.n, c.m),
                          r.score_at_theta_hat->standard_error))
        << static_cast<int>(id) << " mean " << r.score_at_theta_hat->mean;
  }
}

TEST(Pathology, VanishesWithKnownTheta) {
  PathologyConfig c;
  c.family = FamilyId::NormalMeanVar;
  c.params = truth_for(c.family);
  c.replicates = 50'000;
  c.known_theta = true;
  const auto r = check_pathology(c);
  EXPECT_FALSE(r.pathology_detected);
  EXPECT_EQ(r.pathology_sign, 0);
}

// Closed-form moments against 10^6 simulated replicates.
TEST(Analytic, AgreesWithSimulation) {
  const FamilyId ids[] = {FamilyId::NormalMeanVar, FamilyId::NeymanScott,
                          FamilyId::ShiftedExponential, FamilyId::ParetoRate,
                          FamilyId::ParetoScaleParam};
  for (auto id : ids) {
    for (std::size_t n : {5u, 10u, 20u}) {
      ExperimentConfig c;
      c.family = id;
      c.true_params = truth_for(id, 1.5);
      c.n = n;
      c.m = 3;
      c.replicates = 1'000'000;
      c.seed = 2000 + 10 * static_cast<std::uint64_t>(id) + n;
      c.estimators = {{EstimatorKind::MLE}, {EstimatorKind::MUMLE}};
      const auto res = run_experiment(c);
      for (const auto& s : res.estimators) {
        const auto kind = s.spec.kind;
        EXPECT_TRUE(within_se(s.bias, analytic_bias(id, kind, n, c.m, 1.5), *s.bias_se))
            << s.label << " family " << int(id) << " n=" << n << " bias " << s.bias;
        // The fourth moment of 1/Y is infinite for n < 6, so the variance
        // standard error is meaningless there.
        if (id == FamilyId::ParetoRate && n < 6) continue;
        EXPECT_TRUE(within_se(*s.variance, analytic_variance(id, kind, n, c.m, 1.5),
                              *s.variance_se))
            << s.label << " family " << int(id) << " n=" << n << " variance " << *s.variance;
      }
    }
  }
}

}  // namespace
