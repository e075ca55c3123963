#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "mumle/estimators.hpp"
#include "mumle/models.hpp"

namespace mumle {

// Significance rule shared by every Monte Carlo check.
inline constexpr double kSignificanceSe = 4.0;
inline constexpr std::size_t kMinPathologyReplicates = 10'000;

struct BiasVariance {
  double bias = 0.0;
  double variance = 0.0;
};

// Exact finite-sample bias and variance of the closed-form MLE and MUMLE.
// n is the sample size (number of groups for NeymanScott), m the group size.
// Throws DomainError naming the moment when n is below its finiteness
// threshold (ParetoRate: bias needs n >= 3, variance n >= 4), and
// UnsupportedOperationError for GammaTwoParam or other estimators.
double analytic_bias(FamilyId family, EstimatorKind estimator, std::size_t n, std::size_t m,
                     double psi);
double analytic_variance(FamilyId family, EstimatorKind estimator, std::size_t n, std::size_t m,
                         double psi);
BiasVariance analytic_bias_variance(FamilyId family, EstimatorKind estimator, std::size_t n,
                                    std::size_t m, double psi);

struct MeanWithError {
  double mean = 0.0;
  double standard_error = 0.0;
};

struct PathologyConfig {
  FamilyId family = FamilyId::NormalMeanVar;
  ParameterPoint params;
  std::size_t n = 10;
  std::size_t m = 2;
  std::size_t replicates = 100'000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  // Evaluate the "plugged-in" score at the true theta instead of theta_hat.
  bool known_theta = false;
};

struct PathologyReport {
  MeanWithError score_at_true_theta;
  std::optional<MeanWithError> score_at_theta_hat;
  bool regularity_pass = false;
  bool pathology_detected = false;
  // Sign of the plugged-in mean score when detected, 0 otherwise.
  int pathology_sign = 0;
  std::size_t replicates = 0;
};

// Sign of E U_psi(x | theta_hat, psi) implied by the score's structure:
// negative for the linear-score families, positive for ParetoRate.
int predicted_pathology_sign(FamilyId family);

// Monte Carlo mean of the psi-score at the true parameters; passes when
// |mean| <= 4 SE.
PathologyReport check_regularity(const PathologyConfig& config);

// check_regularity plus the mean score at (theta_hat(x), psi_true);
// pathology is detected when |mean| > 4 SE.
PathologyReport check_pathology(const PathologyConfig& config);

}  // namespace mumle
