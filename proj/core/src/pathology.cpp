#include "mumle/pathology.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "mumle/errors.hpp"
#include "mumle/montecarlo.hpp"

namespace mumle {
namespace {

void require_n(bool ok, const char* moment, const char* requirement) {
  if (!ok) {
    throw DomainError(std::string(moment) + " is infinite or undefined unless " + requirement);
  }
}

void require_estimator(EstimatorKind estimator) {
  if (estimator != EstimatorKind::MLE && estimator != EstimatorKind::MUMLE) {
    throw UnsupportedOperationError("no closed-form bias/variance for " +
                                    std::string(to_string(estimator)));
  }
}

MeanWithError summarize(const std::vector<double>& values) {
  CompensatedSum total;
  for (double v : values) total.add(v);
  const double r = static_cast<double>(values.size());
  const double mean = total.value() / r;
  CompensatedSum sq;
  for (double v : values) sq.add((v - mean) * (v - mean));
  const double var = values.size() > 1 ? sq.value() / (r - 1.0) : 0.0;
  return {mean, std::sqrt(var / r)};
}

bool significant(const MeanWithError& m) {
  return std::abs(m.mean) > kSignificanceSe * m.standard_error;
}

struct ScoreSamples {
  std::vector<double> at_truth;
  std::vector<double> at_hat;
};

ScoreSamples simulate_scores(const PathologyConfig& config, bool with_hat) {
  const auto& family = ModelFamily::of(config.family);
  if (config.replicates < kMinPathologyReplicates) {
    throw DomainError("pathology checks need at least " + std::to_string(kMinPathologyReplicates) +
                      " replicates");
  }
  if (with_hat && !family.closed_form) {
    throw UnsupportedOperationError("pathology check needs a closed-form nuisance MLE; " +
                                    std::string(family.name) + " has none");
  }
  ParameterPoint truth = config.params;
  if (family.id == FamilyId::NeymanScott && truth.theta.size() == 1) {
    truth.theta.assign(config.n, truth.theta[0]);
  }

  ScoreSamples out;
  out.at_truth.resize(config.replicates);
  if (with_hat) out.at_hat.resize(config.replicates);
  parallel_for_index(config.replicates, config.threads, [&](std::size_t i) {
    auto rng = substream(config.seed, i);
    const DataSet data = sample(family, truth, config.n, config.m, rng);
    out.at_truth[i] = psi_score(family, data, truth);
    if (with_hat) {
      const ParameterPoint plugged{config.known_theta ? truth.theta : nuisance_mle(family, data),
                                   truth.psi};
      out.at_hat[i] = psi_score(family, data, plugged);
    }
  });
  return out;
}

}  // namespace

double analytic_bias(FamilyId family, EstimatorKind estimator, std::size_t n_count,
                     std::size_t m_count, double psi) {
  require_estimator(estimator);
  const bool mle = estimator == EstimatorKind::MLE;
  const double n = static_cast<double>(n_count);
  const double m = static_cast<double>(m_count);
  switch (family) {
    case FamilyId::NormalMeanVar:
    case FamilyId::ShiftedExponential:
    case FamilyId::ParetoScaleParam:
      require_n(n_count >= 2, "bias", "n >= 2");
      return mle ? -psi / n : 0.0;
    case FamilyId::NeymanScott:
      require_n(n_count >= 1 && m_count >= 2, "bias", "n >= 1 and m >= 2");
      return mle ? -psi / m : 0.0;
    case FamilyId::ParetoRate:
      require_n(n_count >= 3, "bias", "n >= 3");
      return (mle ? 2.0 : 1.0) * psi / (n - 2.0);
    case FamilyId::GammaTwoParam:
      break;
  }
  throw UnsupportedOperationError("no closed-form bias for GammaTwoParam");
}

double analytic_variance(FamilyId family, EstimatorKind estimator, std::size_t n_count,
                         std::size_t m_count, double psi) {
  require_estimator(estimator);
  const bool mle = estimator == EstimatorKind::MLE;
  const double n = static_cast<double>(n_count);
  const double m = static_cast<double>(m_count);
  const double psi2 = psi * psi;
  switch (family) {
    case FamilyId::NormalMeanVar:
      // Y = psi chi2_{n-1}; Var(Y / c) = 2 (n - 1) psi^2 / c^2.
      require_n(n_count >= 2, "variance", "n >= 2");
      return mle ? 2.0 * (n - 1.0) * psi2 / (n * n) : 2.0 * psi2 / (n - 1.0);
    case FamilyId::NeymanScott: {
      require_n(n_count >= 1 && m_count >= 2, "variance", "n >= 1 and m >= 2");
      const double k = n * (m - 1.0);
      return mle ? 2.0 * k * psi2 / (n * m * n * m) : 2.0 * psi2 / k;
    }
    case FamilyId::ShiftedExponential:
    case FamilyId::ParetoScaleParam:
      // Y ~ Gamma(n - 1, scale psi); Var(Y / c) = (n - 1) psi^2 / c^2.
      require_n(n_count >= 2, "variance", "n >= 2");
      return mle ? (n - 1.0) * psi2 / (n * n) : psi2 / (n - 1.0);
    case FamilyId::ParetoRate: {
      require_n(n_count >= 4, "variance", "n >= 4");
      const double c = mle ? n : n - 1.0;
      return c * c * psi2 / ((n - 2.0) * (n - 2.0) * (n - 3.0));
    }
    case FamilyId::GammaTwoParam:
      break;
  }
  throw UnsupportedOperationError("no closed-form variance for GammaTwoParam");
}

BiasVariance analytic_bias_variance(FamilyId family, EstimatorKind estimator, std::size_t n,
                                    std::size_t m, double psi) {
  return {analytic_bias(family, estimator, n, m, psi),
          analytic_variance(family, estimator, n, m, psi)};
}

int predicted_pathology_sign(FamilyId family) {
  switch (family) {
    case FamilyId::NormalMeanVar:
    case FamilyId::NeymanScott:
    case FamilyId::ShiftedExponential:
    case FamilyId::ParetoScaleParam:
      return -1;
    case FamilyId::ParetoRate:
      return 1;
    case FamilyId::GammaTwoParam:
      break;
  }
  return 0;
}

PathologyReport check_regularity(const PathologyConfig& config) {
  const auto samples = simulate_scores(config, false);
  PathologyReport report;
  report.replicates = config.replicates;
  report.score_at_true_theta = summarize(samples.at_truth);
  report.regularity_pass = !significant(report.score_at_true_theta);
  return report;
}

PathologyReport check_pathology(const PathologyConfig& config) {
  const auto samples = simulate_scores(config, true);
  PathologyReport report;
  report.replicates = config.replicates;
  report.score_at_true_theta = summarize(samples.at_truth);
  report.regularity_pass = !significant(report.score_at_true_theta);
  report.score_at_theta_hat = summarize(samples.at_hat);
  report.pathology_detected = significant(*report.score_at_theta_hat);
  if (report.pathology_detected) report.pathology_sign = report.score_at_theta_hat->mean < 0 ? -1 : 1;
  return report;
}

}  // namespace mumle
