#include "mumle/estimators.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "mumle/errors.hpp"
#include "optimize.hpp"

namespace mumle {
namespace {

constexpr int kMaxDoublings = 60;

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// log |I| = const - q log psi for every closed-form family; returns q.
double information_psi_power(const ModelFamily& family, std::size_t groups) {
  return family.id == FamilyId::NeymanScott ? static_cast<double>(groups) + 1.0 : 2.0;
}

double combine_objective(const PriorSpec& prior, double log_lik, double log_det,
                         const ParameterPoint& params) {
  switch (prior.kind) {
    case PriorSpec::Kind::FirthInformation:
      return log_lik + 0.5 * log_det;
    case PriorSpec::Kind::Flat:
      return log_lik - 0.5 * log_det;
    case PriorSpec::Kind::PsiPowerLaw:
      return prior.exponent * std::log(params.psi) + log_lik - 0.5 * log_det;
    case PriorSpec::Kind::Custom:
      return prior.log_prior(params) + log_lik - 0.5 * log_det;
  }
  return log_lik;
}

// d/dpsi of combine_objective given d log f and d log |I|.
double combine_derivative(const PriorSpec& prior, double score, double d_log_det,
                          const ParameterPoint& params) {
  switch (prior.kind) {
    case PriorSpec::Kind::FirthInformation:
      return score + 0.5 * d_log_det;
    case PriorSpec::Kind::Flat:
      return score - 0.5 * d_log_det;
    case PriorSpec::Kind::PsiPowerLaw:
      return prior.exponent / params.psi + score - 0.5 * d_log_det;
    case PriorSpec::Kind::Custom: {
      const double h = 1e-6 * params.psi;
      ParameterPoint up = params, down = params;
      up.psi += h;
      down.psi -= h;
      const double d_prior = (prior.log_prior(up) - prior.log_prior(down)) / (2.0 * h);
      return d_prior + score - 0.5 * d_log_det;
    }
  }
  return score;
}

void check_prior(const PriorSpec& prior) {
  if (prior.kind == PriorSpec::Kind::Custom && !prior.log_prior) {
    throw DomainError("custom prior without a log-prior function");
  }
  if (prior.kind == PriorSpec::Kind::PsiPowerLaw && !std::isfinite(prior.exponent)) {
    throw DomainError("power-law prior exponent must be finite");
  }
}

void check_info_params(const ModelFamily& family, std::size_t data_size,
                       const ParameterPoint& params) {
  if (data_size == 0) throw DataShapeError("information for an empty sample");
  if (!(params.psi > 0.0) || !std::isfinite(params.psi)) {
    throw DomainError("information requires psi > 0");
  }
  if (params.theta.empty()) throw DomainError("missing nuisance parameter");
  if ((family.id == FamilyId::GammaTwoParam || family.id == FamilyId::ParetoRate ||
       family.id == FamilyId::ParetoScaleParam) &&
      !(params.theta[0] > 0.0)) {
    throw DomainError("theta must be positive");
  }
}

FisherInfo from_log_det(double log_det, FisherInfo::Source source) {
  if (!std::isfinite(log_det)) throw SingularityError("information determinant is not finite");
  return {std::exp(log_det), log_det, source};
}

// E z and E log z for z ~ Gamma(shape, 1), by stratified inverse-CDF sampling:
// one uniform draw inside each of `samples` equal-probability strata.
struct GammaStdMoments {
  double mean_z = 0.0;
  double mean_log_z = 0.0;
};

GammaStdMoments gamma_standard_moments(double shape, const FisherOptions& options) {
  if (options.samples == 0) throw DomainError("information needs at least one sample");
  std::mt19937_64 gen(options.seed);
  const double strata = static_cast<double>(options.samples);
  double sz = 0.0, slog = 0.0;
  for (std::size_t i = 0; i < options.samples; ++i) {
    const double u01 = (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
    const double p = (static_cast<double>(i) + u01) / strata;
    const double z = boost::math::gamma_p_inv(shape, p);
    sz += z;
    slog += std::log(z);
  }
  return {sz / strata, slog / strata};
}

// Negative finite-difference Hessian of the expected log-likelihood of n
// observations, expectation taken under (shape, scale).
FisherInfo gamma_fd_information(double shape, double scale, std::size_t n,
                                const GammaStdMoments& moments) {
  const double mean_x = scale * moments.mean_z;
  const double mean_log_x = moments.mean_log_z + std::log(scale);
  auto ell = [&](double a, double b) {
    return -boost::math::lgamma(a) - a * std::log(b) + (a - 1.0) * mean_log_x - mean_x / b;
  };
  const double ha = 2e-4 * (1.0 + shape);
  const double hb = 2e-4 * scale;
  const double f0 = ell(shape, scale);
  const double faa = (ell(shape + ha, scale) - 2.0 * f0 + ell(shape - ha, scale)) / (ha * ha);
  const double fbb = (ell(shape, scale + hb) - 2.0 * f0 + ell(shape, scale - hb)) / (hb * hb);
  const double fab = (ell(shape + ha, scale + hb) - ell(shape + ha, scale - hb) -
                      ell(shape - ha, scale + hb) + ell(shape - ha, scale - hb)) /
                     (4.0 * ha * hb);
  const double nn = static_cast<double>(n);
  const double det_per_obs = faa * fbb - fab * fab;
  if (!(det_per_obs > 0.0)) {
    throw SingularityError("finite-difference Gamma information is not positive definite");
  }
  return from_log_det(2.0 * std::log(nn) + std::log(det_per_obs),
                      FisherInfo::Source::FiniteDifference);
}

double sample_mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_var(std::span<const double> xs) {
  const double m = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size());
}

// Joint maximization over (shape, scale) for GammaTwoParam: golden section on
// the profile in shape, with the scale optimized in an inner 1-D search.
// `objective(shape, scale)` and the optional `scale_derivative`.
EstimateReport gamma_profile_maximize(
    const DataSet& data, EstimatorKind kind,
    const std::function<double(double, double)>& objective,
    const std::function<double(double, double)>& scale_derivative, const MmlOptions& options) {
  const auto xs = data.values();
  const double xbar = sample_mean(xs);
  const double var = sample_var(xs);
  if (!(var > 0.0)) throw DegenerateSampleError("degenerate sample: all observations are equal");
  const double shape_hint = xbar * xbar / var;
  const double scale_hint = var / xbar;

  std::size_t iterations = 0;
  auto inner = [&](double shape) {
    std::function<double(double)> f = [&](double scale) { return objective(shape, scale); };
    std::function<double(double)> df;
    if (scale_derivative) df = [&](double scale) { return scale_derivative(shape, scale); };
    // The profile scale tracks xbar / shape; start there.
    const double hint = std::isfinite(xbar / shape) ? xbar / shape : scale_hint;
    auto r = detail::maximize_positive(f, df, hint, 1e-10, options.max_iterations);
    iterations += r.iterations;
    return r;
  };
  auto outer = detail::maximize_positive([&](double shape) { return inner(shape).value; }, {},
                                         shape_hint, 1e-9, options.max_iterations);
  const auto best = inner(outer.argmax);

  EstimateReport report;
  report.estimator = kind;
  report.value = best.argmax;
  report.theta = {outer.argmax};
  report.iterations = iterations + outer.iterations;
  report.converged = true;
  report.objective_at_solution = best.value;
  report.gradient_at_solution = best.gradient;
  return report;
}

EstimateReport gamma_mml(const DataSet& data, const PriorSpec& prior, const MmlOptions& options,
                         EstimatorKind kind) {
  const auto& family = ModelFamily::of(FamilyId::GammaTwoParam);
  validate_data(family, data);
  double cached_shape = std::numeric_limits<double>::quiet_NaN();
  GammaStdMoments moments;
  auto objective = [&](double shape, double scale) {
    if (shape != cached_shape) {
      moments = gamma_standard_moments(shape, options.fisher);
      cached_shape = shape;
    }
    const ParameterPoint p{{shape}, scale};
    const double log_det = gamma_fd_information(shape, scale, data.size(), moments).log_determinant;
    return combine_objective(prior, log_likelihood(family, data, p), log_det, p);
  };
  return gamma_profile_maximize(data, kind, objective, {}, options);
}

EstimateReport closed_form_mml(const ModelFamily& family, const DataSet& data,
                               const PriorSpec& prior, const MmlOptions& options,
                               EstimatorKind kind) {
  validate_data(family, data);
  const auto theta_hat = nuisance_mle(family, data);
  const double hint = moment_hint(family, data);
  const double q = information_psi_power(family, theta_hat.size());

  auto f = [&](double psi) {
    return mml87_objective(family, data, prior, ParameterPoint{theta_hat, psi}, options);
  };
  auto df = [&](double psi) {
    const ParameterPoint p{theta_hat, psi};
    return combine_derivative(prior, psi_score(family, data, p), -q / psi, p);
  };
  const auto r = detail::maximize_positive(f, df, hint, options.log_width_tolerance,
                                           options.max_iterations);
  EstimateReport report;
  report.estimator = kind;
  report.value = r.argmax;
  report.theta = theta_hat;
  report.iterations = r.iterations;
  report.converged = true;
  report.objective_at_solution = r.value;
  report.gradient_at_solution = r.gradient;
  return report;
}

EstimateReport scalar_mml(const ScalarModel& model, const PriorSpec& prior,
                          const MmlOptions& options, EstimatorKind kind) {
  check_prior(prior);
  if (!model.log_likelihood || !model.log_information) {
    throw DomainError("scalar model needs log_likelihood and log_information");
  }
  auto f = [&](double psi) {
    return combine_objective(prior, model.log_likelihood(psi), model.log_information(psi),
                             ParameterPoint{{}, psi});
  };
  std::function<double(double)> df;
  if (model.score && model.d_log_information) {
    df = [&](double psi) {
      return combine_derivative(prior, model.score(psi), model.d_log_information(psi),
                                ParameterPoint{{}, psi});
    };
  }
  const auto r =
      detail::maximize_positive(f, df, model.hint, options.log_width_tolerance, options.max_iterations);
  EstimateReport report;
  report.estimator = kind;
  report.value = r.argmax;
  report.iterations = r.iterations;
  report.converged = true;
  report.objective_at_solution = r.value;
  report.gradient_at_solution = r.gradient;
  return report;
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::MLE:
      return "MLE";
    case EstimatorKind::MUMLE:
      return "MUMLE";
    case EstimatorKind::MML87:
      return "MML87";
    case EstimatorKind::Firth:
      return "Firth";
  }
  return "?";
}

std::string PriorSpec::label() const {
  switch (kind) {
    case Kind::FirthInformation:
      return "firth";
    case Kind::Flat:
      return "flat";
    case Kind::PsiPowerLaw:
      return "psi-power:" + format_number(exponent);
    case Kind::Custom:
      return "custom";
  }
  return "?";
}

std::optional<PriorSpec> PriorSpec::parse(std::string_view text) {
  if (text == "firth") return firth();
  if (text == "flat") return flat();
  constexpr std::string_view prefix = "psi-power:";
  if (text.starts_with(prefix)) {
    text.remove_prefix(prefix.size());
    double e = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), e);
    if (ec == std::errc{} && ptr == text.data() + text.size() && std::isfinite(e)) {
      return psi_power(e);
    }
  }
  return std::nullopt;
}

std::string EstimatorSpec::label() const {
  if (kind == EstimatorKind::MML87) return "MML87[" + prior.label() + "]";
  return std::string(to_string(kind));
}

double solve_score_root(const std::function<double(double)>& score, double bracket_hint,
                        double tol) {
  if (!(bracket_hint > 0.0) || !std::isfinite(bracket_hint)) {
    throw DomainError("bracket hint must be a finite positive number");
  }
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  auto eval = [&](double psi) {
    const double s = score(psi);
    if (!std::isfinite(s)) {
      throw NumericError("score is not finite at psi = " + format_number(psi));
    }
    return s;
  };

  const double s0 = eval(bracket_hint);
  if (s0 == 0.0) return bracket_hint;

  double a = 0.0, b = 0.0, sa = 0.0;
  bool found = false;
  double prev_lo = bracket_hint, prev_hi = bracket_hint;
  double s_prev_lo = s0, s_prev_hi = s0;
  for (int k = 1; k <= kMaxDoublings && !found; ++k) {
    const double lo = bracket_hint * std::ldexp(1.0, -k);
    const double hi = bracket_hint * std::ldexp(1.0, k);
    const double s_lo = eval(lo);
    const double s_hi = eval(hi);
    if (std::signbit(s_lo) != std::signbit(s_prev_lo) || s_lo == 0.0) {
      a = lo, b = prev_lo, sa = s_lo, found = true;
    } else if (s_hi == 0.0) {
      return hi;
    } else if (std::signbit(s_hi) != std::signbit(s_prev_hi)) {
      a = prev_hi, b = hi, sa = s_prev_hi, found = true;
    }
    prev_lo = lo, s_prev_lo = s_lo;
    prev_hi = hi, s_prev_hi = s_hi;
  }
  if (!found) {
    throw BracketingError("no sign change of the score within 2^" + std::to_string(kMaxDoublings) +
                          " of " + format_number(bracket_hint));
  }
  if (sa == 0.0) return a;

  double best = a, s_best = sa;
  while (true) {
    const double m = 0.5 * (a + b);
    if (!(m > a && m < b)) break;
    const double sm = eval(m);
    if (std::abs(sm) < std::abs(s_best)) best = m, s_best = sm;
    if (sm == 0.0) return m;
    if (std::signbit(sm) == std::signbit(sa)) {
      a = m, sa = sm;
    } else {
      b = m;
    }
    if (b - a <= tol * (1.0 + m) && std::abs(sm) <= tol) return m;
  }
  if (std::abs(s_best) <= tol) return best;
  throw NumericError("score does not vanish to " + format_number(tol) +
                     " at machine precision (|score| = " + format_number(std::abs(s_best)) + ")");
}

FisherInfo fisher_information_determinant(const ModelFamily& family, std::size_t data_size,
                                          const ParameterPoint& params,
                                          const FisherOptions& options) {
  check_info_params(family, data_size, params);
  const double n = static_cast<double>(data_size);
  const double log_psi = std::log(params.psi);
  switch (family.id) {
    case FamilyId::NormalMeanVar:
      return from_log_det(std::log(2.0 * n * n) - 2.0 * log_psi, FisherInfo::Source::ClosedForm);
    case FamilyId::NeymanScott: {
      const std::size_t groups = params.theta.size();
      if (data_size % groups != 0) {
        throw DataShapeError("sample size is not a multiple of the group count");
      }
      const double g = static_cast<double>(groups);
      const double m = n / g;
      return from_log_det(std::log(2.0 * g * m) + g * std::log(m) - (g + 1.0) * log_psi,
                          FisherInfo::Source::ClosedForm);
    }
    case FamilyId::ShiftedExponential:
    case FamilyId::ParetoRate:
    case FamilyId::ParetoScaleParam:
      return from_log_det(std::log(n) - 2.0 * log_psi, FisherInfo::Source::ClosedForm);
    case FamilyId::GammaTwoParam:
      return gamma_fd_information(params.theta[0], params.psi, data_size,
                                  gamma_standard_moments(params.theta[0], options));
  }
  throw UnsupportedOperationError("unknown family");
}

double mml87_objective(const ModelFamily& family, const DataSet& data, const PriorSpec& prior,
                       const ParameterPoint& params, const MmlOptions& options) {
  check_prior(prior);
  const double log_lik = log_likelihood(family, data, params);
  const double log_det =
      fisher_information_determinant(family, data.size(), params, options.fisher).log_determinant;
  return combine_objective(prior, log_lik, log_det, params);
}

EstimateReport mml87_estimate(const ModelFamily& family, const DataSet& data,
                              const PriorSpec& prior, const MmlOptions& options) {
  check_prior(prior);
  if (family.id == FamilyId::GammaTwoParam) {
    return gamma_mml(data, prior, options, EstimatorKind::MML87);
  }
  return closed_form_mml(family, data, prior, options, EstimatorKind::MML87);
}

EstimateReport mml87_estimate(const ScalarModel& model, const PriorSpec& prior,
                              const MmlOptions& options) {
  return scalar_mml(model, prior, options, EstimatorKind::MML87);
}

EstimateReport firth_corrected_estimate(const ModelFamily& family, const DataSet& data,
                                        const MmlOptions& options) {
  auto report = mml87_estimate(family, data, PriorSpec::firth(), options);
  report.estimator = EstimatorKind::Firth;
  return report;
}

EstimateReport firth_corrected_estimate(const ScalarModel& model, const MmlOptions& options) {
  return scalar_mml(model, PriorSpec::firth(), options, EstimatorKind::Firth);
}

double decomposition_phi_exponent(const ModelFamily& family, const DataSet& data) {
  switch (family.id) {
    case FamilyId::NormalMeanVar:
      return -0.5;
    case FamilyId::NeymanScott:
      return -0.5 * static_cast<double>(data.group_count());
    case FamilyId::ShiftedExponential:
    case FamilyId::ParetoScaleParam:
      return -1.0;
    case FamilyId::ParetoRate:
      return 1.0;
    case FamilyId::GammaTwoParam:
      break;
  }
  throw UnsupportedOperationError(std::string(family.name) +
                                  " declares no decomposition factor phi");
}

PriorSpec mumle_matching_prior(const ModelFamily& family, const DataSet& data) {
  const double e = decomposition_phi_exponent(family, data);
  const double q = information_psi_power(family, data.group_count());
  return PriorSpec::psi_power(-0.5 * q - e);
}

double decomposition_residual(const ModelFamily& family, const DataSet& data,
                                    std::span<const double> psi_grid,
                                    std::optional<double> phi_exponent) {
  const double e = phi_exponent ? *phi_exponent : decomposition_phi_exponent(family, data);
  if (psi_grid.size() < 3) throw DomainError("decomposition check needs at least 3 grid points");
  const auto stat = updated_statistic(family, data);
  const auto theta_hat = nuisance_mle(family, data);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double psi : psi_grid) {
    const double r = log_likelihood(family, data, ParameterPoint{theta_hat, psi}) -
                     y_log_likelihood(stat, psi) - e * std::log(psi);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi - lo;
}

EstimateReport estimate(const ModelFamily& family, const DataSet& data, const EstimatorSpec& spec,
                        const MmlOptions& options) {
  switch (spec.kind) {
    case EstimatorKind::MLE: {
      if (family.id == FamilyId::GammaTwoParam) {
        validate_data(family, data);
        auto objective = [&](double shape, double scale) {
          return log_likelihood(family, data, ParameterPoint{{shape}, scale});
        };
        auto derivative = [&](double shape, double scale) {
          return psi_score(family, data, ParameterPoint{{shape}, scale});
        };
        return gamma_profile_maximize(data, EstimatorKind::MLE, objective, derivative, options);
      }
      EstimateReport r;
      r.estimator = EstimatorKind::MLE;
      r.value = psi_mle(family, data);
      r.theta = nuisance_mle(family, data);
      r.converged = true;
      const ParameterPoint p{r.theta, r.value};
      r.objective_at_solution = log_likelihood(family, data, p);
      r.gradient_at_solution = psi_score(family, data, p);
      return r;
    }
    case EstimatorKind::MUMLE: {
      if (!family.closed_form) {
        throw UnsupportedOperationError("MUMLE needs an updated-statistic model, unavailable for " +
                                        std::string(family.name));
      }
      EstimateReport r;
      r.estimator = EstimatorKind::MUMLE;
      const auto stat = updated_statistic(family, data);
      r.value = psi_mumle(family, data);
      r.theta = nuisance_mle(family, data);
      r.converged = true;
      r.objective_at_solution = y_log_likelihood(stat, r.value);
      r.gradient_at_solution = y_score(stat, r.value);
      return r;
    }
    case EstimatorKind::MML87:
      return mml87_estimate(family, data, spec.prior, options);
    case EstimatorKind::Firth:
      return firth_corrected_estimate(family, data, options);
  }
  throw UnsupportedOperationError("unknown estimator");
}

}  // namespace mumle
