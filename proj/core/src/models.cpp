#include "mumle/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "mumle/errors.hpp"

namespace mumle {
namespace {

constexpr std::array<ModelFamily, 6> kFamilies{{
    {FamilyId::NormalMeanVar, "NormalMeanVar", "normal", false, 2, true, true},
    {FamilyId::NeymanScott, "NeymanScott", "neyman-scott", true, 1, true, true},
    {FamilyId::ShiftedExponential, "ShiftedExponential", "shifted-exponential", false, 2,
     true, true},
    {FamilyId::ParetoRate, "ParetoRate", "pareto-rate", false, 2, true, false},
    {FamilyId::ParetoScaleParam, "ParetoScaleParam", "pareto-scale", false, 2, true, true},
    {FamilyId::GammaTwoParam, "GammaTwoParam", "gamma", false, 2, false, false},
}};

constexpr double kInf = std::numeric_limits<double>::infinity();

double sum(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

double mean(std::span<const double> xs) { return sum(xs) / static_cast<double>(xs.size()); }

double sum_sq_dev(std::span<const double> xs, double centre) {
  double s = 0.0;
  for (double x : xs) {
    const double d = x - centre;
    s += d * d;
  }
  return s;
}

double minimum(std::span<const double> xs) { return *std::min_element(xs.begin(), xs.end()); }

double sum_log_ratio(std::span<const double> xs, double scale) {
  double s = 0.0;
  for (double x : xs) s += std::log(x / scale);
  return s;
}

double sum_log(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += std::log(x);
  return s;
}

bool violates_lower_support(std::span<const double> xs, double theta) {
  return std::any_of(xs.begin(), xs.end(), [theta](double x) { return x < theta; });
}

// Sum of squared deviations from the supplied (per-group) centres.
double normal_d(const ModelFamily& family, const DataSet& data, std::span<const double> theta) {
  if (family.id == FamilyId::NormalMeanVar) return sum_sq_dev(data.values(), theta[0]);
  double d = 0.0;
  for (std::size_t i = 0; i < data.group_count(); ++i) d += sum_sq_dev(data.group(i), theta[i]);
  return d;
}

std::size_t sample_count(const ModelFamily& family, const DataSet& data) {
  return family.grouped ? data.group_count() : data.size();
}

void require_psi(double psi) {
  if (!(psi > 0.0) || !std::isfinite(psi)) {
    throw DomainError("psi must be a finite positive number, got " + std::to_string(psi));
  }
}

void require_closed_form(const ModelFamily& family, const char* what) {
  if (!family.closed_form) {
    throw UnsupportedOperationError(std::string(what) + " is not available for " +
                                    std::string(family.name));
  }
}

}  // namespace

const ModelFamily& ModelFamily::of(FamilyId id) {
  return kFamilies[static_cast<std::size_t>(id)];
}

std::span<const ModelFamily> ModelFamily::all() { return kFamilies; }

std::optional<FamilyId> ModelFamily::parse(std::string_view cli_name) {
  for (const auto& f : kFamilies) {
    if (f.cli_name == cli_name || f.name == cli_name) return f.id;
  }
  return std::nullopt;
}

DataSet DataSet::flat(std::vector<double> observations) {
  return DataSet(false, observations.size(), std::move(observations));
}

DataSet DataSet::grouped(const std::vector<std::vector<double>>& groups) {
  if (groups.empty()) throw DataShapeError("grouped data needs at least one group");
  const std::size_t m = groups.front().size();
  std::vector<double> values;
  values.reserve(groups.size() * m);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].size() != m) {
      throw DataShapeError("ragged groups: group " + std::to_string(i) + " has " +
                           std::to_string(groups[i].size()) + " observations, expected " +
                           std::to_string(m));
    }
    values.insert(values.end(), groups[i].begin(), groups[i].end());
  }
  return grouped(groups.size(), m, std::move(values));
}

DataSet DataSet::grouped(std::size_t group_count, std::size_t group_size,
                         std::vector<double> values) {
  if (group_count == 0 || group_size == 0) throw DataShapeError("empty group layout");
  if (values.size() != group_count * group_size) {
    throw DataShapeError("grouped data size does not match the group layout");
  }
  return DataSet(true, group_size, std::move(values));
}

std::span<const double> DataSet::group(std::size_t i) const {
  if (!grouped_) return values_;
  return std::span<const double>(values_).subspan(i * group_size_, group_size_);
}

void validate_data(const ModelFamily& family, const DataSet& data, DataPurpose purpose) {
  if (data.size() == 0) throw DataShapeError("empty data set");
  if (family.grouped != data.is_grouped()) {
    throw DataShapeError(std::string(family.name) +
                         (family.grouped ? " requires grouped data" : " requires flat data"));
  }
  if (family.grouped && data.group_size() < 2) {
    throw DataShapeError("each group needs at least 2 observations");
  }
  for (double x : data.values()) {
    if (!std::isfinite(x)) throw DataShapeError("non-finite observation");
  }
  switch (family.id) {
    case FamilyId::ShiftedExponential:
      if (std::any_of(data.values().begin(), data.values().end(), [](double x) { return x < 0.0; })) {
        throw DomainError("ShiftedExponential observations must be non-negative");
      }
      break;
    case FamilyId::ParetoRate:
    case FamilyId::ParetoScaleParam:
    case FamilyId::GammaTwoParam:
      if (std::any_of(data.values().begin(), data.values().end(), [](double x) { return x <= 0.0; })) {
        throw DomainError(std::string(family.name) + " observations must be strictly positive");
      }
      break;
    default:
      break;
  }
  if (purpose == DataPurpose::Estimation && sample_count(family, data) < family.min_n) {
    throw DataShapeError(std::string(family.name) + " needs at least " +
                         std::to_string(family.min_n) +
                         (family.grouped ? " groups" : " observations"));
  }
}

void validate_params(const ModelFamily& family, const DataSet& data, const ParameterPoint& params) {
  require_psi(params.psi);
  const std::size_t expected = family.id == FamilyId::NeymanScott ? data.group_count() : 1;
  if (params.theta.size() != expected) {
    throw DomainError(std::string(family.name) + " expects " + std::to_string(expected) +
                      " nuisance parameter(s), got " + std::to_string(params.theta.size()));
  }
  for (double t : params.theta) {
    if (!std::isfinite(t)) throw DomainError("non-finite nuisance parameter");
  }
  switch (family.id) {
    case FamilyId::ParetoRate:
    case FamilyId::ParetoScaleParam:
      if (!(params.theta[0] > 0.0)) throw DomainError("Pareto scale theta must be positive");
      break;
    case FamilyId::GammaTwoParam:
      if (!(params.theta[0] > 0.0)) throw DomainError("Gamma shape must be positive");
      break;
    default:
      break;
  }
}

double log_likelihood(const ModelFamily& family, const DataSet& data, const ParameterPoint& params) {
  validate_data(family, data, DataPurpose::Evaluation);
  validate_params(family, data, params);
  const auto xs = data.values();
  const double n = static_cast<double>(data.size());
  const double psi = params.psi;
  const double theta = params.theta[0];

  switch (family.id) {
    case FamilyId::NormalMeanVar:
    case FamilyId::NeymanScott:
      return -0.5 * n * std::log(2.0 * std::numbers::pi * psi) -
             normal_d(family, data, params.theta) / (2.0 * psi);
    case FamilyId::ShiftedExponential:
      if (violates_lower_support(xs, theta)) return -kInf;
      return -n * std::log(psi) - (sum(xs) - n * theta) / psi;
    case FamilyId::ParetoRate:
      if (violates_lower_support(xs, theta)) return -kInf;
      return n * std::log(psi) + n * psi * std::log(theta) - (psi + 1.0) * sum_log(xs);
    case FamilyId::ParetoScaleParam:
      if (violates_lower_support(xs, theta)) return -kInf;
      return -n * std::log(psi) - sum_log_ratio(xs, theta) / psi - sum_log(xs);
    case FamilyId::GammaTwoParam: {
      const double shape = theta;
      return -n * boost::math::lgamma(shape) - n * shape * std::log(psi) +
             (shape - 1.0) * sum_log(xs) - sum(xs) / psi;
    }
  }
  return 0.0;
}

double psi_score(const ModelFamily& family, const DataSet& data, const ParameterPoint& params) {
  validate_data(family, data, DataPurpose::Evaluation);
  validate_params(family, data, params);
  const double n = static_cast<double>(data.size());
  const double psi = params.psi;
  switch (family.id) {
    case FamilyId::ParetoRate:
      return n / psi - sum_log_ratio(data.values(), params.theta[0]);
    case FamilyId::GammaTwoParam:
      return -n * params.theta[0] / psi + sum(data.values()) / (psi * psi);
    default:
      return linear_score_form(family, data, params.theta)->score(psi);
  }
}

std::optional<LinearScoreForm> linear_score_form(const ModelFamily& family, const DataSet& data,
                                                 std::span<const double> theta) {
  const double n = static_cast<double>(data.size());
  switch (family.id) {
    case FamilyId::NormalMeanVar:
    case FamilyId::NeymanScott:
      return LinearScoreForm{2.0, -n, normal_d(family, data, theta)};
    case FamilyId::ShiftedExponential:
      return LinearScoreForm{1.0, -n, sum(data.values()) - n * theta[0]};
    case FamilyId::ParetoScaleParam:
      return LinearScoreForm{1.0, -n, sum_log_ratio(data.values(), theta[0])};
    case FamilyId::ParetoRate:
    case FamilyId::GammaTwoParam:
      return std::nullopt;
  }
  return std::nullopt;
}

std::vector<double> nuisance_mle(const ModelFamily& family, const DataSet& data) {
  require_closed_form(family, "closed-form nuisance MLE");
  validate_data(family, data, DataPurpose::Evaluation);
  switch (family.id) {
    case FamilyId::NormalMeanVar:
      return {mean(data.values())};
    case FamilyId::NeymanScott: {
      std::vector<double> means(data.group_count());
      for (std::size_t i = 0; i < means.size(); ++i) means[i] = mean(data.group(i));
      return means;
    }
    default:
      return {minimum(data.values())};
  }
}

UpdatedStatistic updated_statistic(const ModelFamily& family, const DataSet& data) {
  require_closed_form(family, "the updated statistic");
  validate_data(family, data, DataPurpose::Estimation);
  const auto theta_hat = nuisance_mle(family, data);
  const double n = static_cast<double>(data.size());

  UpdatedStatistic stat;
  switch (family.id) {
    case FamilyId::NormalMeanVar:
      stat = {normal_d(family, data, theta_hat), n - 1.0, YModel::ScaledChiSquare};
      break;
    case FamilyId::NeymanScott: {
      const double groups = static_cast<double>(data.group_count());
      const double m = static_cast<double>(data.group_size());
      stat = {normal_d(family, data, theta_hat), groups * (m - 1.0), YModel::ScaledChiSquare};
      break;
    }
    case FamilyId::ShiftedExponential:
      stat = {sum(data.values()) - n * theta_hat[0], n - 1.0, YModel::GammaShapeScale};
      break;
    case FamilyId::ParetoRate:
      stat = {sum_log_ratio(data.values(), theta_hat[0]), n - 1.0, YModel::GammaShapeRate};
      break;
    case FamilyId::ParetoScaleParam:
      stat = {sum_log_ratio(data.values(), theta_hat[0]), n - 1.0, YModel::GammaShapeScale};
      break;
    case FamilyId::GammaTwoParam:
      break;
  }
  if (!(stat.y > 0.0)) {
    throw DegenerateSampleError("degenerate sample: all observations are equal");
  }
  return stat;
}

double y_log_likelihood(const UpdatedStatistic& stat, double psi) {
  require_psi(psi);
  if (!(stat.y > 0.0)) throw DegenerateSampleError("updated statistic must be positive");
  const double y = stat.y;
  const double a = stat.dof_or_shape;
  switch (stat.model) {
    case YModel::ScaledChiSquare:
      return -0.5 * a * std::numbers::ln2 - boost::math::lgamma(0.5 * a) - y / (2.0 * psi) +
             0.5 * (a - 2.0) * std::log(y) - 0.5 * a * std::log(psi);
    case YModel::GammaShapeScale:
      return -boost::math::lgamma(a) - a * std::log(psi) + (a - 1.0) * std::log(y) - y / psi;
    case YModel::GammaShapeRate:
      return -boost::math::lgamma(a) + a * std::log(psi) + (a - 1.0) * std::log(y) - psi * y;
  }
  return 0.0;
}

double y_score(const UpdatedStatistic& stat, double psi) {
  require_psi(psi);
  const double a = stat.dof_or_shape;
  switch (stat.model) {
    case YModel::ScaledChiSquare:
      return -0.5 * a / psi + stat.y / (2.0 * psi * psi);
    case YModel::GammaShapeScale:
      return -a / psi + stat.y / (psi * psi);
    case YModel::GammaShapeRate:
      return a / psi - stat.y;
  }
  return 0.0;
}

double y_model_mean(YModel model, double a, double psi) {
  switch (model) {
    case YModel::ScaledChiSquare:
    case YModel::GammaShapeScale:
      return a * psi;
    case YModel::GammaShapeRate:
      return a / psi;
  }
  return 0.0;
}

double y_model_variance(YModel model, double a, double psi) {
  switch (model) {
    case YModel::ScaledChiSquare:
      return 2.0 * a * psi * psi;
    case YModel::GammaShapeScale:
      return a * psi * psi;
    case YModel::GammaShapeRate:
      return a / (psi * psi);
  }
  return 0.0;
}

double psi_mle(const ModelFamily& family, const DataSet& data) {
  const auto stat = updated_statistic(family, data);
  const double n = static_cast<double>(data.size());
  return family.id == FamilyId::ParetoRate ? n / stat.y : stat.y / n;
}

double psi_mumle(const ModelFamily& family, const DataSet& data) {
  const auto stat = updated_statistic(family, data);
  return family.id == FamilyId::ParetoRate ? stat.dof_or_shape / stat.y
                                           : stat.y / stat.dof_or_shape;
}

double moment_hint(const ModelFamily& family, const DataSet& data) {
  validate_data(family, data, DataPurpose::Estimation);
  const auto xs = data.values();
  const double xbar = mean(xs);
  double hint = 0.0;
  switch (family.id) {
    case FamilyId::NormalMeanVar:
    case FamilyId::NeymanScott:
      hint = normal_d(family, data, nuisance_mle(family, data)) / static_cast<double>(xs.size());
      break;
    case FamilyId::ShiftedExponential:
      hint = xbar - minimum(xs);
      break;
    case FamilyId::ParetoRate:
      hint = xbar / (xbar - minimum(xs));
      break;
    case FamilyId::ParetoScaleParam:
      hint = (xbar - minimum(xs)) / xbar;
      break;
    case FamilyId::GammaTwoParam:
      hint = sum_sq_dev(xs, xbar) / static_cast<double>(xs.size()) / xbar;
      break;
  }
  if (!(hint > 0.0) || !std::isfinite(hint)) {
    throw DegenerateSampleError("degenerate sample: no positive moment estimate");
  }
  return hint;
}

}  // namespace mumle
