#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mumle {

enum class FamilyId {
  NormalMeanVar,
  NeymanScott,
  ShiftedExponential,
  ParetoRate,
  ParetoScaleParam,
  GammaTwoParam,
};

// Static description of one of the supported model families.
//
// The interest parameter psi is always positive: the variance for the two
// normal families, the scale for the shifted exponential, the shape (rate of
// log X) for ParetoRate and its reciprocal for ParetoScaleParam. For
// GammaTwoParam theta = {shape} and psi is the scale.
struct ModelFamily {
  FamilyId id;
  std::string_view name;
  std::string_view cli_name;
  bool grouped;
  // Minimum number of observations (groups for NeymanScott) for estimation.
  std::size_t min_n;
  // Closed-form nuisance MLE, psi MLE, updated statistic and its model.
  bool closed_form;
  bool has_linear_score_form;

  static const ModelFamily& of(FamilyId id);
  static std::span<const ModelFamily> all();
  static std::optional<FamilyId> parse(std::string_view cli_name);
};

struct ParameterPoint {
  std::vector<double> theta;
  double psi = 1.0;
};

// Observations, either a flat sample or n groups of equal size m stored
// row-major.
class DataSet {
 public:
  static DataSet flat(std::vector<double> observations);
  // Throws DataShapeError for ragged or empty groups.
  static DataSet grouped(const std::vector<std::vector<double>>& groups);
  static DataSet grouped(std::size_t group_count, std::size_t group_size,
                         std::vector<double> values);

  bool is_grouped() const { return grouped_; }
  std::size_t size() const { return values_.size(); }
  std::size_t group_count() const { return grouped_ ? values_.size() / group_size_ : 1; }
  std::size_t group_size() const { return grouped_ ? group_size_ : values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<const double> group(std::size_t i) const;

 private:
  DataSet(bool grouped, std::size_t group_size, std::vector<double> values)
      : grouped_(grouped), group_size_(group_size), values_(std::move(values)) {}

  bool grouped_ = false;
  std::size_t group_size_ = 0;
  std::vector<double> values_;
};

// The psi-score written as (C psi + D) / (A psi^2), with the log-density
// (C/A) log psi - D / (A psi) + g(x). g(x) plays no role in estimation.
struct LinearScoreForm {
  double a = 1.0;
  double c = 0.0;
  double d = 0.0;

  double score(double psi) const { return (c * psi + d) / (a * psi * psi); }
};

enum class YModel {
  ScaledChiSquare,  // Y = psi * chi2_k
  GammaShapeScale,  // Gamma(shape, scale = psi)
  GammaShapeRate,   // Gamma(shape, rate = psi)
};

struct UpdatedStatistic {
  double y = 0.0;
  // Degrees of freedom for ScaledChiSquare, shape otherwise.
  double dof_or_shape = 0.0;
  YModel model = YModel::ScaledChiSquare;
};

enum class DataPurpose {
  Evaluation,  // any non-empty sample
  Estimation,  // sample size must reach family.min_n
};

void validate_data(const ModelFamily& family, const DataSet& data,
                   DataPurpose purpose = DataPurpose::Estimation);
void validate_params(const ModelFamily& family, const DataSet& data,
                     const ParameterPoint& params);

// Full-sample log-density including normalizing constants. Returns -inf when
// an observation lies outside the support implied by theta.
double log_likelihood(const ModelFamily& family, const DataSet& data,
                      const ParameterPoint& params);

// d log f / d psi.
double psi_score(const ModelFamily& family, const DataSet& data,
                 const ParameterPoint& params);

std::optional<LinearScoreForm> linear_score_form(const ModelFamily& family,
                                                 const DataSet& data,
                                                 std::span<const double> theta);

std::vector<double> nuisance_mle(const ModelFamily& family, const DataSet& data);

UpdatedStatistic updated_statistic(const ModelFamily& family, const DataSet& data);

double y_log_likelihood(const UpdatedStatistic& stat, double psi);
double y_score(const UpdatedStatistic& stat, double psi);
double y_model_mean(YModel model, double dof_or_shape, double psi);
double y_model_variance(YModel model, double dof_or_shape, double psi);

double psi_mle(const ModelFamily& family, const DataSet& data);
double psi_mumle(const ModelFamily& family, const DataSet& data);

// Method-of-moments starting value for psi, used as the default solver
// bracket hint.
double moment_hint(const ModelFamily& family, const DataSet& data);

}  // namespace mumle
