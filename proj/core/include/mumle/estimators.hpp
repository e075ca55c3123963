#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mumle/models.hpp"

namespace mumle {

enum class EstimatorKind { MLE, MUMLE, MML87, Firth };

std::string_view to_string(EstimatorKind kind);

// Prior h used by the MML87 objective, specified up to an additive constant
// in log h.
struct PriorSpec {
  enum class Kind { FirthInformation, PsiPowerLaw, Flat, Custom };

  Kind kind = Kind::Flat;
  double exponent = 0.0;                                   // PsiPowerLaw only
  std::function<double(const ParameterPoint&)> log_prior;  // Custom only

  static PriorSpec firth() { return {Kind::FirthInformation, 0.0, {}}; }
  static PriorSpec psi_power(double exponent) { return {Kind::PsiPowerLaw, exponent, {}}; }
  static PriorSpec flat() { return {Kind::Flat, 0.0, {}}; }
  static PriorSpec custom(std::function<double(const ParameterPoint&)> fn) {
    return {Kind::Custom, 0.0, std::move(fn)};
  }

  // "firth", "flat", "psi-power:<e>" or "custom".
  std::string label() const;
  // Inverse of label() for the non-custom kinds; nullopt on bad input.
  static std::optional<PriorSpec> parse(std::string_view text);
};

struct FisherInfo {
  enum class Source { ClosedForm, FiniteDifference };

  double determinant = 0.0;
  double log_determinant = 0.0;
  Source source = Source::ClosedForm;
};

// Controls the Monte Carlo expectation behind finite-difference information.
struct FisherOptions {
  std::uint64_t seed = 0x6d756d6c65ULL;
  std::size_t samples = std::size_t{1} << 16;
};

struct MmlOptions {
  FisherOptions fisher{0x6d756d6c65ULL, 4096};
  double log_width_tolerance = 1e-12;
  std::size_t max_iterations = 500;
};

struct EstimateReport {
  EstimatorKind estimator = EstimatorKind::MLE;
  double value = 0.0;
  std::vector<double> theta;
  std::size_t iterations = 0;
  bool converged = false;
  double objective_at_solution = 0.0;
  // d objective / d psi at the solution.
  double gradient_at_solution = 0.0;
};

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::MLE;
  PriorSpec prior = PriorSpec::psi_power(-0.5);

  // Stable identifier used in reports, e.g. "MLE" or "MML87[psi-power:-0.5]".
  std::string label() const;
};

// A one-parameter model described by closures; the generic entry point for
// penalized estimation outside the built-in families. d_log_information may
// be empty, in which case the optimizer does not polish with derivatives.
struct ScalarModel {
  std::function<double(double)> log_likelihood;
  std::function<double(double)> score;
  std::function<double(double)> log_information;
  std::function<double(double)> d_log_information;
  double hint = 1.0;
};

// Bracket a sign change of `score` by doubling/halving from bracket_hint
// (at most 60 steps each way), then bisect. Returns psi with
// |score(psi)| <= tol and a final bracket no wider than tol * (1 + psi).
double solve_score_root(const std::function<double(double)>& score, double bracket_hint,
                        double tol = 1e-12);

FisherInfo fisher_information_determinant(const ModelFamily& family, std::size_t data_size,
                                          const ParameterPoint& params,
                                          const FisherOptions& options = {});

// log h + log f - 1/2 log |I| at the given point. For the FirthInformation
// prior this is evaluated as log f + 1/2 log |I|.
double mml87_objective(const ModelFamily& family, const DataSet& data, const PriorSpec& prior,
                       const ParameterPoint& params, const MmlOptions& options = {});

EstimateReport mml87_estimate(const ModelFamily& family, const DataSet& data,
                              const PriorSpec& prior, const MmlOptions& options = {});
EstimateReport mml87_estimate(const ScalarModel& model, const PriorSpec& prior,
                              const MmlOptions& options = {});

// Maximizer of log f + 1/2 log |I|: identical to MML87 with the
// FirthInformation prior, relabelled.
EstimateReport firth_corrected_estimate(const ModelFamily& family, const DataSet& data,
                                        const MmlOptions& options = {});
EstimateReport firth_corrected_estimate(const ScalarModel& model, const MmlOptions& options = {});

// Exponent e with phi(psi) = psi^e in
//   log f(x | theta_hat, psi) - log g_Y(y | psi) = log phi(psi) + u(y).
double decomposition_phi_exponent(const ModelFamily& family, const DataSet& data);

// The power-law prior |I(psi)|^{1/2} / phi(psi) under which MML87 reproduces
// the MUMLE.
PriorSpec mumle_matching_prior(const ModelFamily& family, const DataSet& data);

// Spread (max - min) over psi_grid of
//   log f(x | theta_hat, psi) - log g_Y(Y | psi) - log phi(psi).
// phi_exponent overrides the family's declared exponent.
double decomposition_residual(const ModelFamily& family, const DataSet& data,
                                    std::span<const double> psi_grid,
                                    std::optional<double> phi_exponent = std::nullopt);

// Runs one estimator. MLE on GammaTwoParam is computed numerically.
EstimateReport estimate(const ModelFamily& family, const DataSet& data, const EstimatorSpec& spec,
                        const MmlOptions& options = {});

}  // namespace mumle
