#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mumle/estimators.hpp"
#include "mumle/models.hpp"

namespace mumle {

using Rng = std::mt19937_64;

// Generator for stream `stream` of the experiment seeded with `seed`. The
// state depends only on (seed, stream), so replicate i sees the same draws
// whatever the worker count or scheduling.
Rng substream(std::uint64_t seed, std::uint64_t stream);

// Uniform on (0, 1]; never returns 0 so logarithms and negative powers stay
// finite.
double uniform_open01(Rng& rng);

// Inverse-CDF transforms of a survival probability u in (0, 1].
inline double shifted_exponential_from_uniform(double u, double theta, double psi);
inline double pareto_rate_from_uniform(double u, double theta, double psi);
inline double pareto_scale_from_uniform(double u, double theta, double psi_star);

// Draws one data set. n is the sample size (group count for NeymanScott)
// and m the group size. For NeymanScott params.theta may hold a single value
// shared by every group.
DataSet sample(const ModelFamily& family, const ParameterPoint& params, std::size_t n,
               std::size_t m, Rng& rng);

// Runs body(i) for i in [0, count) on `threads` workers (0 = all cores).
// Every index is visited exactly once; contiguous blocks per worker.
void parallel_for_index(std::size_t count, unsigned threads,
                        const std::function<void(std::size_t)>& body);

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

struct ExperimentConfig {
  FamilyId family = FamilyId::NormalMeanVar;
  ParameterPoint true_params;
  std::size_t n = 10;
  std::size_t m = 2;
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  std::vector<EstimatorSpec> estimators;
};

struct EstimatorSummary {
  EstimatorSpec spec;
  std::string label;
  double mean = 0.0;
  double bias = 0.0;
  std::optional<double> bias_se;      // sample SD / sqrt(R); absent for R < 2
  std::optional<double> variance;     // divisor R - 1; absent for R < 2
  std::optional<double> variance_se;  // sqrt((m4 - m2^2) / R); absent for R < 2
  double mse = 0.0;                   // mean squared error around the truth
  std::size_t failures = 0;
  std::size_t used = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<EstimatorSummary> estimators;
  std::size_t replicate_failures = 0;
};

// Every replicate draws from substream(seed, i); estimator failures
// (degenerate data, non-convergence) are excluded from the moments and
// counted. Throws ExperimentIntegrityError when more than 1% of replicates
// fail. The result does not depend on `threads`.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads = 0);

// Per-replicate estimates in replicate order (NaN marks a failure); the raw
// material behind run_experiment.
std::vector<std::vector<double>> replicate_estimates(const ExperimentConfig& config,
                                                     unsigned threads = 0);

struct Dominance {
  std::string winner;
  std::string loser;
};

struct EstimatorComparison {
  std::vector<std::string> by_abs_bias;
  std::vector<std::string> by_mse;
  // winner has strictly smaller |bias| and strictly smaller variance.
  std::vector<Dominance> dominance;
};

EstimatorComparison compare_estimators(const ExperimentResult& result);

// ---------------------------------------------------------------------------

inline double shifted_exponential_from_uniform(double u, double theta, double psi) {
  return theta - psi * std::log(u);
}

inline double pareto_rate_from_uniform(double u, double theta, double psi) {
  return theta * std::pow(u, -1.0 / psi);
}

inline double pareto_scale_from_uniform(double u, double theta, double psi_star) {
  return theta * std::pow(u, -psi_star);
}

}  // namespace mumle
