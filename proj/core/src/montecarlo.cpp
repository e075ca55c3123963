#include "mumle/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "mumle/errors.hpp"

namespace mumle {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool is_replicate_failure(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const DegenerateSampleError&) {
    return true;
  } catch (const ConvergenceError&) {
    return true;
  } catch (const BracketingError&) {
    return true;
  } catch (const NumericError&) {
    return true;
  } catch (...) {
    return false;
  }
}

ParameterPoint broadcast_theta(const ModelFamily& family, const ParameterPoint& params,
                               std::size_t n) {
  if (family.id == FamilyId::NeymanScott && params.theta.size() == 1 && n > 1) {
    return {std::vector<double>(n, params.theta[0]), params.psi};
  }
  return params;
}

void validate_config(const ExperimentConfig& config) {
  const auto& family = ModelFamily::of(config.family);
  if (config.replicates == 0) throw DomainError("replicates must be at least 1");
  if (config.n < family.min_n) {
    throw DomainError(std::string(family.name) + " needs n >= " + std::to_string(family.min_n));
  }
  if (family.grouped && config.m < 2) throw DomainError("group size m must be at least 2");
  if (config.estimators.empty()) throw DomainError("no estimators requested");
}

}  // namespace

Rng substream(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t key = splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  return Rng(key);
}

double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

DataSet sample(const ModelFamily& family, const ParameterPoint& raw_params, std::size_t n,
               std::size_t m, Rng& rng) {
  const ParameterPoint params = broadcast_theta(family, raw_params, n);
  if (!(params.psi > 0.0) || !std::isfinite(params.psi)) {
    throw DomainError("psi must be a finite positive number");
  }
  const std::size_t expected_theta = family.id == FamilyId::NeymanScott ? n : 1;
  if (params.theta.size() != expected_theta) {
    throw DomainError("expected " + std::to_string(expected_theta) + " nuisance parameter(s)");
  }
  const double theta = params.theta[0];
  const double psi = params.psi;
  std::vector<double> xs;

  switch (family.id) {
    case FamilyId::NormalMeanVar: {
      std::normal_distribution<double> normal(theta, std::sqrt(psi));
      xs.resize(n);
      for (double& x : xs) x = normal(rng);
      return DataSet::flat(std::move(xs));
    }
    case FamilyId::NeymanScott: {
      if (m < 2) throw DomainError("group size m must be at least 2");
      xs.reserve(n * m);
      const double sd = std::sqrt(psi);
      for (std::size_t i = 0; i < n; ++i) {
        std::normal_distribution<double> normal(params.theta[i], sd);
        for (std::size_t j = 0; j < m; ++j) xs.push_back(normal(rng));
      }
      return DataSet::grouped(n, m, std::move(xs));
    }
    case FamilyId::ShiftedExponential:
      xs.resize(n);
      for (double& x : xs) x = shifted_exponential_from_uniform(uniform_open01(rng), theta, psi);
      return DataSet::flat(std::move(xs));
    case FamilyId::ParetoRate:
      if (!(theta > 0.0)) throw DomainError("Pareto scale theta must be positive");
      xs.resize(n);
      for (double& x : xs) x = pareto_rate_from_uniform(uniform_open01(rng), theta, psi);
      return DataSet::flat(std::move(xs));
    case FamilyId::ParetoScaleParam:
      if (!(theta > 0.0)) throw DomainError("Pareto scale theta must be positive");
      xs.resize(n);
      for (double& x : xs) x = pareto_scale_from_uniform(uniform_open01(rng), theta, psi);
      return DataSet::flat(std::move(xs));
    case FamilyId::GammaTwoParam: {
      if (!(theta > 0.0)) throw DomainError("Gamma shape must be positive");
      std::gamma_distribution<double> gamma(theta, psi);
      xs.resize(n);
      for (double& x : xs) x = gamma(rng);
      return DataSet::flat(std::move(xs));
    }
  }
  throw UnsupportedOperationError("unknown family");
}

void parallel_for_index(std::size_t count, unsigned threads,
                        const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    const std::size_t block = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(count, t * block);
      const std::size_t end = std::min(count, begin + block);
      workers.emplace_back([&, t, begin, end] {
        try {
          for (std::size_t i = begin; i < end; ++i) body(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

std::vector<std::vector<double>> replicate_estimates(const ExperimentConfig& config,
                                                     unsigned threads) {
  validate_config(config);
  const auto& family = ModelFamily::of(config.family);
  const ParameterPoint truth = broadcast_theta(family, config.true_params, config.n);
  const std::size_t k = config.estimators.size();
  std::vector<std::vector<double>> out(k, std::vector<double>(config.replicates));

  parallel_for_index(config.replicates, threads, [&](std::size_t i) {
    auto rng = substream(config.seed, i);
    std::optional<DataSet> data;
    try {
      data = sample(family, truth, config.n, config.m, rng);
    } catch (...) {
      if (!is_replicate_failure(std::current_exception())) throw;
      for (std::size_t e = 0; e < k; ++e) out[e][i] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    for (std::size_t e = 0; e < k; ++e) {
      try {
        out[e][i] = estimate(family, *data, config.estimators[e]).value;
      } catch (...) {
        if (!is_replicate_failure(std::current_exception())) throw;
        out[e][i] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  });
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned threads) {
  const auto estimates = replicate_estimates(config, threads);
  const std::size_t reps = config.replicates;
  const double truth = config.true_params.psi;

  ExperimentResult result;
  result.config = config;
  for (std::size_t i = 0; i < reps; ++i) {
    for (const auto& column : estimates) {
      if (std::isnan(column[i])) {
        ++result.replicate_failures;
        break;
      }
    }
  }
  if (static_cast<double>(result.replicate_failures) > 0.01 * static_cast<double>(reps)) {
    throw ExperimentIntegrityError(std::to_string(result.replicate_failures) + " of " +
                                   std::to_string(reps) + " replicates failed (limit 1%)");
  }

  for (std::size_t e = 0; e < estimates.size(); ++e) {
    const auto& column = estimates[e];
    EstimatorSummary s;
    s.spec = config.estimators[e];
    s.label = s.spec.label();

    CompensatedSum total, sq_err;
    for (double v : column) {
      if (std::isnan(v)) {
        ++s.failures;
        continue;
      }
      ++s.used;
      total.add(v);
      sq_err.add((v - truth) * (v - truth));
    }
    if (s.used == 0) {
      throw ExperimentIntegrityError("estimator " + s.label + " failed on every replicate");
    }
    const double used = static_cast<double>(s.used);
    s.mean = total.value() / used;
    s.bias = s.mean - truth;
    s.mse = sq_err.value() / used;

    if (s.used >= 2) {
      CompensatedSum m2, m4;
      for (double v : column) {
        if (std::isnan(v)) continue;
        const double d = v - s.mean;
        m2.add(d * d);
        m4.add(d * d * d * d);
      }
      const double var = m2.value() / (used - 1.0);
      const double pop_m2 = m2.value() / used;
      const double pop_m4 = m4.value() / used;
      s.variance = var;
      s.bias_se = std::sqrt(var / used);
      s.variance_se = std::sqrt(std::max(0.0, pop_m4 - pop_m2 * pop_m2) / used);
    }
    result.estimators.push_back(std::move(s));
  }
  return result;
}

EstimatorComparison compare_estimators(const ExperimentResult& result) {
  EstimatorComparison out;
  std::vector<const EstimatorSummary*> rows;
  for (const auto& s : result.estimators) rows.push_back(&s);

  auto ranked = [&](auto key) {
    auto copy = rows;
    std::stable_sort(copy.begin(), copy.end(),
                     [&](const EstimatorSummary* a, const EstimatorSummary* b) { return key(*a) < key(*b); });
    std::vector<std::string> labels;
    for (const auto* s : copy) labels.push_back(s->label);
    return labels;
  };
  out.by_abs_bias = ranked([](const EstimatorSummary& s) { return std::abs(s.bias); });
  out.by_mse = ranked([](const EstimatorSummary& s) { return s.mse; });

  for (const auto* a : rows) {
    for (const auto* b : rows) {
      if (a == b || !a->variance || !b->variance) continue;
      if (std::abs(a->bias) < std::abs(b->bias) && *a->variance < *b->variance) {
        out.dominance.push_back({a->label, b->label});
      }
    }
  }
  return out;
}

}  // namespace mumle
