// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Every tolerance is fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "io.hpp"
#include "mumle/mumle.hpp"
#include "oracles.hpp"

namespace {

using namespace mumle;
namespace fs = std::filesystem;

constexpr double kSe = 4.0;                  // Monte Carlo agreement, in standard errors
constexpr double kIdentityRel = 1e-10;       // MML87 with psi^{-1/2} vs MUMLE
constexpr double kResidualMax = 1e-10;       // decomposition residual spread
constexpr double kNegativeControlMin = 0.1;  // residual spread with a wrong exponent
constexpr double kSolverRel = 1e-8;          // generic root vs closed form
constexpr double kSolverScore = 1e-10;       // |score| at the returned root
constexpr double kVarianceRatioLo = 8.0;     // 10x shrinkage, +-20%
constexpr double kVarianceRatioHi = 12.0;
constexpr double kFirthFactor = 3.0;

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("[%s] %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool near_se(double observed, double expected, double se) {
  return std::abs(observed - expected) <= kSe * se;
}

ExperimentResult run(FamilyId family, ParameterPoint truth, std::size_t n, std::size_t m,
                     std::size_t reps, std::uint64_t seed) {
  ExperimentConfig c;
  c.family = family;
  c.true_params = std::move(truth);
  c.n = n;
  c.m = m;
  c.replicates = reps;
  c.seed = seed;
  c.estimators = {{EstimatorKind::MLE}, {EstimatorKind::MUMLE}};
  return run_experiment(c);
}

ParameterPoint truth_for(FamilyId id, double psi = 1.0) {
  if (id == FamilyId::NormalMeanVar || id == FamilyId::NeymanScott) return {{0.0}, psi};
  if (id == FamilyId::ShiftedExponential) return {{0.0}, psi};
  return {{1.0}, psi};
}

// Oracle for criteria 1-2: moments of c / Y with Y ~ Gamma(n - 1, rate 1).
struct Moments {
  double bias, variance;
};
Moments pareto_oracle(double n, double c) {
  const double e1 = test::gamma_expectation([&](double y) { return c / y; }, n - 1.0, 1.0);
  const double e2 = test::gamma_expectation([&](double y) { return c * c / (y * y); }, n - 1.0, 1.0);
  return {e1 - 1.0, e2 - e1 * e1};
}

void criteria_1_2() {
  const auto res = run(FamilyId::ParetoRate, {{1.0}, 1.0}, 20, 2, 1'000'000, 42);
  const auto& mle = res.estimators[0];
  const auto& mu = res.estimators[1];
  const auto o_mle = pareto_oracle(20, 20);
  const auto o_mu = pareto_oracle(20, 19);

  const bool b1 = near_se(mle.bias, 1.0 / 9.0, *mle.bias_se);
  const bool b2 = near_se(mu.bias, 1.0 / 18.0, *mu.bias_se);
  report(b1 && b2, "criterion 1 (Pareto exact bias)",
         fmt("MLE bias %.5f +- %.5f vs 1/9 (oracle %.5f); MUMLE bias %.5f +- %.5f vs 1/18 "
             "(oracle %.5f)",
             mle.bias, *mle.bias_se, o_mle.bias, mu.bias, *mu.bias_se, o_mu.bias));

  const double v_mle = 400.0 / (324.0 * 17.0);
  const double v_mu = 361.0 / (324.0 * 17.0);
  const bool v1 = near_se(*mle.variance, v_mle, *mle.variance_se);
  const bool v2 = near_se(*mu.variance, v_mu, *mu.variance_se);
  const bool v3 = *mu.variance < *mle.variance;
  report(v1 && v2 && v3, "criterion 2 (Pareto exact variance)",
         fmt("MLE var %.5f +- %.5f vs %.5f (oracle %.5f); MUMLE var %.5f +- %.5f vs %.5f "
             "(oracle %.5f); MUMLE < MLE: %s",
             *mle.variance, *mle.variance_se, v_mle, o_mle.variance, *mu.variance,
             *mu.variance_se, v_mu, o_mu.variance, v3 ? "yes" : "no"));
}

void criterion_3() {
  struct Case {
    FamilyId id;
    std::size_t n;
    const char* name;
  };
  const Case cases[] = {{FamilyId::NormalMeanVar, 10, "normal n=10"},
                        {FamilyId::ShiftedExponential, 5, "shifted-exponential n=5"},
                        {FamilyId::ParetoScaleParam, 10, "pareto-scale n=10"}};
  bool pass = true;
  std::string detail;
  std::uint64_t seed = 300;
  for (const auto& c : cases) {
    // Oracle: E[Y / n] - 1 under the model of Y.
    const double nd = static_cast<double>(c.n);
    const double oracle =
        c.id == FamilyId::NormalMeanVar
            ? test::chi_square_expectation([&](double y) { return y / nd; }, nd - 1.0) - 1.0
            : test::gamma_expectation([&](double y) { return y / nd; }, nd - 1.0, 1.0) - 1.0;
    const auto res = run(c.id, truth_for(c.id), c.n, 2, 1'000'000, seed++);
    const auto& mle = res.estimators[0];
    const auto& mu = res.estimators[1];
    const bool ok = near_se(mu.bias, 0.0, *mu.bias_se) && near_se(mle.bias, oracle, *mle.bias_se);
    pass = pass && ok;
    detail += fmt("%s%s: MUMLE bias %.5f +- %.5f, MLE bias %.5f +- %.5f vs %.4f", detail.empty() ? "" : "; ",
                  c.name, mu.bias, *mu.bias_se, mle.bias, *mle.bias_se, oracle);
  }
  report(pass, "criterion 3 (MUMLE unbiasedness)", detail);
}

void criterion_4() {
  const auto small = run(FamilyId::NeymanScott, {{0.0}, 1.0}, 100, 2, 10'000, 400);
  const auto large = run(FamilyId::NeymanScott, {{0.0}, 1.0}, 1000, 2, 10'000, 401);
  bool pass = true;
  for (const auto* r : {&small, &large}) {
    pass = pass && near_se(r->estimators[0].mean, 0.5, *r->estimators[0].bias_se) &&
           near_se(r->estimators[1].mean, 1.0, *r->estimators[1].bias_se);
  }
  const double ratio = *small.estimators[1].variance / *large.estimators[1].variance;
  pass = pass && ratio >= kVarianceRatioLo && ratio <= kVarianceRatioHi;
  report(pass, "criterion 4 (Neyman-Scott consistency)",
         fmt("n=100: MLE mean %.5f, MUMLE mean %.5f; n=1000: MLE mean %.5f, MUMLE mean %.5f; "
             "MUMLE variance ratio %.3f",
             small.estimators[0].mean, small.estimators[1].mean, large.estimators[0].mean,
             large.estimators[1].mean, ratio));
}

void criterion_5() {
  const auto& f = ModelFamily::of(FamilyId::NormalMeanVar);
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    auto rng = substream(500, r);
    const double psi = 0.1 + 0.01 * static_cast<double>(r);
    const auto data = sample(f, {{static_cast<double>(r % 7) - 3.0}, psi}, 2 + r % 50, 0, rng);
    const double mml = mml87_estimate(f, data, PriorSpec::psi_power(-0.5)).value;
    const double mu = psi_mumle(f, data);
    worst = std::max(worst, std::abs(mml - mu) / mu);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(worst < kIdentityRel, "criterion 5 (MML87 psi^-1/2 equals MUMLE)",
         fmt("1000 data sets, worst relative difference %.3e, %.2f s", worst, secs));
}

void criterion_6() {
  const auto& f = ModelFamily::of(FamilyId::NormalMeanVar);
  const double grid[] = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  double worst = 0.0, weakest_control = 1e300;
  for (std::uint64_t r = 0; r < 100; ++r) {
    auto rng = substream(600, r);
    const auto data = sample(f, {{1.0}, 2.0}, 3 + r % 20, 0, rng);
    worst = std::max(worst, decomposition_residual(f, data, grid));
    weakest_control = std::min(weakest_control, decomposition_residual(f, data, grid, -1.0));
  }
  report(worst < kResidualMax && weakest_control > kNegativeControlMin,
         "criterion 6 (likelihood decomposition)",
         fmt("max residual spread %.3e with exponent -1/2; min spread %.4f with exponent -1 "
             "(expected 0.5*log(32) = %.4f)",
             worst, weakest_control, 0.5 * std::log(32.0)));
}

void criterion_7() {
  const FamilyId ids[] = {FamilyId::NormalMeanVar, FamilyId::NeymanScott,
                          FamilyId::ShiftedExponential, FamilyId::ParetoScaleParam,
                          FamilyId::ParetoRate};
  bool pass = true;
  std::string detail;
  std::uint64_t seed = 700;
  for (auto id : ids) {
    PathologyConfig c;
    c.family = id;
    c.params = truth_for(id);
    c.n = 10;
    c.m = 2;
    c.replicates = 100'000;
    c.seed = seed++;
    const auto r = check_pathology(c);
    const bool ok = r.regularity_pass && r.pathology_detected &&
                    r.pathology_sign == predicted_pathology_sign(id);
    pass = pass && ok;
    detail += fmt("%s%s: E U(true) %.4f +- %.4f, E U(theta_hat) %.4f +- %.4f",
                  detail.empty() ? "" : "; ", std::string(ModelFamily::of(id).cli_name).c_str(),
                  r.score_at_true_theta.mean, r.score_at_true_theta.standard_error,
                  r.score_at_theta_hat->mean, r.score_at_theta_hat->standard_error);
  }
  // Oracle for ParetoRate: E[n - Y] with Y ~ Gamma(9, rate 1) is +1.
  const double pareto_oracle = test::gamma_expectation([](double y) { return 10.0 - y; }, 9.0, 1.0);
  detail += fmt("; pareto-rate oracle %.6f", pareto_oracle);
  report(pass, "criterion 7 (score regularity and bias pathology)", detail);
}

void criterion_8() {
  const FamilyId ids[] = {FamilyId::NormalMeanVar, FamilyId::NeymanScott,
                          FamilyId::ShiftedExponential, FamilyId::ParetoRate,
                          FamilyId::ParetoScaleParam};
  double worst_rel = 0.0, worst_score = 0.0;
  for (auto id : ids) {
    const auto& f = ModelFamily::of(id);
    for (std::uint64_t r = 0; r < 1000; ++r) {
      auto rng = substream(800 + static_cast<std::uint64_t>(id), r);
      const double psi = std::exp(-3.0 + 6.0 * uniform_open01(rng));
      const auto data = sample(f, truth_for(id, psi), 2 + r % 40, 2 + r % 4, rng);
      const auto theta = nuisance_mle(f, data);
      auto score = [&](double p) { return psi_score(f, data, {theta, p}); };
      const double root = solve_score_root(score, moment_hint(f, data));
      const double closed = psi_mle(f, data);
      worst_rel = std::max(worst_rel, std::abs(root - closed) / closed);
      worst_score = std::max(worst_score, std::abs(score(root)));
    }
  }
  report(worst_rel < kSolverRel && worst_score <= kSolverScore,
         "criterion 8 (solver and closed-form agreement)",
         fmt("5000 data sets, worst relative difference %.3e, worst |score| %.3e", worst_rel,
             worst_score));
}

void criterion_9() {
  const fs::path dir = fs::temp_directory_path() / "mumle_acceptance_c9";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto cfg = (dir / "pareto.cfg").string();
  cli::write_file(cfg,
                  "family = pareto-rate\ntheta = 1\npsi = 1\nn = 20\nreplicates = 1000000\n"
                  "seed = 42\nestimators = mle,mumle\n");
  std::ostringstream sink;
  bool ran = true;
  for (const char* t : {"1", "8"}) {
    const std::string prefix = (dir / (std::string("threads") + t)).string();
    const char* argv[] = {"mumle", "simulate", cfg.c_str(), "-o", prefix.c_str(), "--threads", t};
    ran = ran && cli::run(7, argv, sink, sink) == 0;
  }
  const bool same = ran && cli::read_file(dir / "threads1.csv") == cli::read_file(dir / "threads8.csv");
  report(same, "criterion 9 (thread-count reproducibility)",
         ran ? fmt("CSV outputs with --threads 1 and --threads 8 %s",
                   same ? "are byte-identical" : "differ")
             : std::string("simulate command failed: ") + sink.str());
  fs::remove_all(dir);
}

// Exponential rate l with n observations summing to s. The |I|-prior
// estimate is (n - 1) / s, the MLE n / s.
ScalarModel exponential_rate(double n, double s) {
  ScalarModel m;
  m.log_likelihood = [=](double l) { return n * std::log(l) - l * s; };
  m.score = [=](double l) { return n / l - s; };
  m.log_information = [=](double l) { return std::log(n) - 2.0 * std::log(l); };
  m.d_log_information = [](double l) { return -2.0 / l; };
  m.hint = n / s;
  return m;
}

void firth_property() {
  constexpr std::size_t kReps = 100'000;
  constexpr double n = 10.0;
  std::vector<double> mle(kReps), firth(kReps);
  const auto& f = ModelFamily::of(FamilyId::ShiftedExponential);
  for (std::size_t i = 0; i < kReps; ++i) {
    auto rng = substream(900, i);
    const auto data = sample(f, {{0.0}, 1.0}, 10, 0, rng);
    double s = 0.0;
    for (double x : data.values()) s += x;
    const auto model = exponential_rate(n, s);
    mle[i] = solve_score_root(model.score, model.hint);
    firth[i] = firth_corrected_estimate(model).value;
  }
  auto bias = [](const std::vector<double>& v) {
    CompensatedSum acc;
    for (double x : v) acc.add(x);
    return acc.value() / static_cast<double>(v.size()) - 1.0;
  };
  const double b_mle = bias(mle), b_firth = bias(firth);
  // Oracle: S ~ Gamma(10, 1); E[10 / S] - 1 = 1/9 and E[9 / S] - 1 = 0.
  const double o_mle = test::gamma_expectation([](double y) { return n / y; }, n, 1.0) - 1.0;
  const double o_firth = test::gamma_expectation([](double y) { return (n - 1) / y; }, n, 1.0) - 1.0;
  report(std::abs(b_firth) * kFirthFactor <= std::abs(b_mle),
         "Firth property (exponential rate, n=10)",
         fmt("MLE bias %.5f (oracle %.5f), |I|-prior bias %.5f (oracle %.1e), ratio %.1f", b_mle,
             o_mle, b_firth, o_firth, std::abs(b_mle) / std::max(std::abs(b_firth), 1e-300)));
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> steps = {criteria_1_2, criterion_3, criterion_4,
                                                    criterion_5,  criterion_6, criterion_7,
                                                    criterion_8,  criterion_9, firth_property};
  for (const auto& step : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      report(false, "unexpected exception", e.what());
    }
  }
  std::printf("%s: %d failing\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
