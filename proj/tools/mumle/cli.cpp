#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "io.hpp"
#include "mumle/mumle.hpp"

namespace mumle::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::uint64_t parse_seed(const std::string& text, const char* source) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw UsageError(std::string("invalid seed from ") + source + ": '" + text + "'");
  }
  return v;
}

// --seed wins over MU_SEED, which wins over the configured value.
std::optional<std::uint64_t> resolve_seed(const std::string& flag,
                                          std::optional<std::uint64_t> configured) {
  if (!flag.empty()) return parse_seed(flag, "--seed");
  if (const char* env = std::getenv("MU_SEED"); env != nullptr && *env != '\0') {
    return parse_seed(env, "MU_SEED");
  }
  return configured;
}

FamilyId require_family(const std::string& name) {
  const auto id = ModelFamily::parse(name);
  if (!id) throw UsageError("unknown family '" + name + "'");
  return *id;
}

json manifest(std::string_view command, const std::string& input, std::uint64_t input_hash,
              std::optional<std::uint64_t> seed, const std::vector<std::string>& outputs) {
  json m;
  m["tool"] = "mumle";
  m["version"] = kVersion;
  m["command"] = command;
  m["config_path"] = input;
  m["config_hash"] = "fnv1a64:" + hex64(input_hash);
  m["seed"] = seed ? json(*seed) : json(nullptr);
  m["timestamp"] = utc_timestamp();
  m["outputs"] = outputs;
  return m;
}

json report_json(const EstimateReport& r, const EstimatorSpec& spec) {
  return {{"estimator", std::string(to_string(r.estimator))},
          {"label", spec.label()},
          {"value", r.value},
          {"theta", r.theta},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"objective_at_solution", r.objective_at_solution},
          {"gradient_at_solution", r.gradient_at_solution}};
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  std::string family;
  std::string data_path;
  bool mle = false, mumle = false, mml87 = false, firth = false, all = false;
  std::string prior = "psi-power:-0.5";
  std::string output;
};

int cmd_estimate(const EstimateArgs& args, std::ostream& out) {
  const auto& family = ModelFamily::of(require_family(args.family));
  const auto prior = PriorSpec::parse(args.prior);
  if (!prior) throw UsageError("invalid --prior '" + args.prior + "'");

  const std::string text = read_file(args.data_path);
  const DataSet data = parse_data(text, family.grouped);
  validate_data(family, data);

  std::vector<EstimatorSpec> specs;
  const bool none = !(args.mle || args.mumle || args.mml87 || args.firth);
  const bool every = args.all || none;
  if (every || args.mle) specs.push_back({EstimatorKind::MLE});
  if ((every && family.closed_form) || args.mumle) specs.push_back({EstimatorKind::MUMLE});
  if (every || args.mml87) specs.push_back({EstimatorKind::MML87, *prior});
  if (every || args.firth) specs.push_back({EstimatorKind::Firth});

  json estimates = json::array();
  for (const auto& spec : specs) estimates.push_back(report_json(estimate(family, data, spec), spec));

  json doc;
  doc["manifest"] = manifest("estimate", args.data_path, fnv1a64(text), std::nullopt,
                             args.output.empty() ? std::vector<std::string>{}
                                                 : std::vector<std::string>{args.output});
  doc["family"] = family.cli_name;
  doc["n"] = family.grouped ? data.group_count() : data.size();
  if (family.grouped) doc["m"] = data.group_size();
  doc["estimates"] = estimates;

  const std::string body = doc.dump(2) + "\n";
  if (args.output.empty()) {
    out << body;
  } else {
    write_file(args.output, body);
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string config_path;
  std::string output;
  std::string seed;
  unsigned threads = 0;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out) {
  const std::string text = read_file(args.config_path);
  auto parsed = parse_simulate_config(text);
  const auto seed = resolve_seed(
      args.seed, parsed.has_seed ? std::optional(parsed.experiment.seed) : std::nullopt);
  if (!seed) throw UsageError("no seed given: set 'seed' in the config, MU_SEED or --seed");
  auto& config = parsed.experiment;
  config.seed = *seed;

  const auto& family = ModelFamily::of(config.family);
  const std::uint64_t config_hash = fnv1a64(text);
  const std::string prefix =
      args.output.empty() ? fs::path(args.config_path).stem().string() : args.output;
  const std::string csv_path = prefix + ".csv";
  const std::string json_path = prefix + ".json";

  const auto result = run_experiment(config, args.threads);

  std::ostringstream manifest_line;
  manifest_line << "# mumle simulate version=" << kVersion << " family=" << family.cli_name
                << " psi=" << format_double(config.true_params.psi) << " m=" << config.m
                << " seed=" << config.seed << " config_hash=fnv1a64:" << hex64(config_hash);
  write_file(csv_path, simulate_csv(result, manifest_line.str()));

  json doc;
  doc["manifest"] = manifest("simulate", args.config_path, config_hash, config.seed,
                             {csv_path, json_path});
  json cfg;
  cfg["family"] = family.cli_name;
  cfg["theta"] = config.true_params.theta;
  cfg["psi"] = config.true_params.psi;
  cfg["n"] = config.n;
  cfg["m"] = config.m;
  cfg["replicates"] = config.replicates;
  cfg["seed"] = config.seed;
  json labels = json::array();
  for (const auto& e : config.estimators) labels.push_back(e.label());
  cfg["estimators"] = labels;
  doc["config"] = cfg;

  json rows = json::array();
  for (const auto& s : result.estimators) {
    rows.push_back({{"estimator", s.label},
                    {"n", config.n},
                    {"replicates", config.replicates},
                    {"mean", s.mean},
                    {"bias", s.bias},
                    {"bias_se", optional_json(s.bias_se)},
                    {"variance", optional_json(s.variance)},
                    {"variance_se", optional_json(s.variance_se)},
                    {"mse", s.mse},
                    {"failures", s.failures}});
  }
  doc["results"] = rows;
  doc["replicate_failures"] = result.replicate_failures;

  const auto cmp = compare_estimators(result);
  json dominance = json::array();
  for (const auto& d : cmp.dominance) dominance.push_back({{"winner", d.winner}, {"loser", d.loser}});
  doc["comparison"] = {{"by_abs_bias", cmp.by_abs_bias}, {"by_mse", cmp.by_mse},
                       {"dominance", dominance}};
  write_file(json_path, doc.dump(2) + "\n");

  out << "wrote " << csv_path << " and " << json_path << "\n";
  return kSuccess;
}

// ---------------------------------------------------------------------------
// pathology-check

struct PathologyArgs {
  std::string family;
  std::vector<double> theta;
  double psi = 1.0;
  std::size_t n = 10;
  std::size_t m = 2;
  std::size_t replicates = 100'000;
  std::string seed;
  bool known_theta = false;
  unsigned threads = 0;
  std::string output;
};

std::string sign_word(double x) { return x < 0 ? "negative" : "positive"; }

int cmd_pathology(const PathologyArgs& args, std::ostream& out) {
  const auto id = require_family(args.family);
  const auto& family = ModelFamily::of(id);
  if (!family.closed_form) {
    throw UnsupportedOperationError("pathology-check is not available for " +
                                    std::string(family.name));
  }
  if (args.replicates < kMinPathologyReplicates) {
    throw UsageError("--replicates must be at least " + std::to_string(kMinPathologyReplicates));
  }
  if (args.n < family.min_n) throw UsageError("--n is below the family minimum");
  if (family.grouped && args.m < 2) throw UsageError("--m must be at least 2");

  PathologyConfig config;
  config.family = id;
  const bool positive_theta = id == FamilyId::ParetoRate || id == FamilyId::ParetoScaleParam;
  config.params.theta = args.theta.empty() ? std::vector<double>{positive_theta ? 1.0 : 0.0}
                                           : args.theta;
  config.params.psi = args.psi;
  config.n = args.n;
  config.m = args.m;
  config.replicates = args.replicates;
  config.seed = resolve_seed(args.seed, std::uint64_t{0}).value();
  config.threads = args.threads;
  config.known_theta = args.known_theta;

  const auto report = check_pathology(config);
  const auto& truth = report.score_at_true_theta;
  const auto& hat = *report.score_at_theta_hat;
  const int expected = args.known_theta ? 0 : predicted_pathology_sign(id);

  out << "regularity: " << (report.regularity_pass ? "PASS" : "FAIL")
      << " mean=" << format_double(truth.mean) << " se=" << format_double(truth.standard_error)
      << "\n";
  out << "pathology: " << (report.pathology_detected ? "DETECTED" : "NOT DETECTED")
      << " mean=" << format_double(hat.mean) << " se=" << format_double(hat.standard_error);
  if (report.pathology_detected) out << " sign=" << sign_word(hat.mean);
  out << " expected="
      << (expected == 0 ? "none" : expected < 0 ? "negative" : "positive") << "\n";
  const bool sign_ok = report.pathology_detected ? report.pathology_sign == expected : expected == 0;
  out << "sign check: " << (sign_ok ? "PASS" : "FAIL") << "\n";

  std::ostringstream canonical;
  canonical << family.cli_name << ';' << args.psi << ';' << args.n << ';' << args.m << ';'
            << args.replicates << ';' << args.known_theta;
  for (double t : config.params.theta) canonical << ';' << t;

  json doc;
  doc["manifest"] = manifest("pathology-check", "", fnv1a64(canonical.str()), config.seed,
                             args.output.empty() ? std::vector<std::string>{}
                                                 : std::vector<std::string>{args.output});
  doc["family"] = family.cli_name;
  doc["theta"] = config.params.theta;
  doc["psi"] = config.params.psi;
  doc["n"] = config.n;
  doc["m"] = config.m;
  doc["known_theta"] = config.known_theta;
  doc["replicates"] = report.replicates;
  doc["mean_score_at_true_theta"] = {{"mean", truth.mean}, {"se", truth.standard_error}};
  doc["mean_score_at_theta_hat"] = {{"mean", hat.mean}, {"se", hat.standard_error}};
  doc["regularity_pass"] = report.regularity_pass;
  doc["pathology_detected"] = report.pathology_detected;
  doc["expected_sign"] = expected;
  doc["sign_check_pass"] = sign_ok;
  if (!args.output.empty()) write_file(args.output, doc.dump(2) + "\n");
  return kSuccess;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::vector<std::string> inputs;
  bool allow_mixed = false;
  std::string output;
};

int cmd_report(const ReportArgs& args, std::ostream& out) {
  if (args.inputs.empty()) throw UsageError("report needs at least one simulate output");
  std::vector<ResultRow> rows;
  std::string concatenated;
  for (const auto& path : args.inputs) {
    auto part = read_simulate_output(path);
    rows.insert(rows.end(), part.begin(), part.end());
    concatenated += read_file(path);
  }
  if (!args.allow_mixed) {
    for (const auto& r : rows) {
      if (r.family != rows.front().family) {
        throw UsageError("inputs mix families '" + rows.front().family + "' and '" + r.family +
                         "'; pass --allow-mixed to merge them");
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.family, a.estimator, a.n) < std::tie(b.family, b.estimator, b.n);
  });

  std::ostringstream csv;
  csv << "# mumle report version=" << kVersion << " inputs=" << args.inputs.size()
      << " config_hash=fnv1a64:" << hex64(fnv1a64(concatenated)) << "\n";
  csv << kReportCsvHeader << "\n";
  for (const auto& r : rows) {
    csv << r.family << ',' << r.estimator << ',' << r.n << ',' << format_double(r.bias) << ','
        << (r.bias_se ? format_double(*r.bias_se) : "") << ','
        << (r.variance ? format_double(*r.variance) : "") << ',' << format_double(r.mse) << "\n";
  }
  if (args.output.empty()) {
    out << csv.str();
  } else {
    write_file(args.output, csv.str());
  }
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Maximum-likelihood, model-updated MLE and MML87 estimation with Monte Carlo checks",
               "mumle"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate psi from a data file");
  estimate_cmd->add_option("data", est.data_path, "Data file: one number per line")->required();
  estimate_cmd->add_option("--family", est.family, "Model family")->required();
  estimate_cmd->add_flag("--mle", est.mle, "Maximum-likelihood estimate");
  estimate_cmd->add_flag("--mumle", est.mumle, "Model-updated MLE");
  estimate_cmd->add_flag("--mml87", est.mml87, "MML87 estimate with --prior");
  estimate_cmd->add_flag("--firth", est.firth, "Firth-corrected estimate");
  estimate_cmd->add_flag("--all", est.all, "Every estimator the family supports (default)");
  estimate_cmd->add_option("--prior", est.prior, "MML87 prior: flat, firth or psi-power:<e>")
      ->capture_default_str();
  estimate_cmd->add_option("-o,--output", est.output, "JSON report path (default: stdout)");

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a Monte Carlo experiment from a config");
  simulate_cmd->add_option("config", sim.config_path, "key = value configuration file")->required();
  simulate_cmd->add_option("-o,--output", sim.output, "Output prefix for .csv and .json");
  simulate_cmd->add_option("--seed", sim.seed, "Seed override (beats MU_SEED and the config)");
  simulate_cmd->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");

  PathologyArgs pat;
  auto* pathology_cmd =
      app.add_subcommand("pathology-check", "Monte Carlo regularity and bias-pathology checks");
  pathology_cmd->add_option("--family", pat.family, "Model family")->required();
  pathology_cmd->add_option("--theta", pat.theta, "True nuisance parameter(s)")->delimiter(',');
  pathology_cmd->add_option("--psi", pat.psi, "True psi")->capture_default_str();
  pathology_cmd->add_option("--n", pat.n, "Sample size (groups for neyman-scott)")
      ->capture_default_str();
  pathology_cmd->add_option("--m", pat.m, "Group size (neyman-scott)")->capture_default_str();
  pathology_cmd->add_option("--replicates", pat.replicates, "Monte Carlo replicates")
      ->capture_default_str();
  pathology_cmd->add_option("--seed", pat.seed, "Seed (beats MU_SEED; default 0)");
  pathology_cmd->add_flag("--known-theta", pat.known_theta,
                          "Plug in the true theta instead of its MLE");
  pathology_cmd->add_option("--threads", pat.threads, "Worker threads (0 = all cores)");
  pathology_cmd->add_option("-o,--output", pat.output, "JSON report path");

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Merge simulate outputs into a plot-ready CSV");
  report_cmd->add_option("inputs", rep.inputs, "simulate .csv or .json outputs");
  report_cmd->add_flag("--allow-mixed", rep.allow_mixed, "Allow several families in one report");
  report_cmd->add_option("-o,--output", rep.output, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kSuccess;
    }
    err << "mumle: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*estimate_cmd) return cmd_estimate(est, out);
    if (*simulate_cmd) return cmd_simulate(sim, out);
    if (*pathology_cmd) return cmd_pathology(pat, out);
    if (*report_cmd) return cmd_report(rep, out);
  } catch (const UsageError& e) {
    err << "mumle: " << e.what() << "\n";
    return kUsage;
  } catch (const DataShapeError& e) {
    err << "mumle: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    err << "mumle: " << e.what() << "\n";
    return kDomain;
  } catch (const DegenerateSampleError& e) {
    err << "mumle: " << e.what() << "\n";
    return kDegenerate;
  } catch (const UnsupportedOperationError& e) {
    err << "mumle: " << e.what() << "\n";
    return kUnsupported;
  } catch (const std::exception& e) {
    err << "mumle: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace mumle::cli
