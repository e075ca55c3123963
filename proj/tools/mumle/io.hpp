#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mumle/montecarlo.hpp"

namespace mumle::cli {

// Malformed input file or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// One number per line; '#' starts a comment. For grouped families blank
// lines separate groups, otherwise they are ignored. Parse failures raise
// UsageError with the 1-based line number.
DataSet parse_data(std::string_view text, bool grouped);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Flat "key = value" configuration for the simulate command.
struct SimulateConfig {
  ExperimentConfig experiment;
  bool has_seed = false;
};

// Keys: family, theta, psi, n, m, replicates, seed, estimators. Estimator
// tokens: mle, mumle, firth, mml87, mml87[<prior>].
SimulateConfig parse_simulate_config(std::string_view text);

std::optional<EstimatorSpec> parse_estimator_token(std::string_view token);

// Shortest round-trip decimal representation.
std::string format_double(double x);

std::string utc_timestamp();

// One row of a simulate output as consumed by the report command.
struct ResultRow {
  std::string family;
  std::string estimator;
  std::size_t n = 0;
  double bias = 0.0;
  std::optional<double> bias_se;
  std::optional<double> variance;
  double mse = 0.0;
};

inline constexpr std::string_view kSimulateCsvHeader =
    "estimator,n,replicates,mean,bias,bias_se,variance,variance_se,mse,failures";
inline constexpr std::string_view kReportCsvHeader = "family,estimator,n,bias,bias_se,variance,mse";

std::string simulate_csv(const ExperimentResult& result, std::string_view manifest_line);

// Reads a simulate CSV (family taken from its manifest line) or JSON output.
std::vector<ResultRow> read_simulate_output(const std::filesystem::path& path);

}  // namespace mumle::cli
