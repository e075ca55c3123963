#include "io.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mumle::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string_view strip_comment(std::string_view s) {
  const auto hash = s.find('#');
  return hash == std::string_view::npos ? s : s.substr(0, hash);
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> to_integer(std::string_view s) {
  s = trim(s);
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Splits on ',' outside square brackets, so "mml87[psi-power:-0.5]" stays whole.
std::vector<std::string_view> split_estimators(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || (s[i] == ',' && depth == 0)) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    } else if (s[i] == '[') {
      ++depth;
    } else if (s[i] == ']') {
      --depth;
    }
  }
  return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::optional<double> optional_json(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << contents;
}

DataSet parse_data(std::string_view text, bool grouped) {
  std::vector<std::vector<double>> groups(1);
  const auto lines = lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(strip_comment(lines[i]));
    if (line.empty()) {
      if (grouped && !groups.back().empty() && trim(lines[i]).empty()) groups.emplace_back();
      continue;
    }
    const auto v = to_double(line);
    if (!v) {
      throw UsageError("line " + std::to_string(i + 1) + ": cannot parse '" + std::string(line) +
                       "' as a number");
    }
    groups.back().push_back(*v);
  }
  if (groups.back().empty()) groups.pop_back();
  if (groups.empty()) throw UsageError("data file contains no observations");
  if (grouped) return DataSet::grouped(groups);
  std::vector<double> flat;
  for (const auto& g : groups) flat.insert(flat.end(), g.begin(), g.end());
  return DataSet::flat(std::move(flat));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
  return buf.data();
}

std::optional<EstimatorSpec> parse_estimator_token(std::string_view token) {
  token = trim(token);
  if (token == "mle" || token == "MLE") return EstimatorSpec{EstimatorKind::MLE};
  if (token == "mumle" || token == "MUMLE") return EstimatorSpec{EstimatorKind::MUMLE};
  if (token == "firth" || token == "Firth") return EstimatorSpec{EstimatorKind::Firth};
  if (token == "mml87" || token == "MML87") return EstimatorSpec{EstimatorKind::MML87};
  for (std::string_view prefix : {"mml87[", "MML87["}) {
    if (token.starts_with(prefix) && token.ends_with("]")) {
      const auto inner = token.substr(prefix.size(), token.size() - prefix.size() - 1);
      if (auto prior = PriorSpec::parse(inner)) {
        return EstimatorSpec{EstimatorKind::MML87, *prior};
      }
    }
  }
  return std::nullopt;
}

SimulateConfig parse_simulate_config(std::string_view text) {
  static const std::set<std::string, std::less<>> kKeys = {
      "family", "theta", "psi", "n", "m", "replicates", "seed", "estimators"};
  std::map<std::string, std::string, std::less<>> values;
  const auto lines = lines_of(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(strip_comment(lines[i]));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(i + 1) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (!kKeys.contains(key)) throw UsageError("invalid config key '" + key + "'");
    if (values.contains(key)) throw UsageError("duplicate config key '" + key + "'");
    values[key] = std::string(trim(line.substr(eq + 1)));
  }

  auto bad = [](const std::string& key) {
    return UsageError("invalid value for config key '" + key + "'");
  };
  SimulateConfig out;
  auto& ex = out.experiment;

  if (!values.contains("family")) throw UsageError("missing config key 'family'");
  const auto family = ModelFamily::parse(values["family"]);
  if (!family) throw bad("family");
  ex.family = *family;
  const bool pareto_like = ex.family == FamilyId::ParetoRate ||
                           ex.family == FamilyId::ParetoScaleParam ||
                           ex.family == FamilyId::GammaTwoParam;
  ex.true_params.theta = {pareto_like ? 1.0 : 0.0};
  ex.true_params.psi = 1.0;

  if (auto it = values.find("theta"); it != values.end()) {
    ex.true_params.theta.clear();
    for (auto part : split(it->second, ',')) {
      const auto v = to_double(part);
      if (!v) throw bad("theta");
      ex.true_params.theta.push_back(*v);
    }
  }
  if (auto it = values.find("psi"); it != values.end()) {
    const auto v = to_double(it->second);
    if (!v || !(*v > 0.0)) throw bad("psi");
    ex.true_params.psi = *v;
  }
  if (auto it = values.find("n"); it != values.end()) {
    const auto v = to_integer<std::size_t>(it->second);
    if (!v || *v < ModelFamily::of(ex.family).min_n) throw bad("n");
    ex.n = *v;
  }
  if (auto it = values.find("m"); it != values.end()) {
    const auto v = to_integer<std::size_t>(it->second);
    if (!v || *v < 2) throw bad("m");
    ex.m = *v;
  }
  if (!values.contains("replicates")) throw UsageError("missing config key 'replicates'");
  {
    const auto v = to_integer<std::size_t>(values["replicates"]);
    if (!v || *v == 0) throw bad("replicates");
    ex.replicates = *v;
  }
  if (auto it = values.find("seed"); it != values.end()) {
    const auto v = to_integer<std::uint64_t>(it->second);
    if (!v) throw bad("seed");
    ex.seed = *v;
    out.has_seed = true;
  }
  const std::string estimators = values.contains("estimators") ? values["estimators"] : "mle,mumle";
  for (auto token : split_estimators(estimators)) {
    const auto spec = parse_estimator_token(token);
    if (!spec) throw bad("estimators");
    ex.estimators.push_back(*spec);
  }
  return out;
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

std::string simulate_csv(const ExperimentResult& result, std::string_view manifest_line) {
  std::ostringstream os;
  os << manifest_line << '\n' << kSimulateCsvHeader << '\n';
  for (const auto& s : result.estimators) {
    os << s.label << ',' << result.config.n << ',' << result.config.replicates << ','
       << format_double(s.mean) << ',' << format_double(s.bias) << ',' << optional_field(s.bias_se)
       << ',' << optional_field(s.variance) << ',' << optional_field(s.variance_se) << ','
       << format_double(s.mse) << ',' << s.failures << '\n';
  }
  return os.str();
}

std::vector<ResultRow> read_simulate_output(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<ResultRow> rows;

  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
      const std::string family = j.at("config").at("family").get<std::string>();
      for (const auto& r : j.at("results")) {
        ResultRow row;
        row.family = family;
        row.estimator = r.at("estimator").get<std::string>();
        row.n = r.at("n").get<std::size_t>();
        row.bias = r.at("bias").get<double>();
        row.bias_se = optional_json(r, "bias_se");
        row.variance = optional_json(r, "variance");
        row.mse = r.at("mse").get<double>();
        rows.push_back(std::move(row));
      }
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(path.string() + ": not a simulate JSON output (" + e.what() + ")");
    }
    return rows;
  }

  const auto lines = lines_of(text);
  std::string family;
  std::size_t header = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.starts_with("#")) {
      for (auto token : split(line, ' ')) {
        if (token.starts_with("family=")) family = std::string(token.substr(7));
      }
      continue;
    }
    if (line == kSimulateCsvHeader) {
      header = i;
      break;
    }
    throw UsageError(path.string() + ": unexpected line " + std::to_string(i + 1));
  }
  if (header == lines.size()) throw UsageError(path.string() + ": missing simulate CSV header");
  if (family.empty()) throw UsageError(path.string() + ": manifest does not name the family");

  for (std::size_t i = header + 1; i < lines.size(); ++i) {
    const auto fields = split(trim(lines[i]), ',');
    if (fields.size() != 10) {
      throw UsageError(path.string() + ": line " + std::to_string(i + 1) + " has " +
                       std::to_string(fields.size()) + " fields, expected 10");
    }
    ResultRow row;
    row.family = family;
    row.estimator = std::string(fields[0]);
    const auto n = to_integer<std::size_t>(fields[1]);
    const auto bias = to_double(fields[4]);
    const auto mse = to_double(fields[8]);
    if (!n || !bias || !mse) {
      throw UsageError(path.string() + ": line " + std::to_string(i + 1) + ": malformed number");
    }
    row.n = *n;
    row.bias = *bias;
    row.bias_se = to_double(fields[5]);
    row.variance = to_double(fields[6]);
    row.mse = *mse;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mumle::cli
