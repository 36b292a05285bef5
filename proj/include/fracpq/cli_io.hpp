#pragma once

#include "fracpq/threshold_curve.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fracpq::io {

inline constexpr const char* kToolkitVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// stable exit-code contract
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNonConvergence = 2;

/// Every command produces one of these; JSON emission keeps full binary
/// precision, CSV keeps 12 significant digits.
struct ResultRecord {
  std::string command;
  nlohmann::json inputs;
  nlohmann::json outputs;
  nlohmann::json diagnostics;
  std::string toolkit_version = kToolkitVersion;
  int schema_version = kSchemaVersion;
  std::string timestamp;
};

void to_json(nlohmann::json& j, const ResultRecord& rec);
void from_json(const nlohmann::json& j, ResultRecord& rec);

/// Equality of everything except the timestamp.
bool same_payload(const ResultRecord& lhs, const ResultRecord& rhs);

std::string format_sig(double x, int digits = 12);
std::string iso_timestamp();

/// Minimal CSV reader for the schemas this tool writes (no quoting needed).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

/// Parses "v1,v2,..." or "min:max:count" into a value list.
std::vector<double> parse_grid_spec(const std::string& spec);

std::string eigen_csv(const Grid& grid, const GridFunction& phi);
std::string curve_csv(const std::vector<CurveSample>& samples);
std::string region_csv(const std::vector<RegionVerdict>& verdicts);

struct CmdResult {
  ResultRecord record;
  int exit_code = kExitOk;
};

struct EigenCmd {
  double s = 0.5;
  double r = 2.0;
  Interval interval{0.0, 1.0};
  int n = 32;
  SolverOptions solver;
  std::string emit;      // "", "csv", or "json"
  std::string out_path;  // required when emit is set
};

struct SolveCmd {
  PQConfig problem;
  int n = 32;
  double alpha = 0.0;
  double beta = 0.0;
  std::string method = "auto";  // auto | nehari | global | truncation
  std::optional<double> mu;     // supersolution level for the truncation method
  SolverOptions solver;
  std::string emit;
  std::string out_path;
};

struct CurveCmd {
  PQConfig problem;
  int n = 32;
  double theta_min = -1.0;
  double theta_max = 1.0;
  int steps = 9;
  CurveOptions curve;
  std::string emit;
  std::string out_path;
};

struct RegionCmd {
  PQConfig problem;
  int n = 32;
  std::vector<double> alpha_grid;
  std::vector<double> beta_grid;
  CurveOptions curve;
  std::string emit;
  std::string out_path;
};

struct ProptestCmd {
  std::uint64_t seed = 42;
  int cases = 1000;
  std::string emit;
  std::string out_path;
};

struct LiCheckCmd {
  PQConfig problem;
  int n = 32;
  SolverOptions solver;
  std::string emit;
  std::string out_path;
};

CmdResult cmd_eigen(const EigenCmd& cmd);
CmdResult cmd_solve(const SolveCmd& cmd);
CmdResult cmd_curve(const CurveCmd& cmd);
CmdResult cmd_region(const RegionCmd& cmd);
CmdResult cmd_proptest(const ProptestCmd& cmd);
CmdResult cmd_li_check(const LiCheckCmd& cmd);

}  // namespace fracpq::io
