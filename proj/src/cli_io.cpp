#include "fracpq/cli_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fracpq::io {

namespace {

nlohmann::json json_vector(const std::vector<double>& v) { return nlohmann::json(v); }

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw std::invalid_argument("cannot open output file: " + path);
  }
  out << text;
  if (!out) {
    throw std::runtime_error("failed writing output file: " + path);
  }
}

void emit_record(const ResultRecord& rec, const std::string& emit, const std::string& out_path,
                 const std::string& csv_text) {
  if (emit.empty()) return;
  if (out_path.empty()) {
    throw std::invalid_argument("--emit requires --out PATH");
  }
  if (emit == "json") {
    nlohmann::json j = rec;
    write_text_file(out_path, j.dump(2) + "\n");
  } else if (emit == "csv") {
    write_text_file(out_path, csv_text);
  } else {
    throw std::invalid_argument("unknown emit format: " + emit + " (use csv or json)");
  }
}

nlohmann::json problem_inputs(const PQConfig& cfg, int n) {
  return {{"interval", {cfg.interval.a, cfg.interval.b}},
          {"s1", cfg.s1},
          {"p", cfg.p},
          {"s2", cfg.s2},
          {"q", cfg.q},
          {"n", n}};
}

nlohmann::json report_json(const SolutionReport& rep, const Grid& grid, bool include_values) {
  nlohmann::json j{{"status", std::string(to_string(rep.status))},
                   {"method", std::string(to_string(rep.method))},
                   {"residual", rep.residual},
                   {"min_interior", rep.min_interior},
                   {"sup_norm", rep.sup_norm},
                   {"iterations", rep.iterations},
                   {"seeds_tried", rep.seeds_tried},
                   {"H", rep.diagnostics.H},
                   {"G", rep.diagnostics.G},
                   {"I", rep.diagnostics.I}};
  if (rep.diagnostics.t_scale) j["t_scale"] = *rep.diagnostics.t_scale;
  if (!rep.note.empty()) j["note"] = rep.note;
  if (include_values && rep.u) {
    j["x"] = json_vector(grid.nodes);
    j["u"] = json_vector(rep.u->values);
  }
  return j;
}

}  // namespace

void to_json(nlohmann::json& j, const ResultRecord& rec) {
  j = nlohmann::json{{"command", rec.command},
                     {"inputs", rec.inputs},
                     {"outputs", rec.outputs},
                     {"diagnostics", rec.diagnostics},
                     {"toolkit_version", rec.toolkit_version},
                     {"schema_version", rec.schema_version},
                     {"timestamp", rec.timestamp}};
}

void from_json(const nlohmann::json& j, ResultRecord& rec) {
  j.at("command").get_to(rec.command);
  rec.inputs = j.at("inputs");
  rec.outputs = j.at("outputs");
  rec.diagnostics = j.at("diagnostics");
  j.at("toolkit_version").get_to(rec.toolkit_version);
  j.at("schema_version").get_to(rec.schema_version);
  j.at("timestamp").get_to(rec.timestamp);
}

bool same_payload(const ResultRecord& lhs, const ResultRecord& rhs) {
  return lhs.command == rhs.command && lhs.inputs == rhs.inputs && lhs.outputs == rhs.outputs &&
         lhs.diagnostics == rhs.diagnostics && lhs.toolkit_version == rhs.toolkit_version &&
         lhs.schema_version == rhs.schema_version;
}

std::string format_sig(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream stream(text);
  std::string line;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.push_back(cell);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> parse_grid_spec(const std::string& spec) {
  std::vector<double> values;
  if (spec.find(':') != std::string::npos) {
    double lo = 0.0, hi = 0.0;
    int count = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 || count < 1) {
      throw std::invalid_argument("grid spec: expected min:max:count, got " + spec);
    }
    if (count == 1) {
      values.push_back(lo);
    } else {
      for (int k = 0; k < count; ++k) values.push_back(lo + (hi - lo) * k / (count - 1));
    }
    return values;
  }
  std::istringstream stream(spec);
  std::string cell;
  while (std::getline(stream, cell, ',')) {
    if (cell.empty()) continue;
    std::size_t used = 0;
    values.push_back(std::stod(cell, &used));
    if (used != cell.size()) {
      throw std::invalid_argument("grid spec: bad number '" + cell + "'");
    }
  }
  if (values.empty()) {
    throw std::invalid_argument("grid spec: no values in '" + spec + "'");
  }
  return values;
}

std::string eigen_csv(const Grid& grid, const GridFunction& phi) {
  std::string out = "x,phi\n";
  for (int i = 0; i < grid.n; ++i) {
    out += format_sig(grid.nodes[static_cast<std::size_t>(i)]) + "," + format_sig(phi[i]) + "\n";
  }
  return out;
}

std::string curve_csv(const std::vector<CurveSample>& samples) {
  std::string out = "theta,lambda_star,alpha,beta,bracket\n";
  for (const auto& s : samples) {
    out += format_sig(s.theta) + "," + format_sig(s.lambda_star) + "," +
           format_sig(s.lambda_star + s.theta) + "," + format_sig(s.lambda_star) + "," +
           format_sig(s.bracket_width) + "\n";
  }
  return out;
}

std::string region_csv(const std::vector<RegionVerdict>& verdicts) {
  std::string out = "alpha,beta,verdict\n";
  for (const auto& v : verdicts) {
    out += format_sig(v.alpha) + "," + format_sig(v.beta) + "," + to_string(v.verdict) + "\n";
  }
  return out;
}

CmdResult cmd_eigen(const EigenCmd& cmd) {
  const FractionalParams params{cmd.s, cmd.r};
  validate(params);
  const GridPtr grid = build_grid(cmd.interval, cmd.n);
  const EnergyAssembly asm_ = assemble(grid, params);
  const Eigenpair pair = first_eigenpair(asm_, cmd.solver);

  CmdResult res;
  res.record.command = "eigen";
  res.record.timestamp = iso_timestamp();
  res.record.inputs = {{"s", cmd.s},
                       {"r", cmd.r},
                       {"interval", {cmd.interval.a, cmd.interval.b}},
                       {"n", cmd.n},
                       {"seed", cmd.solver.seed}};
  res.record.outputs = {{"lambda", pair.lambda},
                        {"converged", pair.converged},
                        {"x", json_vector(grid->nodes)},
                        {"phi", json_vector(pair.phi.values)}};
  res.record.diagnostics = {{"residual", pair.residual}, {"iterations", pair.iterations}};
  res.exit_code = pair.converged ? kExitOk : kExitNonConvergence;
  emit_record(res.record, cmd.emit, cmd.out_path, eigen_csv(*grid, pair.phi));
  return res;
}

CmdResult cmd_solve(const SolveCmd& cmd) {
  validate(cmd.problem);
  const GridPtr grid = build_grid(cmd.problem.interval, cmd.n);
  Functionals f = make_functionals(grid, cmd.problem, cmd.alpha, cmd.beta);

  SolverOptions eig = cmd.solver;
  eig.multistart = std::max(2, cmd.solver.multistart / 2);
  const Eigenpair pair_p = first_eigenpair(f.asm_p, eig);
  const Eigenpair pair_q = first_eigenpair(f.asm_q, eig);
  const SeedHints hints{&pair_p.phi, &pair_q.phi};

  std::string method = cmd.method;
  if (method == "auto") {
    method = cmd.alpha < pair_p.lambda ? "global" : "nehari";
  }

  SolutionReport rep;
  if (method == "nehari") {
    rep = solve_nehari_min(f, cmd.solver, hints);
  } else if (method == "global") {
    rep = solve_global_min(f, cmd.solver, hints);
  } else if (method == "truncation") {
    if (!cmd.mu) {
      throw std::invalid_argument("solve --method truncation requires --mu (supersolution level)");
    }
    const double mu = *cmd.mu;
    if (!(mu > cmd.beta)) {
      throw std::invalid_argument("solve --method truncation requires mu > beta");
    }
    const double theta = cmd.alpha - cmd.beta;
    Functionals f_upper = make_functionals(grid, cmd.problem, mu + theta, mu);
    const SolutionReport upper = solve_nehari_min(f_upper, cmd.solver, hints);
    if (!upper.found()) {
      throw std::invalid_argument("truncation: no supersolution found at (mu + theta, mu)");
    }
    rep = solve_by_truncation(f, *upper.u, cmd.solver, hints);
  } else {
    throw std::invalid_argument("unknown solve method: " + method);
  }

  CmdResult res;
  res.record.command = "solve";
  res.record.timestamp = iso_timestamp();
  res.record.inputs = problem_inputs(cmd.problem, cmd.n);
  res.record.inputs["alpha"] = cmd.alpha;
  res.record.inputs["beta"] = cmd.beta;
  res.record.inputs["method"] = method;
  res.record.inputs["seed"] = cmd.solver.seed;
  if (cmd.mu) res.record.inputs["mu"] = *cmd.mu;
  res.record.outputs = report_json(rep, *grid, true);
  res.record.diagnostics = {{"lambda1_p", pair_p.lambda}, {"lambda1_q", pair_q.lambda}};
  res.exit_code = rep.status == SolveStatus::inconclusive ? kExitNonConvergence : kExitOk;

  std::string csv = "x,u\n";
  if (rep.u) {
    for (int i = 0; i < grid->n; ++i) {
      csv += format_sig(grid->nodes[static_cast<std::size_t>(i)]) + "," +
             format_sig((*rep.u)[i]) + "\n";
    }
  }
  emit_record(res.record, cmd.emit, cmd.out_path, csv);
  return res;
}

CmdResult cmd_curve(const CurveCmd& cmd) {
  validate(cmd.problem);
  if (!(cmd.theta_min < cmd.theta_max) || cmd.steps < 2) {
    throw std::invalid_argument("curve: require theta-min < theta-max and steps >= 2");
  }
  const GridPtr grid = build_grid(cmd.problem.interval, cmd.n);
  const ThresholdContext ctx = build_context(cmd.problem, grid, cmd.curve.solver);

  // incremental CSV flush so interrupts keep partial results
  std::ofstream csv_stream;
  const bool live_csv = cmd.emit == "csv" && !cmd.out_path.empty();
  if (live_csv) {
    csv_stream.open(cmd.out_path);
    if (!csv_stream) throw std::invalid_argument("cannot open output file: " + cmd.out_path);
    csv_stream << "theta,lambda_star,alpha,beta,bracket\n" << std::flush;
  }

  const CurveObserver observer = [&](const CurveSample& t) {
    if (!live_csv) return;
    csv_stream << format_sig(t.theta) << "," << format_sig(t.lambda_star) << ","
               << format_sig(t.lambda_star + t.theta) << "," << format_sig(t.lambda_star) << ","
               << format_sig(t.bracket_width) << "\n"
               << std::flush;
  };
  const CurveTrace trace =
      trace_curve(ctx, cmd.theta_min, cmd.theta_max, cmd.steps, cmd.curve, observer);
  const double tol = cmd.curve.tolerance(ctx.lambda1_q);
  const auto& mono = trace.monotonicity;

  CmdResult res;
  res.record.command = "curve";
  res.record.timestamp = iso_timestamp();
  res.record.inputs = problem_inputs(cmd.problem, cmd.n);
  res.record.inputs["theta_min"] = cmd.theta_min;
  res.record.inputs["theta_max"] = cmd.theta_max;
  res.record.inputs["steps"] = cmd.steps;
  res.record.inputs["seed"] = cmd.curve.solver.seed;

  nlohmann::json rows = nlohmann::json::array();
  bool any_inconclusive = false;
  for (const auto& s : trace.samples) {
    rows.push_back({{"theta", s.theta},
                    {"lambda_star", s.lambda_star},
                    {"alpha", s.lambda_star + s.theta},
                    {"beta", s.lambda_star},
                    {"bracket", s.bracket_width},
                    {"inconclusive", s.inconclusive}});
    any_inconclusive = any_inconclusive || s.inconclusive;
  }
  res.record.outputs = {{"samples", rows},
                        {"monotone_lambda_violations", mono.lambda_violations},
                        {"monotone_shifted_violations", mono.shifted_violations},
                        {"monotone_pass", mono.pass}};
  res.record.diagnostics = {{"lambda1_p", ctx.lambda1_p},
                            {"lambda1_q", ctx.lambda1_q},
                            {"alpha_star", ctx.alpha_star},
                            {"theta_star", ctx.theta_star},
                            {"theta_star_plus", ctx.theta_star_plus},
                            {"tolerance", tol}};
  res.exit_code = any_inconclusive ? kExitNonConvergence : kExitOk;

  if (!live_csv) {
    emit_record(res.record, cmd.emit, cmd.out_path, curve_csv(trace.samples));
  }
  return res;
}

CmdResult cmd_region(const RegionCmd& cmd) {
  validate(cmd.problem);
  if (cmd.alpha_grid.empty() || cmd.beta_grid.empty()) {
    throw std::invalid_argument("region: alpha and beta grids must be nonempty");
  }
  const GridPtr grid = build_grid(cmd.problem.interval, cmd.n);
  const ThresholdContext ctx = build_context(cmd.problem, grid, cmd.curve.solver);

  std::ofstream csv_stream;
  const bool live_csv = cmd.emit == "csv" && !cmd.out_path.empty();
  if (live_csv) {
    csv_stream.open(cmd.out_path);
    if (!csv_stream) throw std::invalid_argument("cannot open output file: " + cmd.out_path);
    csv_stream << "alpha,beta,verdict\n" << std::flush;
  }

  std::vector<RegionVerdict> verdicts;
  for (double beta : cmd.beta_grid) {
    for (double alpha : cmd.alpha_grid) {
      verdicts.push_back(region_classify(ctx, alpha, beta, cmd.curve));
      if (live_csv) {
        const auto& v = verdicts.back();
        csv_stream << format_sig(v.alpha) << "," << format_sig(v.beta) << ","
                   << to_string(v.verdict) << "\n"
                   << std::flush;
      }
    }
  }

  CmdResult res;
  res.record.command = "region";
  res.record.timestamp = iso_timestamp();
  res.record.inputs = problem_inputs(cmd.problem, cmd.n);
  res.record.inputs["alpha_grid"] = cmd.alpha_grid;
  res.record.inputs["beta_grid"] = cmd.beta_grid;
  res.record.inputs["seed"] = cmd.curve.solver.seed;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& v : verdicts) {
    rows.push_back({{"alpha", v.alpha},
                    {"beta", v.beta},
                    {"verdict", std::string(to_string(v.verdict))},
                    {"theorem", v.theorem_ref}});
  }
  res.record.outputs = {{"verdicts", rows}};
  res.record.diagnostics = {{"lambda1_p", ctx.lambda1_p},
                            {"lambda1_q", ctx.lambda1_q},
                            {"alpha_star", ctx.alpha_star}};
  if (!live_csv) {
    emit_record(res.record, cmd.emit, cmd.out_path, region_csv(verdicts));
  }
  return res;
}

CmdResult cmd_proptest(const ProptestCmd& cmd) {
  if (cmd.cases < 1) {
    throw std::invalid_argument("proptest: require cases >= 1");
  }
  std::mt19937_64 rng(cmd.seed);
  std::uniform_real_distribution<double> val(-3.0, 3.0);
  std::uniform_real_distribution<double> gam_i(1.1, 4.0);
  std::uniform_real_distribution<double> gam_ii(2.0, 4.0);
  std::uniform_real_distribution<double> gam_iii(0.3, 3.0);

  int elem_failures = 0;
  for (int k = 0; k < cmd.cases; ++k) {
    const double a = val(rng), b = val(rng);
    if (elementary_inequality_check(a, b, gam_i(rng), ElemVariant::i).violated) ++elem_failures;
    if (elementary_inequality_check(a, b, gam_ii(rng), ElemVariant::ii).violated) ++elem_failures;
    if (elementary_inequality_check(a, b, gam_iii(rng), ElemVariant::iii).violated) ++elem_failures;
  }

  const GridPtr grid = build_grid({0.0, 1.0}, 6);
  std::uniform_real_distribution<double> fpos(0.3, 1.8);
  std::uniform_real_distribution<double> gpos(0.05, 1.8);
  std::uniform_real_distribution<double> expo(1.1, 3.5);
  std::uniform_real_distribution<double> coef(1.0, 3.0);
  std::uniform_real_distribution<double> mult(0.2, 3.0);

  std::uniform_real_distribution<double> gap(0.0, 1.0);
  int picone_failures = 0;
  int equality_failures = 0;
  for (int k = 0; k < cmd.cases; ++k) {
    GridFunction f(grid), g(grid);
    for (double& v : f.values) v = fpos(rng);
    for (double& v : g.values) v = gpos(rng);
    double r1 = expo(rng), r2 = expo(rng);
    if (r2 > r1) std::swap(r1, r2);
    const double al = coef(rng), be = coef(rng);
    for (auto variant : {PiconeVariant::i, PiconeVariant::ii, PiconeVariant::iv}) {
      if (picone_check(f, g, r1, r2, variant, al, be).violated) ++picone_failures;
    }
    // variant iii lives on exponent gaps r1 - r2 <= 1
    const double r2_narrow = expo(rng);
    if (picone_check(f, g, r2_narrow + gap(rng), r2_narrow, PiconeVariant::iii, al, be)
            .violated) {
      ++picone_failures;
    }
    // equality case f = c g (variants i and ii are sharp there)
    GridFunction gc(grid);
    for (double& v : gc.values) v = fpos(rng);
    GridFunction fc(grid);
    const double c = mult(rng);
    for (int i = 0; i < fc.size(); ++i) fc[i] = c * gc[i];
    for (auto variant : {PiconeVariant::i, PiconeVariant::ii}) {
      const auto rep = picone_check(fc, gc, r1, r2, variant, al, be);
      if (rep.max_abs_slack >= 1e-12) ++equality_failures;
    }
  }

  CmdResult res;
  res.record.command = "proptest";
  res.record.timestamp = iso_timestamp();
  res.record.inputs = {{"seed", cmd.seed}, {"cases", cmd.cases}};
  res.record.outputs = {{"elementary_cases", cmd.cases * 3},
                        {"elementary_failures", elem_failures},
                        {"picone_cases", cmd.cases * 4},
                        {"picone_failures", picone_failures},
                        {"equality_cases", cmd.cases * 2},
                        {"equality_failures", equality_failures},
                        {"pass", elem_failures == 0 && picone_failures == 0 && equality_failures == 0}};
  res.record.diagnostics = nlohmann::json::object();
  res.exit_code = (elem_failures || picone_failures || equality_failures) ? kExitNonConvergence
                                                                          : kExitOk;
  emit_record(res.record, cmd.emit, cmd.out_path,
              "suite,cases,failures\nelementary," + std::to_string(cmd.cases * 3) + "," +
                  std::to_string(elem_failures) + "\npicone," + std::to_string(cmd.cases * 4) +
                  "," + std::to_string(picone_failures) + "\nequality," +
                  std::to_string(cmd.cases * 2) + "," + std::to_string(equality_failures) + "\n");
  return res;
}

CmdResult cmd_li_check(const LiCheckCmd& cmd) {
  validate(cmd.problem);
  const GridPtr grid = build_grid(cmd.problem.interval, cmd.n);
  const ThresholdContext ctx = build_context(cmd.problem, grid, cmd.solver);
  const bool window = li_condition(cmd.problem);
  const double distance = li_distance(ctx.pair_p, ctx.pair_q);
  const double gap = ctx.alpha_star - ctx.lambda1_p;

  CmdResult res;
  res.record.command = "li-check";
  res.record.timestamp = iso_timestamp();
  res.record.inputs = problem_inputs(cmd.problem, cmd.n);
  res.record.inputs["seed"] = cmd.solver.seed;
  res.record.outputs = {{"exponent_window", window},
                        {"li_distance", distance},
                        {"li_numeric", distance > 1e-3},
                        {"alpha_star_gap", gap},
                        {"lambda1_p", ctx.lambda1_p},
                        {"lambda1_q", ctx.lambda1_q},
                        {"alpha_star", ctx.alpha_star},
                        {"theta_star", ctx.theta_star},
                        {"theta_star_plus", ctx.theta_star_plus}};
  res.record.diagnostics = {{"residual_p", ctx.pair_p.residual},
                            {"residual_q", ctx.pair_q.residual}};
  std::string csv = "quantity,value\nli_distance," + format_sig(distance) + "\nalpha_star_gap," +
                    format_sig(gap) + "\n";
  emit_record(res.record, cmd.emit, cmd.out_path, csv);
  return res;
}

}  // namespace fracpq::io
