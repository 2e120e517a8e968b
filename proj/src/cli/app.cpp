#include "cemas/cli/app.hpp"

#include "cemas/cli/report.hpp"
#include "cemas/cli/scenario_io.hpp"
#include "cemas/equilibrium.hpp"
#include "cemas/errors.hpp"
#include "cemas/infinite_horizon.hpp"
#include "cemas/model.hpp"
#include "cemas/shaping.hpp"
#include "cemas/tracking.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

namespace cemas::cli {

using nlohmann::json;

namespace {

struct Options {
  std::string scenario;
  std::string out;
  std::string format = "json";
  double tol = 1e-8;
  int max_iters = 10000;
  std::optional<double> q;
  std::optional<double> threshold;
  double d_rho = 1.0;
  int iters = 30;
  std::string mode = "corner";
  int horizon_cap = 60;
  std::string solution;
};

/// Serialized result of one subcommand; csv is used for --format csv.
struct Output {
  json doc;
  std::string csv;
  int exit_code = 0;
};

SolverOptions solver_options(const Options& o) {
  SolverOptions s;
  s.residual_tol = o.tol;
  s.max_iters = o.max_iters;
  return s;
}

json options_json(const Options& o) {
  json j = {{"tol", o.tol}, {"max_iters", o.max_iters}};
  if (o.q) j["q"] = *o.q;
  return j;
}

ScenarioFile load(const Options& o) {
  ScenarioFile file = load_scenario(o.scenario);
  if (o.q) {
    if (!(*o.q > 0.0)) throw InvalidInput("--q must be positive");
    file.scenario = with_uniform_q(file.scenario, *o.q);
    if (file.tracking) file.tracking->base = file.scenario;
  }
  if (o.threshold) file.scenario.threshold = *o.threshold;
  return file;
}

SearchMode parse_mode(const std::string& text) {
  if (text == "corner") return SearchMode::corner();
  if (text.rfind("grid:", 0) == 0) {
    try {
      size_t used = 0;
      const int points = std::stoi(text.substr(5), &used);
      if (used == text.size() - 5 && points >= 1) return SearchMode::grid(points);
    } catch (const std::exception&) {
    }
  }
  throw InvalidInput("--mode must be 'corner' or 'grid:<points>'");
}

json residuals_json(const VerificationReport& r) {
  return {{"balance_residual", r.balance_residual},   {"feasibility_slack", r.feasibility_slack},
          {"complementarity_residual", r.complementarity_residual}, {"price_negativity", r.price_negativity},
          {"best_response_gap", r.best_response_gap}, {"passed", r.passed}};
}

Output cmd_solve(const Options& o) {
  const ScenarioFile file = load(o);
  const EquilibriumSolution sol = solve_welfare_finite(file.scenario, solver_options(o));
  return {{{"command", "solve"}, {"options", options_json(o)}, {"solution", solution_to_json(sol)}},
          solution_csv(file.scenario, sol)};
}

Output cmd_track(const Options& o) {
  const ScenarioFile file = load(o);
  if (!file.tracking) throw InvalidInput(o.scenario + ": no 'tracking' block");
  const Scenario regulation = to_regulation(*file.tracking);
  const EquilibriumSolution error_sol = solve_welfare_finite(regulation, solver_options(o));
  const EquilibriumSolution sol = recover_tracking(error_sol, *file.tracking);
  return {{{"command", "track"},
           {"options", options_json(o)},
           {"solution", solution_to_json(sol)},
           {"regulation_welfare", error_sol.welfare}},
          solution_csv(file.scenario, sol)};
}

Output cmd_bounds(const Options& o) {
  const ScenarioFile file = load(o);
  const BoundParams p = bound_params(file.scenario);
  const double qp = delta_max_qp(p);
  const double dp = delta_max_dp(p);
  json bound_qp = json::array();
  json bound_dp = json::array();
  std::vector<std::vector<double>> rows;
  for (int k = 0; k < p.horizon; ++k) {
    const double bq = price_upper_bound(p, std::isfinite(qp) ? qp : 0.0, BoundMethod::qp, k);
    const double bd = price_upper_bound(p, std::isfinite(dp) ? dp : 0.0, BoundMethod::dp, k);
    bound_qp.push_back(bq);
    bound_dp.push_back(bd);
    rows.push_back({static_cast<double>(k), p.supply_totals[k], bq, bd});
  }
  json doc = {{"command", "bounds"},
              {"params",
               {{"alpha", p.alpha},
                {"beta", p.beta},
                {"gamma", p.gamma},
                {"rho", p.rho},
                {"n", p.n},
                {"horizon", p.horizon},
                {"supply_totals", vector_to_json(p.supply_totals)},
                {"threshold", p.threshold}}},
              {"delta_max_qp", qp},
              {"delta_max_dp", dp},
              {"price_bound_qp", std::move(bound_qp)},
              {"price_bound_dp", std::move(bound_dp)}};
  return {std::move(doc), csv_table({"k", "C", "price_bound_qp", "price_bound_dp"}, rows)};
}

Output cmd_shape(const Options& o) {
  const ScenarioFile file = load(o);
  if (!file.scenario.threshold) throw InvalidInput("shape needs --threshold or a threshold in the scenario");
  const SearchMode mode = parse_mode(o.mode);
  const ShapingResult r =
      bisection_shape(file.scenario, *file.scenario.threshold, o.d_rho, o.iters, std::nullopt, mode, solver_options(o));
  json trace = json::array();
  std::vector<std::vector<double>> rows;
  for (size_t k = 0; k < r.trace.size(); ++k) {
    const auto& s = r.trace[k];
    trace.push_back({{"k", k}, {"lower", s.lower}, {"upper", s.upper}, {"midpoint", s.midpoint}, {"price", s.price}});
    rows.push_back({static_cast<double>(k), s.lower, s.upper, s.midpoint, s.price});
  }
  json options = options_json(o);
  options["threshold"] = *file.scenario.threshold;
  options["d_rho"] = o.d_rho;
  options["iters"] = o.iters;
  options["mode"] = o.mode;
  json doc = {{"command", "shape"},
              {"options", std::move(options)},
              {"delta_max", r.delta_max},
              {"converged", r.converged},
              {"iterations", r.iterations},
              {"trace", std::move(trace)}};
  return {std::move(doc), csv_table({"k", "lower", "upper", "midpoint", "price"}, rows)};
}

Output cmd_infinite(const Options& o) {
  const ScenarioFile file = load(o);
  const Vector x0 = stacked_initial_state(file.scenario);
  const ZeroPriceCertificate cert = zero_price_certificate(file.scenario, x0);
  json doc = {{"command", "infinite"},
              {"options", options_json(o)},
              {"radius", cert.radius},
              {"initial_norm", x0.norm()},
              {"inside", cert.inside}};
  Vector prices;
  if (cert.inside) {
    doc["invariance_verified"] = cert.invariance_verified;
    doc["n_bar"] = *cert.n_bar;
    prices = cert.price_tail.values();
  } else {
    json options = options_json(o);
    options["horizon_cap"] = o.horizon_cap;
    doc["options"] = std::move(options);
    const PriceDecay decay = zero_price_time(file.scenario, x0, o.horizon_cap, 1e-6, solver_options(o));
    doc["n_bar"] = decay.n_bar;
    doc["horizon"] = decay.horizon;
    doc["residuals"] = residuals_json(decay.solution.residuals);
    prices = decay.solution.prices.values();
  }
  doc["prices"] = vector_to_json(prices);
  std::vector<std::vector<double>> rows;
  for (Eigen::Index t = 0; t < prices.size(); ++t) rows.push_back({static_cast<double>(t), prices[t]});
  return {std::move(doc), csv_table({"t", "lambda"}, rows)};
}

Output cmd_verify(const Options& o) {
  const ScenarioFile file = load(o);
  EquilibriumSolution sol;
  if (o.solution.empty()) {
    sol = solve_welfare_finite(file.scenario, solver_options(o));
  } else {
    std::ifstream in(o.solution);
    if (!in) throw InvalidInput("cannot open solution file '" + o.solution + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw InvalidInput(o.solution + ": " + e.what());
    }
    sol = solution_from_json(doc, file.scenario);
  }
  const VerificationReport r = verify_equilibrium(file.scenario, sol);
  std::vector<std::vector<double>> rows = {{r.balance_residual, r.feasibility_slack, r.complementarity_residual,
                                            r.price_negativity, r.best_response_gap, r.passed ? 1.0 : 0.0}};
  return {{{"command", "verify"}, {"residuals", residuals_json(r)}},
          csv_table({"balance_residual", "feasibility_slack", "complementarity_residual", "price_negativity",
                     "best_response_gap", "passed"},
                    rows),
          r.passed ? 0 : 1};
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--scenario", o.scenario, "Scenario file (JSON)")->required();
  cmd->add_option("--out", o.out, "Write the report here instead of standard output");
  cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--tol", o.tol, "Solver residual tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", o.max_iters, "Solver iteration budget")->check(CLI::PositiveNumber);
  cmd->add_option("--q", o.q, "Replace every Q_i by q I");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Competitive-equilibrium pricing and social shaping for multi-agent LQR"};
  app.require_subcommand(1);
  Options o;

  std::function<Output(const Options&)> handler;
  auto add = [&](const char* name, const char* help, Output (*fn)(const Options&)) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, o);
    cmd->callback([&handler, fn] { handler = fn; });
    return cmd;
  };

  add("solve", "Finite-horizon competitive equilibrium", cmd_solve);
  CLI::App* bounds = add("bounds", "Analytic bounds on the state weight", cmd_bounds);
  bounds->add_option("--threshold", o.threshold, "Price threshold");
  CLI::App* shape = add("shape", "Bisection for the largest admissible state weight", cmd_shape);
  shape->add_option("--threshold", o.threshold, "Price threshold");
  shape->add_option("--d-rho", o.d_rho, "Initial upper end of the bisection")->check(CLI::PositiveNumber);
  shape->add_option("--iters", o.iters, "Bisection iterations")->check(CLI::PositiveNumber);
  shape->add_option("--mode", o.mode, "corner or grid:<points>");
  CLI::App* infinite = add("infinite", "Zero-price certificate and price decay", cmd_infinite);
  infinite->add_option("--horizon-cap", o.horizon_cap, "Initial truncation length")->check(CLI::PositiveNumber);
  CLI::App* verify = add("verify", "Check the equilibrium conditions of a solution", cmd_verify);
  verify->add_option("--solution", o.solution, "Solution file written by solve (default: solve first)");
  add("track", "Reference tracking through error coordinates", cmd_track);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const auto start = std::chrono::steady_clock::now();
  int code = 0;
  try {
    const Output result = handler(o);
    const std::string text = o.format == "csv" ? result.csv : to_json_text(result.doc);
    if (o.out.empty()) {
      out << text;
    } else {
      std::ofstream file(o.out);
      if (!file) throw InvalidInput("cannot write '" + o.out + "'");
      file << text;
    }
    code = result.exit_code;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  err << "elapsed: " << elapsed.count() << " s\n";
  return code;
}

}  // namespace cemas::cli
