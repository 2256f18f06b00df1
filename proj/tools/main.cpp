#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "output.hpp"
#include "rankrace/convergence_lab.hpp"
#include "rankrace/errors.hpp"
#include "rankrace/mf_principal.hpp"
#include "rankrace/mfg_equilibrium.hpp"
#include "rankrace/nplayer_game.hpp"
#include "rankrace/nplayer_principal.hpp"
#include "specs.hpp"

namespace rr = rankrace;
using namespace rankrace::cli;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

[[noreturn]] void invalid(const std::string& msg) {
  throw rr::Error(rr::ErrorKind::InvalidParameter, msg);
}

std::string config_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::string out;
    for (const auto& x : v) out += (out.empty() ? "" : ",") + config_value(x);
    return out;
  }
  return v.dump();
}

// Splices `--config FILE` into the argument list: each key of the flat JSON
// object becomes `--key value` placed before the user's own flags, so the
// flags win (options keep their last value). Arrays become comma lists,
// objects stay JSON text, and booleans switch flags on or off.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string file;
    std::size_t width = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      width = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      width = 1;
    } else {
      continue;
    }
    std::ifstream in(file);
    if (!in) invalid("cannot read config file " + file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      invalid("malformed config " + file + ": " + e.what());
    }
    if (!j.is_object()) invalid("config must be a JSON object");
    std::vector<std::string> injected;
    for (const auto& [key, v] : j.items()) {
      if (v.is_boolean()) {
        injected.push_back("--" + key + "=" + (v.get<bool>() ? "true" : "false"));
      } else {
        injected.push_back("--" + key);
        injected.push_back(config_value(v));
      }
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + width));
    // Right after the subcommand name, the first argument.
    args.insert(args.begin() + 2, injected.begin(), injected.end());
    break;
  }
  return args;
}

ordered_json typed(const std::string& s) {
  const char* end = s.data() + s.size();
  long long i = 0;
  if (const auto res = std::from_chars(s.data(), end, i); !s.empty() && res.ec == std::errc() && res.ptr == end) {
    return i;
  }
  double x = 0.0;
  const auto res = std::from_chars(s.data(), end, x);
  if (!s.empty() && res.ec == std::errc() && res.ptr == end) return x;
  return s;
}

// Every effective option of the subcommand except output plumbing, which
// does not affect the numbers.
ordered_json config_echo(const CLI::App* app) {
  ordered_json j = ordered_json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "config" || name == "out" || name == "format" ||
        name == "threads" || name == "out-dir") {
      continue;
    }
    std::string value;
    if (opt->count() > 0) {
      value = opt->as<std::string>();
    } else {
      value = opt->get_default_str();
    }
    if (!value.empty()) j[name] = typed(value);
  }
  return j;
}

struct Output {
  std::string out;
  std::string format;
};

void add_output(CLI::App* sub, Output& o) {
  sub->add_option("--out", o.out, "output file (stdout when omitted)");
  sub->add_option("--format", o.format, "csv or json (default from the --out extension)");
}

// ---------------------------------------------------------------------------
// Parameter sets

struct RewardOpts {
  std::string kind = "power";
  double B = 1.0;
  double alpha = 1.0;
  double q = 0.0;
  bool force = false;
  std::string levels;
  std::string steps;
};

void add_reward(CLI::App* sub, RewardOpts& r) {
  sub->add_option("--reward", r.kind, "power, staircase, or a JSON descriptor (inline or file)");
  sub->add_option("--B", r.B, "power: budget");
  sub->add_option("--alpha", r.alpha, "power: cut-off in (0, 1]");
  sub->add_option("--q", r.q, "power: shape exponent >= 0");
  sub->add_flag("--force", r.force, "power: allow alpha = 1 with 0 < q < 1");
  sub->add_option("--levels", r.levels, "staircase: step levels, e.g. 2,1,0");
  sub->add_option("--steps", r.steps, "staircase: grid 0 = r_0 < ... < r_n = 1, e.g. 0,0.3,0.6,1");
}

rr::MFRewardScheme make_reward(const RewardOpts& r) {
  if (r.kind == "power") return rr::power_reward({r.B, r.alpha, r.q, 1.0, r.force});
  if (r.kind == "staircase") {
    if (r.levels.empty() || r.steps.empty()) invalid("staircase needs --levels and --steps");
    return rr::validate_reward(rr::staircase_fn(parse_list(r.levels), parse_list(r.steps)));
  }
  return rr::validate_reward(piecewise_from_json(load_json_text(r.kind)));
}

// --costs wins; otherwise --cost, either a constant or a descriptor sampled at n / N.
std::vector<double> n_costs(std::size_t N, const std::string& costs, const std::string& cost) {
  if (!costs.empty()) {
    auto c = parse_list(costs);
    if (c.size() != N) invalid("--costs needs N = " + std::to_string(N) + " entries c_0..c_{N-1}");
    return c;
  }
  return rr::discretize_cost(parse_cost(cost), N);
}

void sample_profile(Table& t, std::size_t grid, const std::function<std::vector<double>(double)>& row) {
  if (grid == 0) invalid("--grid must be positive");
  for (std::size_t i = 0; i <= grid; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(grid);
    std::vector<double> values{r};
    for (double x : row(r)) values.push_back(x);
    t.rows.push_back(std::move(values));
  }
}

Table trajectory_table(const rr::Trajectory& traj) {
  Table t{"trajectory", {"t", "rho"}, {}};
  for (std::size_t i = 0; i < traj.times.size(); ++i) t.rows.push_back({traj.times[i], traj.states[i]});
  return t;
}

ordered_json fit_summary(const rr::RateFit& f) {
  ordered_json j;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["r_squared"] = f.r_squared;
  j["contaminated"] = f.contaminated;
  j["exact"] = f.exact;
  return j;
}

void put_fit(ordered_json& summary, const std::string& prefix, const rr::RateFit& f) {
  const ordered_json fit = fit_summary(f);
  for (const auto& [k, v] : fit.items()) summary[prefix + "_" + k] = v;
}

// ---------------------------------------------------------------------------
// Commands

struct EquilibriumArgs {
  RewardOpts reward;
  std::string cost = "1";
  std::size_t grid = 1000;
  std::string betas;
};

Report run_mf_equilibrium(const EquilibriumArgs& a) {
  const rr::MFRewardScheme R = make_reward(a.reward);
  const rr::MFCost cost = parse_cost(a.cost);
  const rr::MFEquilibrium eq = rr::solve_equilibrium(R, cost);
  Report rep;
  Table prof{"profile", {"r", "R", "v", "lambda"}, {}};
  sample_profile(prof, a.grid, [&](double r) {
    return std::vector<double>{R(r), eq.value(r), eq.effort(r)};
  });
  rep.tables.push_back(std::move(prof));
  rep.tables.push_back(trajectory_table(eq.trajectory));
  rep.summary["budget"] = R.budget();
  rep.summary["v0"] = eq.value(0.0);
  rep.summary["v0_probabilistic"] = rr::value_probabilistic(R);
  rep.summary["terminal_state"] = eq.trajectory.terminal_state;
  if (eq.trajectory.frozen_after) rep.summary["frozen_after"] = *eq.trajectory.frozen_after;
  if (a.reward.kind == "power" && a.reward.alpha < 1.0) {
    rep.summary["T_alpha"] = rr::quantile(eq.trajectory, a.reward.alpha);
  }
  if (!a.betas.empty()) {
    for (double b : parse_list(a.betas)) {
      if (!(b > 0.0 && b < 1.0)) invalid("--beta entries must lie in (0, 1)");
      rep.summary["T_" + format_number(b)] = rr::quantile(eq.trajectory, b);
    }
  }
  return rep;
}

struct PrincipalArgs {
  double alpha = 0.5;
  double B = 1.0;
  std::string cost = "1";
  std::size_t grid = 1000;
};

Report run_mf_principal(const PrincipalArgs& a) {
  const rr::MFCost cost = parse_cost(a.cost);
  const rr::PrincipalSolution s = rr::optimal_reward({a.alpha, a.B, cost});
  const rr::MFEquilibrium eq = rr::solve_equilibrium(s.reward, cost);
  Report rep;
  Table prof{"profile", {"r", "R", "lambda"}, {}};
  sample_profile(prof, a.grid, [&](double r) {
    return std::vector<double>{s.reward(r), s.effort(r)};
  });
  rep.tables.push_back(std::move(prof));
  rep.tables.push_back(trajectory_table(eq.trajectory));
  rep.summary["T_star"] = s.minimal_time;
  rep.summary["C"] = s.constant_C;
  if (s.constant_C_prime) rep.summary["C_prime"] = *s.constant_C_prime;
  rep.summary["budget"] = s.reward.budget();
  rep.summary["R_at_0"] = s.reward(0.0);
  rep.summary["R_before_alpha"] = s.reward(a.alpha);
  rep.summary["T_uniform_cutoff"] =
      rr::completion_time(rr::power_reward({a.B, a.alpha, 0.0, 1.0}), a.alpha, cost);
  return rep;
}

struct MinimalBudgetArgs {
  double T = 0.0;
  double alpha = 0.5;
  std::string cost = "1";
};

Report run_minimal_budget(const MinimalBudgetArgs& a) {
  const rr::MFCost cost = parse_cost(a.cost);
  const double B = rr::minimal_budget(a.T, a.alpha, cost);
  Report rep;
  rep.tables.push_back({"result", {"T", "alpha", "B"}, {{a.T, a.alpha, B}}});
  rep.summary["B_star"] = B;
  rep.summary["C"] = rr::principal_constant(a.alpha, cost);
  return rep;
}

struct NSolveArgs {
  std::string rewards;
  std::string costs;
  std::string cost = "1";
  std::size_t n0 = 0;
};

rr::NPlayerSpec make_spec(const std::string& rewards, const std::string& costs, const std::string& cost) {
  rr::NPlayerSpec spec;
  spec.rewards = parse_list(rewards);
  spec.N = spec.rewards.size();
  spec.costs = n_costs(spec.N, costs, cost);
  return spec;
}

Report run_nplayer_solve(const NSolveArgs& a) {
  const rr::NPlayerSpec spec = make_spec(a.rewards, a.costs, a.cost);
  const rr::NEquilibrium eq = rr::solve_recursion(spec);
  Report rep;
  Table t{"equilibrium", {"n", "R_next", "c", "v", "lambda"}, {}};
  for (std::size_t n = 0; n < spec.N; ++n) {
    t.rows.push_back({static_cast<double>(n), spec.reward(n + 1), spec.costs[n], eq.values[n],
                      eq.efforts[n]});
  }
  rep.tables.push_back(std::move(t));
  rep.summary["v0"] = eq.values[0];
  rep.summary["v_N"] = eq.values[spec.N];
  rep.summary["residual"] = rr::difference_residual(eq);
  if (a.n0 > 0) {
    rep.summary["ET"] = rr::expected_completion(eq, a.n0);
    rep.summary["variance"] = rr::completion_variance(eq, a.n0);
  }
  return rep;
}

struct SimulateArgs {
  std::string rewards;
  std::string costs;
  std::string cost = "1";
  std::size_t n0 = 0;
  std::size_t paths = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool samples = false;
};

Report run_nplayer_simulate(const SimulateArgs& a) {
  const rr::NPlayerSpec spec = make_spec(a.rewards, a.costs, a.cost);
  const rr::NEquilibrium eq = rr::solve_recursion(spec);
  const rr::SimResult sim = rr::simulate(spec, a.n0, a.paths, a.seed, a.threads);
  const double et = rr::expected_completion(eq, a.n0);
  Report rep;
  rep.tables.push_back({"estimate",
                        {"N", "n0", "paths", "mean", "stderr", "ET", "z"},
                        {{static_cast<double>(spec.N), static_cast<double>(a.n0),
                          static_cast<double>(sim.paths), sim.mean, sim.std_error, et,
                          (sim.mean - et) / sim.std_error}}});
  if (a.samples) {
    Table s{"samples", {"path", "T"}, {}};
    for (std::size_t p = 0; p < sim.samples.size(); ++p) {
      s.rows.push_back({static_cast<double>(p), sim.samples[p]});
    }
    rep.tables.push_back(std::move(s));
  }
  rep.summary["mean"] = sim.mean;
  rep.summary["stderr"] = sim.std_error;
  rep.summary["ET"] = et;
  rep.summary["within_3_stderr"] = std::abs(sim.mean - et) <= 3.0 * sim.std_error;
  return rep;
}

struct NPrincipalArgs {
  std::size_t N = 0;
  std::size_t n0 = 0;
  double B = 1.0;
  std::string costs;
  std::string cost = "1";
};

rr::NPrincipalProblem make_problem(const NPrincipalArgs& a) {
  if (a.N < 2) invalid("--N must be at least 2");
  return {a.N, a.n0, a.B, n_costs(a.N, a.costs, a.cost)};
}

Report run_nplayer_principal(const NPrincipalArgs& a) {
  const rr::NPrincipalProblem p = make_problem(a);
  const rr::NPrincipalSolution s = rr::optimal_reward_n(p);
  Report rep;
  Table t{"scheme", {"n", "R", "c_prev", "lambda_prev"}, {}};
  for (std::size_t n = 1; n <= p.N; ++n) {
    t.rows.push_back({static_cast<double>(n), s.rewards[n - 1], p.costs[n - 1], s.efforts[n - 1]});
  }
  rep.tables.push_back(std::move(t));
  rep.summary["ET"] = s.expected_time;
  rep.summary["C"] = s.constant_C;
  rep.summary["theta"] = s.theta;
  double total = 0.0;
  for (double r : s.rewards) total += r;
  rep.summary["total_reward"] = total;
  return rep;
}

Report run_oracle_check(const NPrincipalArgs& a) {
  const rr::NPrincipalProblem p = make_problem(a);
  const rr::NCostCheck check = rr::check_cost_assumption_n(p);
  const rr::OracleResult o = rr::brute_force_oracle(p);
  std::optional<rr::NPrincipalSolution> s;
  if (check.ok) s = rr::optimal_reward_n(p);
  const double nan = std::nan("");
  Report rep;
  Table t{"comparison", {"n", "R_closed", "R_oracle"}, {}};
  for (std::size_t n = 1; n <= p.N; ++n) {
    t.rows.push_back({static_cast<double>(n), s ? s->rewards[n - 1] : nan, o.rewards[n - 1]});
  }
  rep.tables.push_back(std::move(t));
  rep.summary["cost_assumption"] = check.ok;
  if (check.witness) rep.summary["witness"] = *check.witness;
  rep.summary["ET_oracle"] = o.expected_time;
  rep.summary["oracle_fallback"] = o.used_fallback;
  rep.summary["oracle_iterations"] = o.iterations;
  if (s) {
    rep.summary["ET_closed"] = s->expected_time;
    rep.summary["relative_gap"] = std::abs(o.expected_time - s->expected_time) / s->expected_time;
  }
  return rep;
}

struct DiscretizeArgs {
  RewardOpts reward;
  std::size_t N = 10;
  std::string method = "sampling";
  double K = 0.0;
};

Report run_discretize(const DiscretizeArgs& a) {
  const rr::MFRewardScheme R = make_reward(a.reward);
  if (a.N < 1) invalid("--N must be positive");
  std::vector<double> Rn;
  if (a.method == "sampling") {
    Rn = rr::discretize_sampling(R, a.N);
  } else if (a.method == "average") {
    Rn = rr::discretize_average(R, a.N);
  } else {
    invalid("--method must be sampling or average");
  }
  Report rep;
  Table t{"rewards", {"n", "R"}, {}};
  double total = 0.0;
  for (std::size_t n = 1; n <= a.N; ++n) {
    t.rows.push_back({static_cast<double>(n), Rn[n - 1]});
    total += Rn[n - 1];
  }
  rep.tables.push_back(std::move(t));
  rep.summary["budget"] = R.budget();
  rep.summary["per_capita"] = total / static_cast<double>(a.N);
  if (a.K > 0.0) {
    std::vector<double> partition{0.0};
    for (double b : rr::interior_breakpoints(R.fn(), rr::PiecewiseFn::constant(1.0))) partition.push_back(b);
    partition.push_back(1.0);
    const rr::DiscretizationReport d = rr::check_discretization(Rn, R, partition, a.K);
    rep.summary["max_deviation"] = d.max_deviation;
    rep.summary["bound"] = a.K / static_cast<double>(a.N);
    rep.summary["passed"] = d.passed;
  }
  return rep;
}

struct ConvergeValueArgs {
  RewardOpts reward;
  std::string cost = "1";
  std::string Ns = "16:4096";
};

Report run_converge_value(const ConvergeValueArgs& a) {
  const rr::MFRewardScheme R = make_reward(a.reward);
  const auto Ns = parse_ladder(a.Ns);
  const rr::ValueConvergence vc = rr::value_convergence_experiment(R, parse_cost(a.cost), Ns);
  Report rep;
  Table t{"errors", {"N", "value_error", "effort_error", "excluded"}, {}};
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    t.rows.push_back({static_cast<double>(Ns[i]), vc.values.errors[i], vc.efforts.errors[i],
                      vc.values.excluded[i] ? 1.0 : 0.0});
  }
  rep.tables.push_back(std::move(t));
  put_fit(rep.summary, "value", vc.values);
  put_fit(rep.summary, "effort", vc.efforts);
  return rep;
}

struct ConvergePrincipalArgs {
  double alpha = 0.5;
  double B = 1.0;
  std::string cost = "1";
  std::string Ns = "16:4096";
};

Report run_converge_principal(const ConvergePrincipalArgs& a) {
  const auto Ns = parse_ladder(a.Ns);
  const rr::PrincipalConvergence pc =
      rr::principal_convergence_experiment(a.alpha, a.B, parse_cost(a.cost), Ns);
  Report rep;
  Table t{"errors", {"N", "ET", "time_error", "reward_error", "C_N"}, {}};
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    t.rows.push_back({static_cast<double>(Ns[i]), pc.expected_times[i], pc.times.errors[i],
                      pc.rewards.errors[i], pc.constants[i]});
  }
  rep.tables.push_back(std::move(t));
  rep.summary["T_star"] = pc.minimal_time;
  rep.summary["C"] = pc.constant_C;
  put_fit(rep.summary, "time", pc.times);
  put_fit(rep.summary, "reward", pc.rewards);
  return rep;
}

Report run_eps_optimal(const ConvergePrincipalArgs& a) {
  const auto Ns = parse_ladder(a.Ns);
  const rr::EpsOptimality eo = rr::eps_optimality_experiment(a.alpha, a.B, parse_cost(a.cost), Ns);
  Report rep;
  Table t{"gaps", {"N", "gap"}, {}};
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    t.rows.push_back({static_cast<double>(Ns[i]), eo.signed_gaps[i]});
    min_gap = std::min(min_gap, eo.signed_gaps[i]);
  }
  rep.tables.push_back(std::move(t));
  rep.summary["min_gap"] = min_gap;
  put_fit(rep.summary, "gap", eo.gaps);
  return rep;
}

struct SizeEffectArgs {
  std::string mode = "fixed-proportion";
  double alpha = 0.5;
  double B = 1.0;
  std::size_t n0 = 3;
  double K = 32.0;
  double cost = 1.0;
  std::string Ns = "4:4096";
};

Report run_size_effect(const SizeEffectArgs& a) {
  const auto Ns = parse_ladder(a.Ns);
  Report rep;
  if (a.mode == "fixed-proportion") {
    const rr::SizeEffectSeries s = rr::size_effect_fixed_proportion(a.alpha, a.B, a.cost, Ns);
    Table t{"size_effect", {"log2N", "N", "ET"}, {}};
    for (std::size_t i = 0; i < s.Ns.size(); ++i) {
      const double N = static_cast<double>(s.Ns[i]);
      t.rows.push_back({std::log2(N), N, s.expected_times[i]});
    }
    rep.tables.push_back(std::move(t));
    rep.summary["T_star"] = rr::optimal_reward({a.alpha, a.B, rr::MFCost::constant(a.cost)}).minimal_time;
  } else if (a.mode == "fixed-count") {
    const rr::SizeEffectSeries s = rr::size_effect_fixed_count(a.n0, a.K, a.cost, Ns);
    Table t{"size_effect", {"log2N", "N", "ET", "ET_display"}, {}};
    for (std::size_t i = 0; i < s.Ns.size(); ++i) {
      const double N = static_cast<double>(s.Ns[i]);
      t.rows.push_back({std::log2(N), N, s.expected_times[i], s.display_times[i]});
    }
    rep.tables.push_back(std::move(t));
  } else {
    invalid("--mode must be fixed-proportion or fixed-count");
  }
  const auto& rows = rep.tables.front().rows;
  rep.summary["ET_first"] = rows.front()[2];
  rep.summary["ET_last"] = rows.back()[2];
  return rep;
}

// Figure data: the optimal scheme for three cut-offs, the power-reward effort
// for three shapes at alpha = 0.5, and both size-effect panels.
std::vector<std::string> run_figures(const std::string& dir, const std::string& format) {
  const std::string ext = format == "json" ? ".json" : ".csv";
  const Format fmt = format_for(ext, format);
  std::vector<std::string> written;
  auto emit = [&](Report rep, const std::string& command, ordered_json config, const std::string& stem) {
    rep.command = command;
    rep.config = std::move(config);
    const std::string path = (std::filesystem::path(dir) / (stem + ext)).string();
    write_report(rep, path, fmt);
    written.push_back(path);
  };
  for (double alpha : {0.25, 0.5, 0.75}) {
    PrincipalArgs a;
    a.alpha = alpha;
    emit(run_mf_principal(a), "mf-principal",
         {{"alpha", alpha}, {"B", a.B}, {"cost", 1.0}, {"grid", a.grid}},
         "fig1_optimal_alpha" + format_number(alpha));
  }
  for (double q : {0.0, 1.0, 2.0}) {
    EquilibriumArgs a;
    a.reward.alpha = 0.5;
    a.reward.q = q;
    emit(run_mf_equilibrium(a), "mf-equilibrium",
         {{"reward", "power"}, {"B", 1.0}, {"alpha", 0.5}, {"q", q}, {"cost", 1.0}, {"grid", a.grid}},
         "fig2_power_effort_q" + format_number(q));
  }
  SizeEffectArgs left;
  emit(run_size_effect(left), "size-effect",
       {{"mode", left.mode}, {"alpha", left.alpha}, {"B", left.B}, {"cost", left.cost}, {"Ns", left.Ns}},
       "fig3_fixed_proportion");
  SizeEffectArgs right;
  right.mode = "fixed-count";
  emit(run_size_effect(right), "size-effect",
       {{"mode", right.mode}, {"n0", right.n0}, {"K", right.K}, {"cost", right.cost}, {"Ns", right.Ns}},
       "fig3_fixed_count");
  return written;
}

int exit_code_for(const rr::Error& e) {
  return rr::is_validation_error(e.kind()) ? kExitValidation : kExitNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-based reward races: mean-field and N-player solvers and experiments"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::vector<std::pair<CLI::App*, std::function<Report()>>> commands;
  auto command = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", "JSON file of option values; flags override it");
    return sub;
  };

  Output out;

  EquilibriumArgs eq;
  {
    CLI::App* sub = command("mf-equilibrium", "mean-field equilibrium for a reward scheme");
    add_reward(sub, eq.reward);
    sub->add_option("--cost", eq.cost, "constant or piecewise descriptor");
    sub->add_option("--grid", eq.grid, "profile rows on r = i / grid");
    sub->add_option("--beta", eq.betas, "quantile levels for the summary, e.g. 0.25,0.5");
    add_output(sub, out);
    commands.emplace_back(sub, [&] { return run_mf_equilibrium(eq); });
  }

  PrincipalArgs pr;
  {
    CLI::App* sub = command("mf-principal", "optimal mean-field reward scheme");
    sub->add_option("--alpha", pr.alpha, "target proportion in (0, 1)");
    sub->add_option("--B", pr.B, "per-capita budget");
    sub->add_option("--cost", pr.cost, "constant or piecewise descriptor");
    sub->add_option("--grid", pr.grid, "profile rows on r = i / grid");
    add_output(sub, out);
    commands.emplace_back(sub, [&] { return run_mf_principal(pr); });
  }

  MinimalBudgetArgs mb;
  {
    CLI::App* sub = command("minimal-budget", "smallest budget reaching alpha by time T");
    sub->add_option("--T", mb.T, "target completion time")->required();
    sub->add_option("--alpha", mb.alpha, "target proportion in (0, 1)");
    sub->add_option("--cost", mb.cost, "constant or piecewise descriptor");
    add_output(sub, out);
    commands.emplace_back(sub, [&] { return run_minimal_budget(mb); });
  }

  NSolveArgs ns;
  {
    CLI::App* sub = command("nplayer-solve", "N-player equilibrium by backward recursion");
    sub->add_option("--rewards", ns.rewards, "R_1..R_N, e.g. 1,0,0")->required();
    sub->add_option("--costs", ns.costs, "c_0..c_{N-1}; overrides --cost");
    sub->add_option("--cost", ns.cost, "constant, or a descriptor sampled at n / N");
    sub->add_option("--n0", ns.n0, "arrivals to wait for (adds ET to the summary)");
    add_output(sub, out);
    commands.emplace_back(sub, [&] { return run_nplayer_solve(ns); });
  }

  SimulateArgs sim;
  try {
    sim.seed = default_seed();
  } catch (const rr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  {
    CLI::App* sub = command("nplayer-simulate", "Monte Carlo estimate of E T_n0");
    sub->add_option("--rewards", sim.rewards, "R_1..R_N")->required();
    sub->add_option("--costs", sim.costs, "c_0..c_{N-1}; overrides --cost");
    sub->add_option("--cost", sim.cost, "constant, or a descriptor sampled at n / N");
    sub->add_option("--n0", sim.n0, "arrivals to wait for")->required();
    sub->add_option("--paths", sim.paths, "number of simulated races");
    sub->add_option("--seed", sim.seed, "RNG seed (default RACE_SEED, else 1)");
    sub->add_option("--threads", sim.threads, "worker threads; 0 = all cores");
    sub->add_flag("--samples", sim.samples, "also write every draw");
    add_output(sub, out);
    commands.emplace_back(sub, [&] { return run_nplayer_simulate(sim); });
  }

  NPrincipalArgs np;
  NPrincipalArgs oc;
  for (auto* args : {&np, &oc}) {
    const bool principal = args == &np;
    CLI::App* sub = principal ? command("nplayer-principal", "optimal N-player reward scheme")
                              : command("oracle-check", "closed-form N-player optimum against a numerical minimizer");
    sub->add_option("--N", args->N, "number of players")->required();
    sub->add_option("--n0", args->n0, "arrivals to wait for, 1 <= n0 < N")->required();
    sub->add_option("--B", args->B, "per-capita budget");
    sub->add_option("--costs", args->costs, "c_0..c_{N-1}; overrides --cost");
    sub->add_option("--cost", args->cost, "constant, or a descriptor sampled at n / N");
    add_output(sub, out);
    commands.emplace_back(sub, [args, principal] {
      return principal ? run_nplayer_principal(*args) : run_oracle_check(*args);
    });
  }

  DiscretizeArgs dz;
  {
    CLI::App* sub = command("discretize", "N-player rewards from a mean-field scheme");
    add_reward(sub, dz.reward);
    sub->add_option("--N", dz.N, "number of players");
    sub->add_option("--method", dz.method, "sampling or average");
    sub->add_option("--K", dz.K, "check sup |R_ceil(rN) - R(r)| <= K / N on the interior sets");
    add_output(sub, out);
    commands.emplace_back(sub, [&] { return run_discretize(dz); });
  }

  ConvergeValueArgs cv;
  {
    CLI::App* sub = command("converge-value", "N-player values and efforts against the mean field");
    add_reward(sub, cv.reward);
    sub->add_option("--cost", cv.cost, "constant or piecewise descriptor");
    sub->add_option("--Ns", cv.Ns, "ladder a:b (powers of two) or a list");
    add_output(sub, out);
    commands.emplace_back(sub, [&] { return run_converge_value(cv); });
  }

  ConvergePrincipalArgs cp;
  ConvergePrincipalArgs ep;
  for (auto* args : {&cp, &ep}) {
    const bool conv = args == &cp;
    CLI::App* sub = conv ? command("converge-principal", "N-player optimum against the mean-field optimum")
                         : command("eps-optimal", "sampled mean-field optimum used in the N-player game");
    sub->add_option("--alpha", args->alpha, "target proportion in (0, 1)");
    sub->add_option("--B", args->B, "per-capita budget");
    sub->add_option("--cost", args->cost, "constant or piecewise descriptor");
    sub->add_option("--Ns", args->Ns, "ladder a:b (powers of two) or a list");
    add_output(sub, out);
    commands.emplace_back(sub, [args, conv] {
      return conv ? run_converge_principal(*args) : run_eps_optimal(*args);
    });
  }

  SizeEffectArgs se;
  {
    CLI::App* sub = command("size-effect", "minimal E T_n0 as the population grows");
    sub->add_option("--mode", se.mode, "fixed-proportion or fixed-count");
    sub->add_option("--alpha", se.alpha, "fixed-proportion: n0 = ceil(alpha N)");
    sub->add_option("--B", se.B, "fixed-proportion: per-capita budget");
    sub->add_option("--n0", se.n0, "fixed-count: arrivals to wait for");
    sub->add_option("--K", se.K, "fixed-count: total prize");
    sub->add_option("--cost", se.cost, "constant cost coefficient");
    sub->add_option("--Ns", se.Ns, "ladder a:b (powers of two) or a list");
    add_output(sub, out);
    commands.emplace_back(sub, [&] { return run_size_effect(se); });
  }

  std::string fig_dir = "figures";
  std::string fig_format = "csv";
  CLI::App* figures = command("figures", "write the data behind every figure");
  figures->add_option("--out-dir", fig_dir, "output directory");
  figures->add_option("--format", fig_format, "csv or json");

  try {
    std::vector<std::string> args = expand_config(std::vector<std::string>(argv, argv + argc));
    std::reverse(args.begin() + 1, args.end());
    args.erase(args.begin());
    app.parse(args);
    if (figures->parsed()) {
      for (const std::string& path : run_figures(fig_dir, fig_format)) std::cout << path << '\n';
      return 0;
    }
    for (auto& [sub, run] : commands) {
      if (!sub->parsed()) continue;
      Report rep = run();
      rep.command = sub->get_name();
      rep.config = config_echo(sub);
      write_report(rep, out.out, format_for(out.out, out.format));
      if (!out.out.empty()) std::cout << summary_lines(rep);
      return 0;
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  } catch (const rr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
