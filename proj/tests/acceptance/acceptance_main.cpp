// One PASS/FAIL line per acceptance criterion, each with its runtime budget.
// Exit status is non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rankrace/convergence_lab.hpp"
#include "rankrace/errors.hpp"
#include "rankrace/mf_principal.hpp"
#include "rankrace/mfg_equilibrium.hpp"
#include "rankrace/nplayer_game.hpp"
#include "rankrace/nplayer_principal.hpp"

using namespace rankrace;

namespace {

// Collects sub-checks; the first few failures are kept for the report line.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    ++failed_;
    if (failures_.size() < 4) failures_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return failed_ == 0; }

  std::string summary() const {
    std::ostringstream os;
    os << (total_ - failed_) << "/" << total_ << " checks";
    for (const auto& n : notes_) os << "; " << n;
    for (const auto& f : failures_) os << "; FAILED " << f;
    return os.str();
  }

 private:
  int total_ = 0;
  int failed_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

std::string fmt(double x, int digits = 10) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

double sup_error(const PiecewiseFn& a, const PiecewiseFn& b, double hi, int n = 4000) {
  double worst = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = hi * i / n;
    worst = std::max(worst, std::abs(a(r) - b(r)));
  }
  return worst;
}

bool rel_close(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol * std::abs(b);
}

struct Staircase {
  std::vector<double> levels, costs, grid;
};

// Decreasing levels and positive step costs on a random grid.
Staircase random_staircase(std::mt19937_64& gen, int steps, bool zero_tail) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Staircase s;
  std::vector<double> cuts;
  for (int i = 0; i + 1 < steps; ++i) cuts.push_back(0.05 + 0.9 * u(gen));
  std::sort(cuts.begin(), cuts.end());
  s.grid.push_back(0.0);
  for (double c : cuts) {
    if (c - s.grid.back() > 1e-3) s.grid.push_back(c);
  }
  s.grid.push_back(1.0);
  double level = 1.0 + 3.0 * u(gen);
  for (std::size_t j = 0; j + 1 < s.grid.size(); ++j) {
    s.levels.push_back(level);
    level *= 0.3 + 0.6 * u(gen);
    s.costs.push_back(0.5 + u(gen));
  }
  if (zero_tail) s.levels.back() = 0.0;
  return s;
}

std::vector<PowerRewardParams> power_corpus() {
  std::vector<PowerRewardParams> out;
  for (double alpha : {0.3, 0.5, 0.8, 1.0}) {
    for (double q : {0.0, 1.0, 2.0, 3.5}) {
      if (alpha == 1.0 && q == 0.0) continue;
      for (double cost : {0.5, 2.0}) {
        PowerRewardParams p;
        p.budget = 1.3;
        p.alpha = alpha;
        p.q = q;
        p.cost = cost;
        out.push_back(p);
      }
    }
  }
  return out;
}

std::vector<Staircase> staircase_corpus() {
  std::vector<Staircase> out{{{2.0, 1.0, 0.0}, {1.0, 1.0, 1.0}, {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}}};
  std::mt19937_64 gen(2024);
  for (int i = 0; i < 11; ++i) out.push_back(random_staircase(gen, 2 + i % 4, i % 3 != 0));
  return out;
}

// ---------------------------------------------------------------------------

void closed_form_suite(Checks& c) {
  int sets = 0;
  double worst_v = 0.0, worst_l = 0.0, worst_t = 0.0;
  const std::vector<double> betas{0.1, 0.25, 0.5, 0.9};
  for (const PowerRewardParams& p : power_corpus()) {
    const MFEquilibrium cf = closed_form_power(p);
    const MFEquilibrium num = solve_equilibrium(cf.reward, MFCost::constant(p.cost));
    worst_v = std::max(worst_v, sup_error(num.value, cf.value, 1.0 - 1e-3));
    worst_l = std::max(worst_l, sup_error(num.effort, cf.effort, 1.0 - 1e-3));
    if (power_has_closed_form_state(p)) {
      for (double b : betas) {
        const double exact = power_quantile(p, b);
        const double ours = quantile(num.trajectory, b);
        if (std::isinf(exact)) {
          c.expect(std::isinf(ours), "T_beta should be infinite");
        } else {
          worst_t = std::max(worst_t, std::abs(ours - exact) / exact);
        }
      }
    }
    ++sets;
  }
  for (const Staircase& s : staircase_corpus()) {
    const StaircaseEquilibrium cf = closed_form_staircase(s.levels, s.costs, s.grid);
    const MFEquilibrium num = solve_equilibrium(
        cf.equilibrium.reward, MFCost(staircase_fn(s.costs, s.grid), CostContinuity::AllowJumps));
    worst_v = std::max(worst_v, sup_error(num.value, cf.equilibrium.value, 1.0 - 1e-3));
    worst_l = std::max(worst_l, sup_error(num.effort, cf.equilibrium.effort, 1.0 - 1e-3));
    for (double b : {0.05, 0.3, 0.6, 0.95, 0.999}) {
      const double exact = cf.quantile(b);
      const double ours = quantile(num.trajectory, b);
      if (std::isinf(exact)) {
        c.expect(std::isinf(ours), "staircase T_beta should be infinite");
      } else {
        worst_t = std::max(worst_t, std::abs(ours - exact) / exact);
      }
    }
    ++sets;
  }
  c.expect(sets >= 20, "at least 20 parameter sets");
  c.expect(worst_v <= 1e-6, "sup |v - v_closed| = " + fmt(worst_v, 3));
  c.expect(worst_l <= 1e-6, "sup |lambda - lambda_closed| = " + fmt(worst_l, 3));
  c.expect(worst_t <= 1e-6, "T_beta relative error = " + fmt(worst_t, 3));

  PowerRewardParams u;
  u.alpha = 0.5;
  const MFEquilibrium num = solve_equilibrium(power_reward(u), MFCost::constant(1.0));
  const double t_alpha = quantile(num.trajectory, 0.5);
  c.expect(rel_close(t_alpha, 0.828427124746190, 1e-6), "uniform cut-off T_alpha = " + fmt(t_alpha));
  c.note(std::to_string(sets) + " sets, sup errors v " + fmt(worst_v, 2) + ", lambda " +
         fmt(worst_l, 2) + ", T_beta rel " + fmt(worst_t, 2) + ", T_alpha " + fmt(t_alpha));
}

void probabilistic(Checks& c) {
  double worst = 0.0;
  int n = 0;
  for (const PowerRewardParams& p : power_corpus()) {
    const MFEquilibrium cf = closed_form_power(p);
    worst = std::max(worst, std::abs(value_probabilistic(cf.reward) - cf.value(0.0)));
    ++n;
  }
  for (const Staircase& s : staircase_corpus()) {
    const StaircaseEquilibrium cf = closed_form_staircase(s.levels, s.costs, s.grid);
    worst = std::max(worst, std::abs(value_probabilistic(cf.equilibrium.reward) - cf.equilibrium.value(0.0)));
    ++n;
  }
  c.expect(worst <= 1e-6, "max |E R(1 - exp(-2 tau)) - v(0)| = " + fmt(worst, 3));
  c.note(std::to_string(n) + " schemes, max gap " + fmt(worst, 2));
}

void principal_closed_form(Checks& c) {
  const MFCost unit = MFCost::constant(1.0);
  const PrincipalSolution s = optimal_reward({0.5, 1.0, unit});
  c.expect(std::abs(s.minimal_time - 0.825603) <= 1e-6,
           "T* = " + fmt(s.minimal_time) + " vs stated 0.825603 (gap " +
               fmt(std::abs(s.minimal_time - 0.825603), 2) + ")");
  c.expect(std::abs(s.minimal_time - 4.0 * s.constant_C * s.constant_C) <= 1e-12, "T* = 4 C^2 / B");
  c.expect(std::abs(s.reward.budget() - 1.0) <= 1e-8, "budget saturation");
  const double uniform = completion_time(power_reward({1.0, 0.5, 0.0, 1.0}), 0.5, unit);
  c.expect(rel_close(uniform, 0.828427124746190, 1e-6), "uniform cut-off T_alpha");
  c.expect(s.minimal_time < uniform, "T* below the uniform cut-off");

  std::vector<PiecewiseFn> fs;
  for (const auto& r : random_challengers(0.5, 1.0, 100, 42)) fs.push_back(f_transform(r, 0.5));
  const FirstOrderReport cert = verify_first_order_optimality(s, fs);
  c.expect(cert.derivatives.size() == 100 && cert.min_derivative >= -1e-8,
           "first-order certificate, min phi'(0) = " + fmt(cert.min_derivative, 3));

  const int n = 1000;
  std::vector<double> R;
  for (int i = 0; i <= n; ++i) R.push_back(s.reward(0.5 * i / n));
  double max_d1 = -std::numeric_limits<double>::infinity();
  double max_d2 = -std::numeric_limits<double>::infinity();
  for (int i = 1; i <= n; ++i) max_d1 = std::max(max_d1, R[i] - R[i - 1]);
  for (int i = 1; i < n; ++i) max_d2 = std::max(max_d2, R[i + 1] - 2 * R[i] + R[i - 1]);
  c.expect(max_d1 < 0.0, "strictly decreasing on [0, alpha]");
  c.expect(max_d2 <= 1e-9, "concave on [0, alpha]");
  c.expect(s.reward(0.5) > 0.0 && s.reward(0.5 + 1e-12) == 0.0, "jump to zero at alpha");
  c.note("T* = " + fmt(s.minimal_time) + ", budget error " + fmt(std::abs(s.reward.budget() - 1.0), 2) +
         ", uniform cut-off " + fmt(uniform) + ", min phi'(0) " + fmt(cert.min_derivative, 2));
}

void nplayer_exact(Checks& c) {
  const double eps = std::numeric_limits<double>::epsilon();
  const NEquilibrium two = solve_recursion(constant_cost_spec({1.0, 0.0}, 1.0));
  c.expect(std::abs(two.values[0] - 1.0 / 3.0) <= 2 * eps, "N=2 v_0 = 1/3");
  c.expect(std::abs(expected_completion(two, 1) - 1.5) <= 4 * eps, "N=2 ET = 1.5");
  const NEquilibrium three = solve_recursion(constant_cost_spec({1.0, 0.0, 0.0}, 1.0));
  c.expect(std::abs(three.values[0] - 0.2) <= 2 * eps, "N=3 v_0 = 1/5");
  c.expect(std::abs(expected_completion(three, 1) - 5.0 / 6.0) <= 4 * eps, "N=3 ET = 5/6");

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = std::max(difference_residual(two), difference_residual(three));
  for (int trial = 0; trial < 200; ++trial) {
    NPlayerSpec spec;
    spec.N = 1 + trial % 40;
    double level = 5.0 * u(gen);
    for (std::size_t n = 0; n < spec.N; ++n) {
      spec.rewards.push_back(level);
      level *= u(gen);
      spec.costs.push_back(0.2 + u(gen));
    }
    worst = std::max(worst, difference_residual(solve_recursion(spec)) / (1.0 + spec.rewards[0]));
  }
  c.expect(worst <= 1e-14, "difference-equation residual " + fmt(worst, 3));
  c.note("max residual " + fmt(worst, 2));
}

void nplayer_oracle(Checks& c) {
  double worst = 0.0;
  int cases = 0;
  for (std::size_t N = 2; N <= 6; ++N) {
    for (std::size_t n0 = 1; n0 < N; ++n0) {
      std::vector<std::vector<double>> grids{std::vector<double>(N, 1.0), std::vector<double>(N, 2.5)};
      std::vector<double> dec;
      for (std::size_t n = 0; n < N; ++n) dec.push_back(2.0 - static_cast<double>(n) / N);
      grids.push_back(dec);
      for (double B : {0.5, 1.0}) {
        for (const auto& costs : grids) {
          const NPrincipalProblem p{N, n0, B, costs};
          const double closed = optimal_reward_n(p).expected_time;
          const double oracle = brute_force_oracle(p).expected_time;
          worst = std::max(worst, std::abs(closed - oracle) / closed);
          ++cases;
        }
      }
    }
  }
  c.expect(worst <= 1e-5, "max relative |ET_closed - ET_oracle| = " + fmt(worst, 3));
  const NPrincipalSolution corner = optimal_reward_n(constant_cost_problem(2, 1, 1.0, 1.0));
  c.expect(std::abs(corner.rewards[0] - 2.0) <= 1e-12 && std::abs(corner.rewards[1]) <= 1e-12,
           "corner R* = (2, 0)");
  c.expect(std::abs(corner.expected_time - 0.75) <= 1e-12, "corner ET* = 0.75");
  c.note(std::to_string(cases) + " problems, max relative gap " + fmt(worst, 2));
}

void monte_carlo(Checks& c) {
  NPlayerSpec spec;
  spec.N = 10;
  spec.rewards = discretize_sampling(power_reward({1.0, 0.5, 0.0, 1.0}), 10);
  spec.costs.assign(10, 1.0);
  const double et = expected_completion(solve_recursion(spec), 5);
  const SimResult a = simulate(spec, 5, 1000000, 1, 0);
  const SimResult b = simulate(spec, 5, 1000000, 1, 3);
  c.expect(std::abs(a.mean - et) <= 3.0 * a.std_error,
           "mean " + fmt(a.mean) + " vs ET " + fmt(et) + " (stderr " + fmt(a.std_error, 3) + ")");
  c.expect(a.samples.size() == b.samples.size() &&
               std::memcmp(a.samples.data(), b.samples.data(), a.samples.size() * sizeof(double)) == 0,
           "reruns byte-identical");
  c.note("mean " + fmt(a.mean) + ", ET " + fmt(et) + ", z = " + fmt((a.mean - et) / a.std_error, 3));
}

void rate_check(Checks& c, const std::string& name, const RateFit& f, double lo, double hi) {
  c.expect(!f.exact && f.slope >= lo && f.slope <= hi, name + " slope " + fmt(f.slope, 4));
  c.expect(f.r_squared >= 0.98, name + " R^2 " + fmt(f.r_squared, 4));
  c.note(name + " " + fmt(f.slope, 4) + " (R^2 " + fmt(f.r_squared, 5) + ")");
}

void convergence(Checks& c) {
  const auto Ns = dyadic_ladder(4, 12);
  const MFCost unit = MFCost::constant(1.0);
  const double inf = std::numeric_limits<double>::infinity();
  const ValueConvergence smooth = value_convergence_experiment(power_reward({1.0, 1.0, 1.0, 1.0}), unit, Ns);
  rate_check(c, "value (no cut-off)", smooth.values, -inf, -0.45);
  const ValueConvergence cut = value_convergence_experiment(power_reward({1.0, 0.5, 0.0, 1.0}), unit, Ns);
  rate_check(c, "value (cut-off)", cut.values, -1.15, -0.85);
  const PrincipalConvergence pc = principal_convergence_experiment(0.5, 1.0, unit, Ns);
  rate_check(c, "|ET - T*|", pc.times, -1.15, -0.85);
  rate_check(c, "sup |R^N - R*|", pc.rewards, -1.15, -0.85);
  const EpsOptimality eo = eps_optimality_experiment(0.5, 1.0, unit, Ns);
  rate_check(c, "eps gap", eo.gaps, -inf, -0.85);
  bool nonneg = true;
  for (double g : eo.signed_gaps) nonneg = nonneg && g >= 0.0;
  c.expect(nonneg, "eps gap >= 0 at every N");
}

void size_effects(Checks& c) {
  const double t_star = optimal_reward({0.5, 1.0, MFCost::constant(1.0)}).minimal_time;
  const SizeEffectSeries fp = size_effect_fixed_proportion(0.5, 1.0, 1.0, dyadic_ladder(1, 12));
  bool increasing = true;
  for (std::size_t i = 1; i < fp.Ns.size(); ++i) increasing = increasing && fp.expected_times[i] > fp.expected_times[i - 1];
  c.expect(increasing, "fixed proportion strictly increasing");
  const double last_gap = t_star - fp.expected_times.back();
  c.expect(last_gap > 0.0 && last_gap < 1e-4, "fixed proportion approaches T* (gap " + fmt(last_gap, 3) + ")");
  c.expect(std::abs(fp.expected_times.back() - 0.825603) < 1e-4,
           "fixed proportion within 1e-4 of the stated 0.825603");

  const SizeEffectSeries fc = size_effect_fixed_count(3, 32.0, 1.0, dyadic_ladder(2, 12));
  bool decreasing = true;
  for (std::size_t i = 1; i < fc.Ns.size(); ++i) decreasing = decreasing && fc.expected_times[i] < fc.expected_times[i - 1];
  c.expect(decreasing, "fixed count strictly decreasing");
  c.expect(fc.expected_times.back() < 1e-3, "fixed count tends to 0");
  double worst = 0.0;
  for (std::size_t i = 0; i < fc.Ns.size(); ++i) {
    const double theorem =
        optimal_reward_n(constant_cost_problem(fc.Ns[i], 3, 32.0 / fc.Ns[i], 1.0)).expected_time;
    worst = std::max(worst, std::abs(fc.display_times[i] - theorem) / theorem);
  }
  c.expect(worst <= 1e-12, "display vs 4 C^2 / B relative gap " + fmt(worst, 3));
  c.note("fixed proportion " + fmt(fp.expected_times.front(), 6) + " -> " + fmt(fp.expected_times.back(), 8) +
         ", fixed count " + fmt(fc.expected_times.front(), 6) + " -> " + fmt(fc.expected_times.back(), 3) +
         ", display gap " + fmt(worst, 2));
}

template <class F>
std::string error_of(F&& f, ErrorKind want, bool& matched) {
  try {
    f();
  } catch (const Error& e) {
    matched = e.kind() == want;
    return e.what();
  }
  matched = false;
  return "";
}

void validation(Checks& c) {
  bool m = false;
  PiecewiseOptions opts;
  opts.value_at_one = 0.0;
  std::string msg = error_of([&] { validate_reward(PiecewiseFn({0.0, 1.0}, {Constant{1.0}}, opts)); },
                             ErrorKind::NotLeftContinuousAtOne, m);
  c.expect(m, "1_[0,1) rejected as not left-continuous at 1");
  c.expect(msg.find("no equilibrium exists") != std::string::npos, "message explains non-existence");

  std::vector<double> grid, values, slopes;
  for (int i = 0; i <= 256; ++i) {
    grid.push_back(i / 256.0);
    values.push_back(std::exp(grid.back()));
    slopes.push_back(values.back());
  }
  const MFCost exp_cost(PiecewiseFn::single(Tabulated{grid, values, slopes}));
  msg = error_of([&] { optimal_reward({0.5, 1.0, exp_cost}); }, ErrorKind::CostAssumptionViolated, m);
  c.expect(m && msg.find("increases from r =") != std::string::npos, "mean-field cost rejected with witness: " + msg);

  msg = error_of([] { optimal_reward_n({5, 3, 1.0, {1.0, 1.0, 10.0, 1.0, 1.0}}); },
                 ErrorKind::CostAssumptionViolated, m);
  c.expect(m && msg.find("c_2") != std::string::npos, "N-player cost rejected with witness: " + msg);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<void(Checks&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "closed-form oracle suite", 10.0, closed_form_suite},
      {2, "probabilistic representation", 1.0, probabilistic},
      {3, "principal closed form", 30.0, principal_closed_form},
      {4, "N-player exactness", 1e9, nplayer_exact},
      {5, "N-player principal vs oracle", 120.0, nplayer_oracle},
      {6, "Monte Carlo", 60.0, monte_carlo},
      {7, "convergence rates", 300.0, convergence},
      {8, "size effects", 30.0, size_effects},
      {9, "validation errors", 1e9, validation},
  };
  int failed = 0;
  for (const Criterion& cr : criteria) {
    Checks checks;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(checks);
    } catch (const std::exception& e) {
      checks.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.budget_seconds) checks.expect(false, "runtime over " + fmt(cr.budget_seconds, 3) + " s");
    const bool ok = checks.ok();
    failed += ok ? 0 : 1;
    std::printf("Criterion %d (%s): %s [%.2f s] %s\n", cr.id, cr.name, ok ? "PASS" : "FAIL", secs,
                checks.summary().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
