#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rankrace/mfg_equilibrium.hpp"
#include "rankrace/piecewise_fn.hpp"

namespace rankrace {

/// Result of checking that r -> c(r) (1 - r) / (2 - r) is non-increasing.
struct CostCheck {
  bool ok = true;
  /// r1 < r2 with g(r2) > g(r1) when the check fails.
  std::optional<std::pair<double, double>> witness;
};

/// Dense-grid check (plus every breakpoint and tabulation node of c) of the
/// monotonicity that makes the optimal scheme decreasing.
CostCheck check_cost_assumption(const MFCost& cost, std::size_t grid = 8192);

struct PrincipalProblem {
  double alpha = 0.5;  ///< target proportion in (0, 1)
  double budget = 1.0;
  MFCost cost = MFCost::constant(1.0);
};

struct PrincipalSolution {
  PrincipalProblem problem;
  MFRewardScheme reward;
  /// Optimal effort, zero after alpha.
  PiecewiseFn effort;
  double minimal_time;
  /// C = 1/2 int_0^alpha sqrt(c (2 - r)) / (1 - r) dr
  double constant_C;
  /// C / sqrt(c) when the cost is constant.
  std::optional<double> constant_C_prime;
};

/// C' for unit cost, from its logarithmic closed form.
double unit_cost_constant(double alpha);

/// C for a general cost, by quadrature (closed form for constant cost).
double principal_constant(double alpha, const MFCost& cost);

/// Throws InvalidParameter or CostAssumptionViolated.
PrincipalSolution optimal_reward(const PrincipalProblem& problem);

/// Smallest budget whose optimal scheme reaches alpha by time T: 4 C^2 / T.
double minimal_budget(double T, double alpha, const MFCost& cost);

/// T_alpha(R). For schemes that pay nothing after alpha this integrates
/// 2 c / (sqrt(1 - r) f) with f = f_transform(R); otherwise it is the ODE
/// quantile. +infinity when the effort dies before alpha.
double completion_time(const MFRewardScheme& reward, double alpha, const MFCost& cost);

/// R restricted to [0, alpha], zero after.
MFRewardScheme truncate_after_alpha(const MFRewardScheme& reward, double alpha);

/// f(r) = R(r) sqrt(1 - r) - int_r^alpha R(s) / (2 sqrt(1 - s)) ds on [0, alpha],
/// zero after. Defined for schemes supported on [0, alpha].
PiecewiseFn f_transform(const MFRewardScheme& reward, double alpha);

/// R(r) = f(r) / sqrt(1 - r) + int_r^alpha f(s) / (2 (1 - s)^(3/2)) ds on [0, alpha].
PiecewiseFn f_inverse(const PiecewiseFn& f, double alpha);

/// Budget of the scheme behind f: 1/2 int_0^alpha (2 - r) f / (1 - r)^(3/2) dr.
double f_budget(const PiecewiseFn& f, double alpha);

/// T_alpha in f-terms: int_0^alpha 2 c / (sqrt(1 - r) f) dr.
double f_completion_time(const PiecewiseFn& f, double alpha, const MFCost& cost);

/// f* = (B / C) sqrt(c (1 - r) / (2 - r)) on [0, alpha].
PiecewiseFn optimal_f(const PrincipalSolution& solution);

struct FirstOrderReport {
  /// phi'(0) for the segment from f* towards each challenger.
  std::vector<double> derivatives;
  double min_derivative;
  bool passed;
};

/// phi'(0) = int_0^alpha -2 c (f - f*) / (sqrt(1 - r) f*^2) dr for each
/// challenger f. Throws InfeasibleChallenger when a challenger exceeds the
/// budget. Passes when every derivative is >= -tolerance.
FirstOrderReport verify_first_order_optimality(const PrincipalSolution& solution,
                                               const std::vector<PiecewiseFn>& challengers,
                                               double tolerance = 1e-8);

/// Random decreasing step schemes on [0, alpha] that spend exactly the budget.
std::vector<MFRewardScheme> random_challengers(double alpha, double budget, std::size_t count,
                                               std::uint64_t seed);

}  // namespace rankrace
