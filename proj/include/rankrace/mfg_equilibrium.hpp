#pragma once

#include <cstddef>
#include <vector>

#include "rankrace/piecewise_fn.hpp"
#include "rankrace/trajectory.hpp"

namespace rankrace {

/// A reward per rank: non-negative, non-increasing and left-continuous at
/// r = 1. Only constructible through validate_reward.
class MFRewardScheme {
 public:
  const PiecewiseFn& fn() const { return fn_; }
  double operator()(double r) const { return fn_(r); }
  /// int_0^1 R(r) dr
  double budget() const { return budget_; }

 private:
  friend MFRewardScheme validate_reward(PiecewiseFn fn);
  MFRewardScheme(PiecewiseFn fn, double budget) : fn_(std::move(fn)), budget_(budget) {}

  PiecewiseFn fn_;
  double budget_;
};

/// Structural checks on the descriptors (not sampling). Throws
/// NotDecreasing, Negative or NotLeftContinuousAtOne.
MFRewardScheme validate_reward(PiecewiseFn fn);

enum class CostContinuity {
  /// Pieces must agree at breakpoints (globally Lipschitz).
  Required,
  /// Step costs, as in the staircase closed form.
  AllowJumps,
};

/// Positive cost coefficient per rank.
class MFCost {
 public:
  explicit MFCost(PiecewiseFn fn, CostContinuity continuity = CostContinuity::Required);
  static MFCost constant(double c) { return MFCost(PiecewiseFn::constant(c)); }

  const PiecewiseFn& fn() const { return fn_; }
  double operator()(double r) const { return fn_(r); }
  /// The constant value when the cost is a single Constant piece.
  std::optional<double> constant_value() const;

 private:
  PiecewiseFn fn_;
};

struct MFEquilibrium {
  PiecewiseFn value;
  PiecewiseFn effort;
  Trajectory trajectory;
  MFRewardScheme reward;
  MFCost cost;
};

struct EquilibriumOptions {
  /// Tabulation nodes per reward piece for the value function.
  std::size_t nodes_per_piece = 4096;
  OdeStop stop{};
  OdeOptions ode{};
};

/// v(r) = 1 / (2 sqrt(1 - r)) * int_r^1 R(y) / sqrt(1 - y) dy, tabulated piece
/// by piece on nodes uniform in sqrt(1 - r). Does not depend on the cost.
PiecewiseFn equilibrium_value(const MFRewardScheme& reward,
                              std::size_t nodes_per_piece = EquilibriumOptions{}.nodes_per_piece);

/// lambda*(r) = (R(r) - v(r)) / (2 c(r)), with pieces on the union of the
/// reward and cost breakpoints.
PiecewiseFn equilibrium_effort(const MFRewardScheme& reward, const MFCost& cost,
                               const PiecewiseFn& value);
PiecewiseFn equilibrium_effort(const MFRewardScheme& reward, const MFCost& cost);

MFEquilibrium solve_equilibrium(const MFRewardScheme& reward, const MFCost& cost, double r0 = 0.0,
                                const EquilibriumOptions& options = {});

/// v(0) = E[R(1 - exp(-2 tau))] with tau ~ Exp(1), evaluated as
/// int_0^1 R(1 - u^2) du after u = exp(-tau).
double value_probabilistic(const MFRewardScheme& reward);

// ---------------------------------------------------------------------------
// Closed-form families

struct PowerRewardParams {
  double budget = 1.0;
  double alpha = 1.0;  ///< cut-off in (0, 1]
  double q = 0.0;      ///< shape >= 0
  double cost = 1.0;   ///< constant cost coefficient
  /// Permit alpha = 1 with 0 < q < 1, where the reward is not Lipschitz at 1.
  bool force = false;
};

/// kappa = B (1 + q) / (1 - (1 - alpha)^(1 + q))
double power_kappa(const PowerRewardParams& p);
MFRewardScheme power_reward(const PowerRewardParams& p);
/// Whether the trajectory and quantiles are known analytically (q = 0 or alpha = 1).
bool power_has_closed_form_state(const PowerRewardParams& p);
/// Quantile T_beta for q = 0 or alpha = 1.
double power_quantile(const PowerRewardParams& p, double beta);
/// rho(t) for q = 0 or alpha = 1.
double power_state(const PowerRewardParams& p, double t);

/// v and lambda* as power-sum pieces; the trajectory is sampled from the
/// analytic formula when available, otherwise integrated numerically.
MFEquilibrium closed_form_power(const PowerRewardParams& p);

struct StaircaseEquilibrium {
  MFEquilibrium equilibrium;
  std::vector<double> levels;
  std::vector<double> costs;
  std::vector<double> grid;
  /// A_j per step; zero means the state never leaves the step.
  std::vector<double> slopes;
  /// t_j: time at which rho reaches grid[j]; +infinity after a zero slope.
  std::vector<double> segment_times;

  /// T_beta, splitting the step that contains beta.
  double quantile(double beta) const;
  double state(double t) const;
};

/// Explicit solution for step rewards R_j and step costs c_j on the grid
/// 0 = r_0 < ... < r_n = 1. Throws InvalidGrid.
StaircaseEquilibrium closed_form_staircase(std::vector<double> levels, std::vector<double> costs,
                                           std::vector<double> grid);

/// Step function with levels[j] on (grid[j], grid[j+1]].
PiecewiseFn staircase_fn(const std::vector<double>& levels, const std::vector<double>& grid);

}  // namespace rankrace
