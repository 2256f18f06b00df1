#pragma once

#include <array>
#include <limits>
#include <optional>
#include <vector>

#include "rankrace/piecewise_fn.hpp"

namespace rankrace {

/// Sampled solution of rho' = lambda(rho) (1 - rho). States are
/// non-decreasing and strictly below 1.
struct Trajectory {
  std::vector<double> times;
  std::vector<double> states;
  /// Limit of rho(t) as t -> infinity (or the last state when the run was
  /// stopped at a target below the limit).
  double terminal_state = 0.0;
  /// Time after which rho is constant, when the effort hits zero exactly.
  std::optional<double> frozen_after;
  /// Set when the requested target rank lies beyond what the effort can reach.
  bool horizon_unreachable = false;
  /// dt/d(rho) at the start and end of each segment [i, i + 1], when known.
  /// Enables cubic Hermite interpolation; linear otherwise.
  std::vector<std::array<double, 2>> inverse_rates;
};

struct OdeStop {
  /// Integrate until rho reaches this rank.
  double target_rank = 1.0 - 1e-9;
  /// ... or until this much time has elapsed.
  double max_time = std::numeric_limits<double>::infinity();
};

struct OdeOptions {
  double tol = 1e-8;
  double max_rank_step = 5e-4;
  /// Steps never exceed this fraction of the remaining distance 1 - rho.
  double max_relative_step = 0.02;
};

/// Integrates the state equation in rank space: the time to advance from
/// rank a to b is int_a^b d(rho) / (lambda(rho) (1 - rho)). Steps are
/// adaptive and clamped so every smoothness point of the effort is hit
/// exactly. Freezes when the effort is zero just right of the current rank.
Trajectory solve_state_ode(const PiecewiseFn& effort, double r0, const OdeStop& stop = {},
                           const OdeOptions& options = {});

/// First time the trajectory reaches beta, interpolating between samples;
/// +infinity if it never does.
double quantile(const Trajectory& traj, double beta);

/// rho(t) by interpolation; constant after the last sample.
double state_at(const Trajectory& traj, double t);

}  // namespace rankrace
