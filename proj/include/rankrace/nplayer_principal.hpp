#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "rankrace/nplayer_game.hpp"

namespace rankrace {

struct NPrincipalProblem {
  std::size_t N = 2;
  std::size_t n0 = 1;  ///< in {1, ..., N - 1}
  double budget = 1.0;  ///< per capita: sum_n R_n <= N B
  std::vector<double> costs;  ///< c_0..c_{N-1}
};

NPrincipalProblem constant_cost_problem(std::size_t N, std::size_t n0, double budget, double c);

struct NCostCheck {
  bool ok = true;
  /// First n < n0 with c_n > c_{n-1} (2N-2n+1)^2 (2N-n-1) / (4 (N-n-1)(N-n+1)(2N-n)).
  std::optional<std::size_t> witness;
};

NCostCheck check_cost_assumption_n(const NPrincipalProblem& p);

struct NPrincipalSolution {
  NPrincipalProblem problem;
  std::vector<double> rewards;  ///< R*_1..R*_N, zero after n0
  double expected_time;         ///< 4 C^2 / B
  double constant_C;
  std::vector<double> y;        ///< y_0..y_{n0-1}
  std::vector<double> x;        ///< x_n = R*_{n+1} - v_n = B y_n / C
  double theta;                 ///< budget multiplier, C = B sqrt(N theta) / 2
  std::vector<double> efforts;  ///< lambda*_0..lambda*_{N-1}
};

/// Throws InvalidParameter or CostAssumptionViolated.
NPrincipalSolution optimal_reward_n(const NPrincipalProblem& p);

/// E T_{n0} of a reward vector R_1..R_N through the equilibrium recursion.
double expected_time_of(const std::vector<double>& rewards, const NPrincipalProblem& p);

struct OracleResult {
  std::vector<double> rewards;  ///< R_1..R_N
  double expected_time;
  /// True when the x-space solution mapped to a non-monotone scheme and the
  /// projected-gradient search in R-space produced the answer.
  bool used_fallback = false;
  std::size_t iterations = 0;
};

/// Numerical minimizer of E T_{n0} over R_1 >= ... >= R_{n0} >= 0 with
/// sum R_n <= N B. Multiplicative KKT iteration in the gap variables x_n,
/// then projected gradient with isotonic projection when the mapped scheme
/// is not monotone. Always returns its best iterate.
OracleResult brute_force_oracle(const NPrincipalProblem& p);

}  // namespace rankrace
