#pragma once

#include <cstddef>
#include <vector>

#include "rankrace/mf_principal.hpp"
#include "rankrace/mfg_equilibrium.hpp"
#include "rankrace/nplayer_game.hpp"
#include "rankrace/nplayer_principal.hpp"

namespace rankrace {

/// R_n = R(n / N), n = 1..N.
std::vector<double> discretize_sampling(const MFRewardScheme& R, std::size_t N);

/// R_n = N int_{(n-1)/N}^{n/N} R.
std::vector<double> discretize_average(const MFRewardScheme& R, std::size_t N);

/// c_n = c(n / N), n = 0..N-1.
std::vector<double> discretize_cost(const MFCost& c, std::size_t N);

/// Interior breakpoints of R and c, i.e. the r_1 < ... < r_m of the partition.
std::vector<double> interior_breakpoints(const PiecewiseFn& R, const PiecewiseFn& c);

struct DiscretizationReport {
  std::size_t N = 0;
  /// sup over the interior sets of |R_{ceil(rN)} - R(r)|.
  double max_deviation = 0.0;
  std::vector<double> partition;  ///< r_0 = 0 < r_1 < ... < r_{m+1} = 1
  double K = 0.0;
  bool passed = false;
};

/// The interior sets are [r_{i-1} + 1/N, r_i - 1/N] and [r_m + 1/N, 1].
/// Exact sup: R is monotone and R_{ceil(rN)} constant on each cell
/// ((n-1)/N, n/N], so only cell ends clipped to the sets are probed.
/// An empty partition means {0, 1}.
DiscretizationReport check_discretization(const std::vector<double>& rewards,
                                          const MFRewardScheme& R,
                                          std::vector<double> partition, double K);

struct RateFit {
  std::vector<std::size_t> Ns;
  std::vector<double> errors;
  /// N excluded from the fit (small-N condition fails); still reported.
  std::vector<bool> excluded;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  /// R^2 < 0.98: the slope is not asserted.
  bool contaminated = false;
  /// Every error is exactly zero, so no slope exists.
  bool exact = false;
};

/// Least squares of log(error) against log(N) over the non-excluded points.
RateFit fit_rate(std::vector<std::size_t> Ns, std::vector<double> errors,
                 std::vector<bool> excluded = {});

/// r_m < 1 - sqrt(1/N) - 1/N for the largest interior breakpoint r_m.
bool large_enough(std::size_t N, const std::vector<double>& interior);

struct ValueConvergence {
  RateFit values;   ///< sup_r |v^N_{floor(rN)} - v(r)|
  RateFit efforts;  ///< same for lambda, on the interior sets only
};

/// N-player data from sampling R and c. Ns strictly increasing, at least 2.
ValueConvergence value_convergence_experiment(const MFRewardScheme& R, const MFCost& c,
                                              const std::vector<std::size_t>& Ns);

struct PrincipalConvergence {
  RateFit times;    ///< |ET^N_{ceil(alpha N)} - T*_alpha|
  RateFit rewards;  ///< sup_{[0, alpha]} |R^N_{ceil(rN)} - R*(r)|
  std::vector<double> expected_times;  ///< ET^N, signed comparison with T*
  std::vector<double> constants;       ///< C^N, a Riemann sum for C
  double minimal_time = 0.0;           ///< T*_alpha
  double constant_C = 0.0;
};

/// n0 = ceil(alpha N), c_n = c(n / N).
PrincipalConvergence principal_convergence_experiment(double alpha, double budget,
                                                      const MFCost& c,
                                                      const std::vector<std::size_t>& Ns);

struct EpsOptimality {
  RateFit gaps;  ///< ET under sampled R* minus the exact N-player optimum
  std::vector<double> signed_gaps;
};

EpsOptimality eps_optimality_experiment(double alpha, double budget, const MFCost& c,
                                        const std::vector<std::size_t>& Ns);

enum class SizeMode { FixedProportion, FixedCount };

struct SizeEffectSeries {
  std::vector<std::size_t> Ns;
  std::vector<double> expected_times;
  /// Fixed count only: the direct sum display, to compare with 4 C^2 / B.
  std::vector<double> display_times;
};

/// FixedProportion: n0 = ceil(alpha N) with per-capita budget B.
/// FixedCount: n0 fixed, total prize K, so B = K / N; requires N > n0.
SizeEffectSeries size_effect_fixed_proportion(double alpha, double budget, double c,
                                              const std::vector<std::size_t>& Ns);
SizeEffectSeries size_effect_fixed_count(std::size_t n0, double K, double c,
                                         const std::vector<std::size_t>& Ns);

/// (1 / (N K)) (sum_{n<n0} sqrt(c / (1 - n/N) (1 + 1 / (1 - (n+1)/N))))^2
double fixed_count_time(std::size_t N, std::size_t n0, double K, double c);

/// 2^lo, 2^(lo+1), ..., 2^hi
std::vector<std::size_t> dyadic_ladder(unsigned lo, unsigned hi);

}  // namespace rankrace
