#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rankrace {

/// Rewards R_1..R_N (stored at index n - 1; R_N goes to players that never
/// arrive) and costs c_0..c_{N-1}, c_n applying while n players have arrived.
struct NPlayerSpec {
  std::size_t N = 0;
  std::vector<double> rewards;
  std::vector<double> costs;

  double reward(std::size_t n) const { return rewards[n - 1]; }
};

/// Throws InvalidParameter (sizes, N), NotDecreasing, Negative or InvalidCost.
void validate_spec(const NPlayerSpec& spec);

/// N players all with the same cost c.
NPlayerSpec constant_cost_spec(std::vector<double> rewards, double c);

struct NEquilibrium {
  std::vector<double> values;   ///< v_0..v_N
  std::vector<double> efforts;  ///< lambda*_0..lambda*_{N-1}
  NPlayerSpec spec;
};

/// Backward recursion v_n = (R_{n+1} + 2(N-n-1) v_{n+1}) / (1 + 2(N-n-1)),
/// v_N = R_N, and lambda*_n = (R_{n+1} - v_n) / (2 c_n).
NEquilibrium solve_recursion(const NPlayerSpec& spec);

/// max_n |R_{n+1} - v_n + 2(N-n-1)(v_{n+1} - v_n)|.
double difference_residual(const NEquilibrium& eq);

/// sum_{n < n0} 1 / ((N - n) lambda*_n); +infinity if an effort vanishes.
double expected_completion(const NEquilibrium& eq, std::size_t n0);

struct SimResult {
  std::vector<double> samples;  ///< sample p is a function of (seed, p) only
  double mean = 0.0;
  double std_error = 0.0;  ///< sample standard deviation / sqrt(paths)
  std::size_t paths = 0;
  std::uint64_t seed = 0;
};

/// Draws T_{n0} as a sum of exponential holding times with rates
/// (N - n) lambda*_n. threads = 0 uses the hardware concurrency; the samples
/// do not depend on it. Throws AbsorbedBeforeTarget when some lambda*_n = 0
/// with n < n0.
SimResult simulate(const NPlayerSpec& spec, std::size_t n0, std::size_t paths,
                   std::uint64_t seed, unsigned threads = 0);

/// Sum of 1 / ((N - n) lambda*_n)^2: the variance of T_{n0}.
double completion_variance(const NEquilibrium& eq, std::size_t n0);

}  // namespace rankrace
