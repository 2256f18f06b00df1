#include "rankrace/nplayer_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "rankrace/errors.hpp"

namespace rankrace {
namespace {

// splitmix64 finalizer: a bijective mix, used as a counter-based generator.
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform in (0, 1], so -log is finite.
double unit_open_zero(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

void require_n0(const NPlayerSpec& spec, std::size_t n0) {
  if (n0 < 1 || n0 >= spec.N) {
    std::ostringstream os;
    os << "target head count n0 = " << n0 << " must lie in {1, ..., N - 1} with N = " << spec.N;
    throw Error(ErrorKind::InvalidParameter, os.str());
  }
}

}  // namespace

void validate_spec(const NPlayerSpec& spec) {
  if (spec.N < 1) throw Error(ErrorKind::InvalidParameter, "N must be at least 1");
  if (spec.rewards.size() != spec.N || spec.costs.size() != spec.N) {
    std::ostringstream os;
    os << "expected " << spec.N << " rewards R_1..R_N and " << spec.N
       << " costs c_0..c_{N-1}, got " << spec.rewards.size() << " and " << spec.costs.size();
    throw Error(ErrorKind::InvalidParameter, os.str());
  }
  for (std::size_t n = 1; n <= spec.N; ++n) {
    const double r = spec.reward(n);
    if (!std::isfinite(r)) throw Error(ErrorKind::InvalidParameter, "rewards must be finite");
    if (r < 0.0) {
      std::ostringstream os;
      os << "R_" << n << " = " << r << " is negative";
      throw Error(ErrorKind::Negative, os.str());
    }
    if (n > 1 && r > spec.reward(n - 1)) {
      std::ostringstream os;
      os << "R_" << n << " = " << r << " exceeds R_" << n - 1 << " = " << spec.reward(n - 1);
      throw Error(ErrorKind::NotDecreasing, os.str());
    }
  }
  for (std::size_t n = 0; n < spec.N; ++n) {
    if (!(std::isfinite(spec.costs[n]) && spec.costs[n] > 0.0)) {
      std::ostringstream os;
      os << "c_" << n << " = " << spec.costs[n] << " must be positive and finite";
      throw Error(ErrorKind::InvalidCost, os.str());
    }
  }
}

NPlayerSpec constant_cost_spec(std::vector<double> rewards, double c) {
  NPlayerSpec spec;
  spec.N = rewards.size();
  spec.rewards = std::move(rewards);
  spec.costs.assign(spec.N, c);
  return spec;
}

NEquilibrium solve_recursion(const NPlayerSpec& spec) {
  validate_spec(spec);
  const std::size_t N = spec.N;
  NEquilibrium eq{std::vector<double>(N + 1), std::vector<double>(N), spec};
  eq.values[N] = spec.reward(N);
  for (std::size_t n = N; n-- > 0;) {
    const double k = 2.0 * static_cast<double>(N - n - 1);
    eq.values[n] = (spec.reward(n + 1) + k * eq.values[n + 1]) / (1.0 + k);
    // R_{n+1} >= v_n holds in exact arithmetic; clip rounding below zero.
    eq.efforts[n] = std::max(0.0, spec.reward(n + 1) - eq.values[n]) / (2.0 * spec.costs[n]);
  }
  return eq;
}

double difference_residual(const NEquilibrium& eq) {
  const std::size_t N = eq.spec.N;
  double worst = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const double k = 2.0 * static_cast<double>(N - n - 1);
    const double res = eq.spec.reward(n + 1) - eq.values[n] + k * (eq.values[n + 1] - eq.values[n]);
    worst = std::max(worst, std::abs(res));
  }
  return worst;
}

double expected_completion(const NEquilibrium& eq, std::size_t n0) {
  require_n0(eq.spec, n0);
  double total = 0.0;
  for (std::size_t n = 0; n < n0; ++n) {
    const double rate = static_cast<double>(eq.spec.N - n) * eq.efforts[n];
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    total += 1.0 / rate;
  }
  return total;
}

double completion_variance(const NEquilibrium& eq, std::size_t n0) {
  require_n0(eq.spec, n0);
  double total = 0.0;
  for (std::size_t n = 0; n < n0; ++n) {
    const double rate = static_cast<double>(eq.spec.N - n) * eq.efforts[n];
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    total += 1.0 / (rate * rate);
  }
  return total;
}

SimResult simulate(const NPlayerSpec& spec, std::size_t n0, std::size_t paths, std::uint64_t seed,
                   unsigned threads) {
  const NEquilibrium eq = solve_recursion(spec);
  require_n0(spec, n0);
  if (paths < 1) throw Error(ErrorKind::InvalidParameter, "paths must be at least 1");
  std::vector<double> rates(n0);
  for (std::size_t n = 0; n < n0; ++n) {
    rates[n] = static_cast<double>(spec.N - n) * eq.efforts[n];
    if (!(rates[n] > 0.0)) {
      std::ostringstream os;
      os << "equilibrium effort vanishes with " << n << " arrivals, before the target n0 = " << n0
         << "; the chain is absorbed and T_{n0} is infinite";
      throw Error(ErrorKind::AbsorbedBeforeTarget, os.str());
    }
  }

  SimResult out;
  out.samples.resize(paths);
  out.paths = paths;
  out.seed = seed;
  const std::uint64_t key = mix(seed);
  auto run_block = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const std::uint64_t path_key = mix(key ^ mix(static_cast<std::uint64_t>(p)));
      double t = 0.0;
      for (std::size_t n = 0; n < n0; ++n) {
        const double u = unit_open_zero(mix(path_key + static_cast<std::uint64_t>(n)));
        t += -std::log(u) / rates[n];
      }
      out.samples[p] = t;
    }
  };

  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, (paths + 4095) / 4096));
  if (workers <= 1) {
    run_block(0, paths);
  } else {
    std::vector<std::thread> pool;
    const std::size_t block = (paths + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t begin = std::min(paths, w * block);
      const std::size_t end = std::min(paths, begin + block);
      pool.emplace_back(run_block, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  // Serial reductions keep the statistics independent of the work split.
  double sum = 0.0;
  for (double s : out.samples) sum += s;
  out.mean = sum / static_cast<double>(paths);
  if (paths > 1) {
    double ss = 0.0;
    for (double s : out.samples) ss += (s - out.mean) * (s - out.mean);
    out.std_error = std::sqrt(ss / static_cast<double>(paths - 1)) / std::sqrt(static_cast<double>(paths));
  }
  return out;
}

}  // namespace rankrace
