#include "rankrace/nplayer_principal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rankrace/errors.hpp"

namespace rankrace {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_problem(const NPrincipalProblem& p, bool allow_zero_budget) {
  if (p.N < 2) throw Error(ErrorKind::InvalidParameter, "N must be at least 2");
  if (p.n0 < 1 || p.n0 >= p.N) {
    std::ostringstream os;
    os << "target head count n0 = " << p.n0 << " must lie in {1, ..., N - 1} with N = " << p.N;
    throw Error(ErrorKind::InvalidParameter, os.str());
  }
  const bool budget_ok = allow_zero_budget ? p.budget >= 0.0 : p.budget > 0.0;
  if (!(std::isfinite(p.budget) && budget_ok)) {
    throw Error(ErrorKind::InvalidParameter, "budget must be positive and finite");
  }
  if (p.costs.size() != p.N) {
    std::ostringstream os;
    os << "expected " << p.N << " costs c_0..c_{N-1}, got " << p.costs.size();
    throw Error(ErrorKind::InvalidParameter, os.str());
  }
  for (std::size_t n = 0; n < p.N; ++n) {
    if (!(std::isfinite(p.costs[n]) && p.costs[n] > 0.0)) {
      std::ostringstream os;
      os << "c_" << n << " = " << p.costs[n] << " must be positive and finite";
      throw Error(ErrorKind::InvalidCost, os.str());
    }
  }
}

// Budget weight of x_n: sum_{n=1}^{n0} R_n = sum_{n<n0} a_n x_n.
double budget_weight(std::size_t N, std::size_t n) {
  const double m = static_cast<double>(N - n - 1);
  return (2.0 * static_cast<double>(N) - static_cast<double>(n) - 1.0) / (2.0 * m);
}

// v_{n0} = 0, v_n = v_{n+1} + x_n / (2(N-n-1)), R_{n+1} = x_n + v_n.
std::vector<double> rewards_from_gaps(const std::vector<double>& x, std::size_t N) {
  std::vector<double> R(N, 0.0);
  double v = 0.0;
  for (std::size_t n = x.size(); n-- > 0;) {
    v += x[n] / (2.0 * static_cast<double>(N - n - 1));
    R[n] = x[n] + v;
  }
  return R;
}

// Pool-adjacent-violators fit by a non-increasing sequence.
std::vector<double> isotonic_decreasing(const std::vector<double>& z) {
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  for (double v : z) {
    sums.push_back(v);
    counts.push_back(1);
    while (sums.size() > 1) {
      const std::size_t k = sums.size() - 1;
      if (sums[k - 1] / counts[k - 1] >= sums[k] / counts[k]) break;
      sums[k - 1] += sums[k];
      counts[k - 1] += counts[k];
      sums.pop_back();
      counts.pop_back();
    }
  }
  std::vector<double> out;
  for (std::size_t b = 0; b < sums.size(); ++b) out.insert(out.end(), counts[b], sums[b] / counts[b]);
  return out;
}

// Euclidean projection onto {R_1 >= ... >= R_m >= 0, sum R <= total}.
std::vector<double> project_feasible(const std::vector<double>& z, double total) {
  const std::vector<double> iso = isotonic_decreasing(z);
  auto clipped_sum = [&](double shift) {
    double s = 0.0;
    for (double v : iso) s += std::max(0.0, v - shift);
    return s;
  };
  double shift = 0.0;
  if (clipped_sum(0.0) > total) {
    double lo = 0.0;
    double hi = *std::max_element(iso.begin(), iso.end());
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (clipped_sum(mid) > total ? lo : hi) = mid;
    }
    shift = hi;
  }
  std::vector<double> out(iso.size());
  for (std::size_t i = 0; i < iso.size(); ++i) out[i] = std::max(0.0, iso[i] - shift);
  return out;
}

NPlayerSpec spec_for(const std::vector<double>& rewards, const NPrincipalProblem& p) {
  NPlayerSpec spec;
  spec.N = p.N;
  spec.rewards = rewards;
  spec.costs = p.costs;
  return spec;
}

}  // namespace

NPrincipalProblem constant_cost_problem(std::size_t N, std::size_t n0, double budget, double c) {
  return NPrincipalProblem{N, n0, budget, std::vector<double>(N, c)};
}

NCostCheck check_cost_assumption_n(const NPrincipalProblem& p) {
  NCostCheck out;
  const double N = static_cast<double>(p.N);
  for (std::size_t i = 1; i < p.n0 && i < p.costs.size(); ++i) {
    const double n = static_cast<double>(i);
    const double factor = (2 * N - 2 * n + 1) * (2 * N - 2 * n + 1) * (2 * N - n - 1) /
                          (4 * (N - n - 1) * (N - n + 1) * (2 * N - n));
    if (p.costs[i] > p.costs[i - 1] * factor) {
      out.ok = false;
      out.witness = i;
      return out;
    }
  }
  return out;
}

NPrincipalSolution optimal_reward_n(const NPrincipalProblem& p) {
  validate_problem(p, false);
  const NCostCheck check = check_cost_assumption_n(p);
  if (!check.ok) {
    const std::size_t n = *check.witness;
    std::ostringstream os;
    os << "c_" << n << " = " << p.costs[n] << " is too large relative to c_" << n - 1 << " = "
       << p.costs[n - 1]
       << "; c_n <= c_{n-1} (2N-2n+1)^2 (2N-n-1) / (4 (N-n-1)(N-n+1)(2N-n)) is required for n < n0";
    throw Error(ErrorKind::CostAssumptionViolated, os.str());
  }

  const std::size_t N = p.N;
  const double Nd = static_cast<double>(N);
  NPrincipalSolution s;
  s.problem = p;
  s.y.resize(p.n0);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.n0; ++i) {
    const double n = static_cast<double>(i);
    const double c = p.costs[i];
    s.y[i] = std::sqrt(c * Nd * (Nd - n - 1) / ((Nd - n) * (2 * Nd - n - 1)));
    sum += std::sqrt(c * (2 * Nd - n - 1) / ((Nd - n) * (Nd - n - 1)));
  }
  s.constant_C = sum / (2.0 * std::sqrt(Nd));
  const double scale = p.budget / s.constant_C;

  // R*_n = (B / C) (y_{n-1} + 1/2 sum_{k=n-1}^{n0-1} y_k / (N-k-1)), accumulated from n0 down.
  s.rewards.assign(N, 0.0);
  double tail = 0.0;
  for (std::size_t k = p.n0; k-- > 0;) {
    tail += s.y[k] / (Nd - static_cast<double>(k) - 1.0);
    s.rewards[k] = scale * (s.y[k] + 0.5 * tail);
  }
  s.expected_time = 4.0 * s.constant_C * s.constant_C / p.budget;
  s.x.resize(p.n0);
  for (std::size_t i = 0; i < p.n0; ++i) s.x[i] = scale * s.y[i];
  s.theta = 4.0 * s.constant_C * s.constant_C / (Nd * p.budget * p.budget);
  s.efforts.assign(N, 0.0);
  for (std::size_t i = 0; i < p.n0; ++i) s.efforts[i] = s.x[i] / (2.0 * p.costs[i]);
  return s;
}

double expected_time_of(const std::vector<double>& rewards, const NPrincipalProblem& p) {
  return expected_completion(solve_recursion(spec_for(rewards, p)), p.n0);
}

OracleResult brute_force_oracle(const NPrincipalProblem& p) {
  validate_problem(p, true);
  const std::size_t N = p.N;
  const std::size_t m = p.n0;
  const double total = static_cast<double>(N) * p.budget;
  OracleResult out;
  if (p.budget == 0.0) {
    out.rewards.assign(N, 0.0);
    out.expected_time = kInf;
    return out;
  }

  // Minimize sum 2 c_n / ((N-n) x_n) subject to sum a_n x_n = N B. Stationarity
  // gives x_n^2 a_n theta = 2 c_n / (N-n); damped multiplicative steps toward it,
  // renormalized onto the budget each time.
  std::vector<double> a(m), k(m), x(m, 1.0);
  for (std::size_t n = 0; n < m; ++n) {
    a[n] = budget_weight(N, n);
    k[n] = 2.0 * p.costs[n] / static_cast<double>(N - n);
  }
  auto normalize = [&] {
    double spent = 0.0;
    for (std::size_t n = 0; n < m; ++n) spent += a[n] * x[n];
    for (double& v : x) v *= total / spent;
  };
  normalize();
  for (std::size_t it = 0; it < 10000; ++it) {
    double change = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
      const double ratio = k[n] / (a[n] * x[n] * x[n]);
      const double next = x[n] * std::pow(ratio, 0.25);
      change = std::max(change, std::abs(next / x[n] - 1.0));
      x[n] = next;
    }
    normalize();
    out.iterations = it + 1;
    if (change < 1e-15) break;
  }

  std::vector<double> R = rewards_from_gaps(x, N);
  bool monotone = true;
  for (std::size_t n = 0; n + 1 < m; ++n) {
    if (R[n + 1] > R[n] * (1.0 + 1e-12)) monotone = false;
  }
  if (monotone) {
    for (std::size_t n = 0; n + 1 < m; ++n) R[n + 1] = std::min(R[n + 1], R[n]);
    out.rewards = R;
    out.expected_time = expected_time_of(R, p);
    return out;
  }

  // Projected gradient on (R_1..R_{n0}) with Armijo backtracking. The
  // objective and its gradient come straight from the recursion so that
  // trial points need no validation; R_n = 0 for n > n0 keeps v_{n0} = 0.
  out.used_fallback = true;
  auto evaluate = [&](const std::vector<double>& head, std::vector<double>* grad) {
    // dv[n][j] = d v_n / d R_{j+1}
    std::vector<double> v(m + 1, 0.0);
    std::vector<std::vector<double>> dv(m + 1, std::vector<double>(m, 0.0));
    for (std::size_t n = m; n-- > 0;) {
      const double kn = 2.0 * static_cast<double>(N - n - 1);
      v[n] = (head[n] + kn * v[n + 1]) / (1.0 + kn);
      for (std::size_t j = 0; j < m; ++j) dv[n][j] = kn * dv[n + 1][j] / (1.0 + kn);
      dv[n][n] += 1.0 / (1.0 + kn);
    }
    double f = 0.0;
    if (grad) grad->assign(m, 0.0);
    for (std::size_t n = 0; n < m; ++n) {
      const double gap = head[n] - v[n];
      if (!(gap > 0.0)) return kInf;
      f += k[n] / gap;
      if (grad) {
        const double w = -k[n] / (gap * gap);
        for (std::size_t j = 0; j < m; ++j) (*grad)[j] += w * ((j == n ? 1.0 : 0.0) - dv[n][j]);
      }
    }
    return f;
  };
  std::vector<double> cur = project_feasible(std::vector<double>(R.begin(), R.begin() + m), total);
  double f = evaluate(cur, nullptr);
  const std::vector<double> flat(m, total / static_cast<double>(m));
  if (const double ff = evaluate(flat, nullptr); !(f <= ff)) {
    cur = flat;
    f = ff;
  }
  double step = 1.0;
  std::vector<double> grad(m);
  for (std::size_t it = 0; it < 200000; ++it) {
    evaluate(cur, &grad);
    bool accepted = false;
    std::vector<double> next;
    double fn = f;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<double> trial(m);
      for (std::size_t i = 0; i < m; ++i) trial[i] = cur[i] - step * grad[i];
      next = project_feasible(trial, total);
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        lin += grad[i] * (next[i] - cur[i]);
        sq += (next[i] - cur[i]) * (next[i] - cur[i]);
      }
      fn = evaluate(next, nullptr);
      if (std::isfinite(fn) && fn <= f + lin + sq / (2.0 * step)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    out.iterations += 1;
    if (!accepted) break;
    const double improvement = f - fn;
    cur = std::move(next);
    f = fn;
    step *= 2.0;
    if (improvement <= 1e-16 * f) break;
  }
  out.rewards.assign(N, 0.0);
  std::copy(cur.begin(), cur.end(), out.rewards.begin());
  out.expected_time = expected_time_of(out.rewards, p);
  return out;
}

}  // namespace rankrace
