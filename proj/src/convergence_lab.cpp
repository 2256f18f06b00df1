#include "rankrace/convergence_lab.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "rankrace/errors.hpp"

namespace rankrace {
namespace {

void require_ladder(const std::vector<std::size_t>& Ns) {
  if (Ns.size() < 2) throw Error(ErrorKind::InvalidParameter, "an N ladder needs at least 2 points");
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (Ns[i] < 2) throw Error(ErrorKind::InvalidParameter, "ladder entries must be at least 2");
    if (i > 0 && Ns[i] <= Ns[i - 1]) {
      throw Error(ErrorKind::InvalidParameter, "ladder must be strictly increasing");
    }
  }
}

std::size_t head_count(double alpha, std::size_t N) {
  return static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(N) - 1e-12));
}

// One task per N; results come back in ladder order.
template <class F>
auto per_N(const std::vector<std::size_t>& Ns, F f) {
  using T = decltype(f(std::size_t{}));
  std::vector<std::future<T>> tasks;
  for (std::size_t N : Ns) tasks.push_back(std::async(std::launch::async, f, N));
  std::vector<T> out;
  for (auto& t : tasks) out.push_back(t.get());
  return out;
}

std::vector<double> with_ends(std::vector<double> interior) {
  interior.insert(interior.begin(), 0.0);
  interior.push_back(1.0);
  return interior;
}

// Interior sets [r_{i-1} + 1/N, r_i - 1/N], last [r_m + 1/N, 1]; empty ones dropped.
std::vector<std::pair<double, double>> interior_sets(const std::vector<double>& partition,
                                                     std::size_t N) {
  const double h = 1.0 / static_cast<double>(N);
  std::vector<std::pair<double, double>> sets;
  for (std::size_t i = 1; i < partition.size(); ++i) {
    const double lo = partition[i - 1] + h;
    const double hi = i + 1 == partition.size() ? 1.0 : partition[i] - h;
    if (lo <= hi) sets.emplace_back(lo, hi);
  }
  return sets;
}

}  // namespace

std::vector<double> discretize_sampling(const MFRewardScheme& R, std::size_t N) {
  if (N < 1) throw Error(ErrorKind::InvalidParameter, "N must be at least 1");
  std::vector<double> out(N);
  for (std::size_t n = 1; n <= N; ++n) out[n - 1] = R(static_cast<double>(n) / static_cast<double>(N));
  return out;
}

std::vector<double> discretize_average(const MFRewardScheme& R, std::size_t N) {
  if (N < 1) throw Error(ErrorKind::InvalidParameter, "N must be at least 1");
  const double Nd = static_cast<double>(N);
  std::vector<double> out(N);
  for (std::size_t n = 1; n <= N; ++n) {
    out[n - 1] = Nd * integrate(R.fn(), static_cast<double>(n - 1) / Nd, static_cast<double>(n) / Nd);
    // Averages of a non-increasing R are non-increasing; clip quadrature noise.
    if (n > 1) out[n - 1] = std::min(out[n - 1], out[n - 2]);
  }
  return out;
}

std::vector<double> discretize_cost(const MFCost& c, std::size_t N) {
  std::vector<double> out(N);
  for (std::size_t n = 0; n < N; ++n) out[n] = c(static_cast<double>(n) / static_cast<double>(N));
  return out;
}

std::vector<double> interior_breakpoints(const PiecewiseFn& R, const PiecewiseFn& c) {
  std::vector<double> out;
  for (const PiecewiseFn* f : {&R, &c}) {
    for (double b : f->breakpoints()) {
      if (b > 0.0 && b < 1.0) out.push_back(b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

DiscretizationReport check_discretization(const std::vector<double>& rewards,
                                          const MFRewardScheme& R, std::vector<double> partition,
                                          double K) {
  const std::size_t N = rewards.size();
  if (N < 1) throw Error(ErrorKind::InvalidParameter, "empty reward vector");
  if (!(K > 0.0)) throw Error(ErrorKind::InvalidParameter, "candidate K must be positive");
  if (partition.empty()) partition = {0.0, 1.0};
  if (partition.front() != 0.0 || partition.back() != 1.0 ||
      !std::is_sorted(partition.begin(), partition.end())) {
    throw Error(ErrorKind::InvalidGrid, "partition must increase from 0 to 1");
  }
  const double Nd = static_cast<double>(N);
  double worst = 0.0;
  for (const auto& [lo, hi] : interior_sets(partition, N)) {
    // Cells ((n-1)/N, n/N] meeting [lo, hi].
    const auto first = static_cast<std::size_t>(std::max(1.0, std::ceil(lo * Nd)));
    const auto last = static_cast<std::size_t>(std::min(Nd, std::ceil(hi * Nd)));
    for (std::size_t n = first; n <= last; ++n) {
      const double a = std::max(lo, static_cast<double>(n - 1) / Nd);
      const double b = std::min(hi, static_cast<double>(n) / Nd);
      if (a > b) continue;
      const double rn = rewards[n - 1];
      // At a cell's open left end R is approached from the right.
      const double ra = a == static_cast<double>(n - 1) / Nd ? R.fn().right_limit(a) : R(a);
      worst = std::max({worst, std::abs(rn - ra), std::abs(rn - R(b))});
    }
  }
  return DiscretizationReport{N, worst, std::move(partition), K, worst <= K / Nd * (1.0 + 1e-12)};
}

RateFit fit_rate(std::vector<std::size_t> Ns, std::vector<double> errors,
                 std::vector<bool> excluded) {
  if (Ns.size() != errors.size()) throw Error(ErrorKind::InvalidParameter, "size mismatch");
  if (excluded.empty()) excluded.assign(Ns.size(), false);
  RateFit fit;
  fit.Ns = std::move(Ns);
  fit.errors = std::move(errors);
  fit.excluded = std::move(excluded);

  fit.exact = std::all_of(fit.errors.begin(), fit.errors.end(), [](double e) { return e == 0.0; });
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < fit.Ns.size(); ++i) {
    if (fit.excluded[i] || !(fit.errors[i] > 0.0) || !std::isfinite(fit.errors[i])) continue;
    xs.push_back(std::log(static_cast<double>(fit.Ns[i])));
    ys.push_back(std::log(fit.errors[i]));
  }
  if (fit.exact || xs.size() < 2) {
    fit.slope = std::nan("");
    fit.intercept = std::nan("");
    fit.r_squared = std::nan("");
    fit.contaminated = !fit.exact;
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] / n;
    my += ys[i] / n;
  }
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.contaminated = fit.r_squared < 0.98;
  return fit;
}

bool large_enough(std::size_t N, const std::vector<double>& interior) {
  if (interior.empty()) return true;
  const double Nd = static_cast<double>(N);
  return interior.back() < 1.0 - std::sqrt(1.0 / Nd) - 1.0 / Nd;
}

ValueConvergence value_convergence_experiment(const MFRewardScheme& R, const MFCost& c,
                                              const std::vector<std::size_t>& Ns) {
  require_ladder(Ns);
  const PiecewiseFn v = equilibrium_value(R);
  const PiecewiseFn lambda = equilibrium_effort(R, c, v);
  const std::vector<double> partition = with_ends(interior_breakpoints(R.fn(), c.fn()));

  struct Errors {
    double value;
    double effort;
  };
  const std::vector<Errors> errs = per_N(Ns, [&](std::size_t N) {
    const NEquilibrium eq = solve_recursion(NPlayerSpec{N, discretize_sampling(R, N), discretize_cost(c, N)});
    const double Nd = static_cast<double>(N);
    // v^N_{floor(rN)} is constant on [n/N, (n+1)/N) and v is monotone: probe the ends.
    double ev = std::abs(eq.values[N] - v(1.0));
    for (std::size_t n = 0; n < N; ++n) {
      const double a = static_cast<double>(n) / Nd;
      const double b = static_cast<double>(n + 1) / Nd;
      ev = std::max({ev, std::abs(eq.values[n] - v(a)), std::abs(eq.values[n] - v.left_limit(b))});
    }
    // lambda need not be monotone, so cells are probed at 9 points.
    double el = 0.0;
    for (const auto& [lo, hi] : interior_sets(partition, N)) {
      const auto first = static_cast<std::size_t>(std::floor(lo * Nd));
      const auto last = std::min(N - 1, static_cast<std::size_t>(std::floor(hi * Nd)));
      for (std::size_t n = first; n <= last; ++n) {
        const double a = std::max(lo, static_cast<double>(n) / Nd);
        const double b = std::min(hi, static_cast<double>(n + 1) / Nd);
        if (a > b) continue;
        for (int k = 0; k <= 8; ++k) {
          const double r = k == 8 ? b : a + (b - a) * k / 8.0;
          if (r == static_cast<double>(n + 1) / Nd) {
            el = std::max(el, std::abs(eq.efforts[n] - lambda.left_limit(r)));
          } else {
            el = std::max(el, std::abs(eq.efforts[n] - lambda(r)));
          }
        }
      }
    }
    return Errors{ev, el};
  });

  const std::vector<double> interior = interior_breakpoints(R.fn(), c.fn());
  std::vector<double> ev, el;
  std::vector<bool> excluded;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    ev.push_back(errs[i].value);
    el.push_back(errs[i].effort);
    excluded.push_back(!large_enough(Ns[i], interior));
  }
  return ValueConvergence{fit_rate(Ns, ev, excluded), fit_rate(Ns, el, excluded)};
}

PrincipalConvergence principal_convergence_experiment(double alpha, double budget, const MFCost& c,
                                                      const std::vector<std::size_t>& Ns) {
  require_ladder(Ns);
  const PrincipalSolution mf = optimal_reward({alpha, budget, c});

  struct Point {
    double time;
    double reward_error;
    double C;
  };
  const std::vector<Point> pts = per_N(Ns, [&](std::size_t N) {
    const std::size_t n0 = head_count(alpha, N);
    const NPrincipalSolution s = optimal_reward_n({N, n0, budget, discretize_cost(c, N)});
    const double Nd = static_cast<double>(N);
    // R^N_{ceil(rN)} is constant on ((n-1)/N, n/N] and R* is monotone on [0, alpha].
    double worst = std::abs(s.rewards[0] - mf.reward(0.0));
    for (std::size_t n = 1; n <= n0; ++n) {
      const double a = static_cast<double>(n - 1) / Nd;
      const double b = std::min(alpha, static_cast<double>(n) / Nd);
      if (a >= alpha) break;
      const double rn = s.rewards[n - 1];
      worst = std::max({worst, std::abs(rn - mf.reward.fn().right_limit(a)), std::abs(rn - mf.reward(b))});
    }
    return Point{s.expected_time, worst, s.constant_C};
  });

  PrincipalConvergence out;
  out.minimal_time = mf.minimal_time;
  out.constant_C = mf.constant_C;
  std::vector<double> te, re;
  for (const Point& p : pts) {
    out.expected_times.push_back(p.time);
    out.constants.push_back(p.C);
    te.push_back(std::abs(p.time - mf.minimal_time));
    re.push_back(p.reward_error);
  }
  out.times = fit_rate(Ns, te);
  out.rewards = fit_rate(Ns, re);
  return out;
}

EpsOptimality eps_optimality_experiment(double alpha, double budget, const MFCost& c,
                                        const std::vector<std::size_t>& Ns) {
  require_ladder(Ns);
  const PrincipalSolution mf = optimal_reward({alpha, budget, c});
  const std::vector<double> gaps = per_N(Ns, [&](std::size_t N) {
    const std::size_t n0 = head_count(alpha, N);
    const std::vector<double> costs = discretize_cost(c, N);
    const NPrincipalSolution exact = optimal_reward_n({N, n0, budget, costs});
    const NEquilibrium eq = solve_recursion(NPlayerSpec{N, discretize_sampling(mf.reward, N), costs});
    return expected_completion(eq, n0) - exact.expected_time;
  });
  EpsOptimality out;
  out.signed_gaps = gaps;
  std::vector<double> abs_gaps;
  for (double g : gaps) abs_gaps.push_back(std::abs(g));
  out.gaps = fit_rate(Ns, abs_gaps);
  return out;
}

double fixed_count_time(std::size_t N, std::size_t n0, double K, double c) {
  if (n0 < 1 || n0 >= N) throw Error(ErrorKind::InvalidParameter, "fixed count needs 1 <= n0 < N");
  const double Nd = static_cast<double>(N);
  double sum = 0.0;
  for (std::size_t i = 0; i < n0; ++i) {
    const double n = static_cast<double>(i);
    sum += std::sqrt(c / (1.0 - n / Nd) * (1.0 + 1.0 / (1.0 - (n + 1.0) / Nd)));
  }
  return sum * sum / (Nd * K);
}

SizeEffectSeries size_effect_fixed_proportion(double alpha, double budget, double c,
                                              const std::vector<std::size_t>& Ns) {
  require_ladder(Ns);
  SizeEffectSeries out;
  out.Ns = Ns;
  for (std::size_t N : Ns) {
    out.expected_times.push_back(
        optimal_reward_n(constant_cost_problem(N, head_count(alpha, N), budget, c)).expected_time);
  }
  return out;
}

SizeEffectSeries size_effect_fixed_count(std::size_t n0, double K, double c,
                                         const std::vector<std::size_t>& Ns) {
  require_ladder(Ns);
  if (!(K > 0.0)) throw Error(ErrorKind::InvalidParameter, "total prize K must be positive");
  SizeEffectSeries out;
  out.Ns = Ns;
  for (std::size_t N : Ns) {
    const double B = K / static_cast<double>(N);
    out.expected_times.push_back(optimal_reward_n(constant_cost_problem(N, n0, B, c)).expected_time);
    out.display_times.push_back(fixed_count_time(N, n0, K, c));
  }
  return out;
}

std::vector<std::size_t> dyadic_ladder(unsigned lo, unsigned hi) {
  if (lo > hi || hi > 40) throw Error(ErrorKind::InvalidParameter, "bad dyadic ladder bounds");
  std::vector<std::size_t> out;
  for (unsigned k = lo; k <= hi; ++k) out.push_back(std::size_t{1} << k);
  return out;
}

}  // namespace rankrace
