#include "rankrace/mf_principal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "rankrace/errors.hpp"
#include "rankrace/quadrature.hpp"

namespace rankrace {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Tabulation density on [0, alpha]; pieces get a share proportional to length.
constexpr std::size_t kNodesOnAlpha = 4096;
constexpr std::size_t kMinNodesPerPiece = 64;

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidParameter,
                "target proportion alpha must lie strictly inside (0, 1); at alpha = 1 every "
                "scheme needs infinite time");
  }
}

bool is_linear_table(const Piece& piece) {
  const auto* t = std::get_if<Tabulated>(&piece);
  return t != nullptr && t->slopes.empty();
}

std::vector<double> nodes_on(double lo, double hi, double alpha, const std::vector<const Piece*>& sources) {
  const auto share = static_cast<std::size_t>(std::ceil(kNodesOnAlpha * (hi - lo) / alpha));
  const std::size_t n = std::max(kMinNodesPerPiece, share);
  std::vector<double> nodes(n + 1);
  for (std::size_t i = 0; i <= n; ++i) nodes[i] = lo + (hi - lo) * static_cast<double>(i) / n;
  nodes.back() = hi;
  for (const Piece* p : sources) append_kinks(*p, lo, hi, nodes);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

// One piece on [lo, hi] of g(r) = head(r) + weight * (int_r^hi integrand + tail),
// tabulated on nodes with optional Hermite slopes. Returns the piece and adds
// int_lo^hi integrand to tail.
struct TailSpec {
  std::function<double(double)> head;
  std::function<double(double)> integrand;
  std::function<double(double)> slope;  // empty: linear interpolation
  double weight = 1.0;
};

Piece tabulate_with_tail(const std::vector<double>& nodes, const TailSpec& spec, double& tail) {
  std::vector<double> values(nodes.size());
  std::vector<double> slopes;
  double running = tail;
  for (std::size_t i = nodes.size(); i-- > 0;) {
    if (i + 1 < nodes.size()) running += quad::integrate(spec.integrand, nodes[i], nodes[i + 1]);
    values[i] = spec.head(nodes[i]) + spec.weight * running;
  }
  if (spec.slope) {
    slopes.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) slopes[i] = spec.slope(nodes[i]);
  }
  tail = running;
  return Tabulated{nodes, std::move(values), std::move(slopes)};
}

// Breakpoints of src below alpha, then alpha and 1.
std::vector<double> breakpoints_on_alpha(const PiecewiseFn& src, double alpha) {
  std::vector<double> bps;
  for (double b : src.breakpoints()) {
    if (b < alpha) bps.push_back(b);
  }
  bps.push_back(alpha);
  bps.push_back(1.0);
  return bps;
}

double integrate_on_alpha(const std::function<double(double)>& g, double alpha,
                          std::initializer_list<const PiecewiseFn*> fns) {
  std::vector<double> cuts{0.0, alpha};
  for (const PiecewiseFn* fn : fns) {
    for (double x : fn->smoothness_points()) {
      if (x > 0.0 && x < alpha) cuts.push_back(x);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  return quad::integrate_split(g, cuts);
}

}  // namespace

CostCheck check_cost_assumption(const MFCost& cost, std::size_t grid) {
  const PiecewiseFn& c = cost.fn();
  auto g = [](double cr, double r) { return cr * (1.0 - r) / (2.0 - r); };

  // Ordered probes (rank, value); at breakpoints both one-sided limits.
  std::vector<double> ranks;
  for (std::size_t i = 0; i <= grid; ++i) ranks.push_back(static_cast<double>(i) / grid);
  for (double x : c.smoothness_points()) ranks.push_back(x);
  std::sort(ranks.begin(), ranks.end());
  ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());

  CostCheck out;
  double prev_rank = 0.0;
  double prev = g(c(0.0), 0.0);
  for (double r : ranks) {
    for (double value : {g(c.left_limit(r), r), g(c.right_limit(r), r)}) {
      if (value > prev * (1.0 + 1e-12) + 1e-300) {
        out.ok = false;
        out.witness = std::make_pair(prev_rank, r);
        return out;
      }
      prev = value;
      prev_rank = r;
    }
  }
  return out;
}

double unit_cost_constant(double alpha) {
  require_alpha(alpha);
  const double s2 = std::sqrt(2.0);
  const double w = std::sqrt(2.0 - alpha);
  return s2 - w + 0.5 * std::log((1.0 + w) * (1.0 - s2) / ((1.0 - w) * (1.0 + s2)));
}

double principal_constant(double alpha, const MFCost& cost) {
  require_alpha(alpha);
  if (const auto c = cost.constant_value()) return std::sqrt(*c) * unit_cost_constant(alpha);
  const PiecewiseFn& c = cost.fn();
  return 0.5 * integrate_on_alpha(
                   [&](double r) { return std::sqrt(cost(r) * (2.0 - r)) / (1.0 - r); }, alpha,
                   {&c});
}

PrincipalSolution optimal_reward(const PrincipalProblem& p) {
  require_alpha(p.alpha);
  if (!(std::isfinite(p.budget) && p.budget > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "budget must be positive");
  }
  const CostCheck check = check_cost_assumption(p.cost);
  if (!check.ok) {
    std::ostringstream os;
    os << "c(r)(1-r)/(2-r) must be non-increasing, but it increases from r = "
       << check.witness->first << " to r = " << check.witness->second
       << "; the candidate optimal scheme would not be decreasing";
    throw Error(ErrorKind::CostAssumptionViolated, os.str());
  }

  const double alpha = p.alpha;
  const double C = principal_constant(alpha, p.cost);
  const double scale = p.budget / C;
  const PiecewiseFn& c = p.cost.fn();
  const std::optional<double> c0 = p.cost.constant_value();

  const std::vector<double> bps = breakpoints_on_alpha(c, alpha);
  const std::size_t k = bps.size() - 1;
  std::vector<Piece> reward_pieces(k, Constant{0.0});
  std::vector<Piece> effort_pieces(k, Constant{0.0});

  // d/dr sqrt(c / (2 - r)) using the piece's derivative of c.
  auto ratio_slope = [&](const Piece& cp, double r) {
    const double cr = eval_piece(cp, r);
    const double d = derivative_piece(cp, r) / (2.0 - r) + cr / ((2.0 - r) * (2.0 - r));
    return d / (2.0 * std::sqrt(cr / (2.0 - r)));
  };
  // log((w + 1) / (w - 1)) with w = sqrt(2 - s) is an antiderivative of
  // -1 / ((1 - s) sqrt(2 - s)) in s.
  auto log_term = [](double s) {
    const double w = std::sqrt(2.0 - s);
    return std::log((w + 1.0) / (w - 1.0));
  };

  double tail = 0.0;
  for (std::size_t j = k - 1; j-- > 0;) {
    const double lo = bps[j];
    const double hi = bps[j + 1];
    const Piece& cp = c.piece(c.piece_index(hi));
    const std::vector<double> nodes = nodes_on(lo, hi, alpha, {&cp});
    const bool smooth = !is_linear_table(cp);

    TailSpec spec;
    spec.head = [&](double r) { return scale * std::sqrt(eval_piece(cp, r) / (2.0 - r)); };
    spec.integrand = [&](double s) {
      return std::sqrt(eval_piece(cp, s) / (2.0 - s)) / (1.0 - s);
    };
    spec.weight = 0.5 * scale;
    if (smooth) {
      spec.slope = [&](double r) {
        const double h = std::sqrt(eval_piece(cp, r) / (2.0 - r)) / (1.0 - r);
        return scale * (ratio_slope(cp, r) - 0.5 * h);
      };
    }
    if (c0) {
      // Exact inner integral for constant cost.
      const double sc = std::sqrt(*c0);
      std::vector<double> values(nodes.size());
      std::vector<double> slopes(nodes.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double r = nodes[i];
        values[i] = scale * sc * (1.0 / std::sqrt(2.0 - r) + 0.5 * (log_term(alpha) - log_term(r)));
        slopes[i] = spec.slope(r);
      }
      reward_pieces[j] = Tabulated{nodes, std::move(values), std::move(slopes)};
    } else {
      reward_pieces[j] = tabulate_with_tail(nodes, spec, tail);
    }

    // lambda* = (B / 2C) / sqrt((2 - r) c(r))
    std::vector<double> ev(nodes.size());
    std::vector<double> es;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      ev[i] = 0.5 * scale / std::sqrt((2.0 - nodes[i]) * eval_piece(cp, nodes[i]));
    }
    if (smooth) {
      es.resize(nodes.size());
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double r = nodes[i];
        const double cr = eval_piece(cp, r);
        const double q = (2.0 - r) * cr;
        const double dq = -cr + (2.0 - r) * derivative_piece(cp, r);
        es[i] = -0.25 * scale * dq / (q * std::sqrt(q));
      }
    }
    effort_pieces[j] = Tabulated{nodes, std::move(ev), std::move(es)};
  }

  PiecewiseFn reward_fn(bps, std::move(reward_pieces));
  PiecewiseFn effort_fn(bps, std::move(effort_pieces));
  std::optional<double> c_prime;
  if (c0) c_prime = C / std::sqrt(*c0);
  return PrincipalSolution{p,
                           validate_reward(std::move(reward_fn)),
                           std::move(effort_fn),
                           4.0 * C * C / p.budget,
                           C,
                           c_prime};
}

double minimal_budget(double T, double alpha, const MFCost& cost) {
  if (!(std::isfinite(T) && T > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "target time must be positive and finite");
  }
  const CostCheck check = check_cost_assumption(cost);
  if (!check.ok) {
    std::ostringstream os;
    os << "c(r)(1-r)/(2-r) must be non-increasing, but it increases from r = "
       << check.witness->first << " to r = " << check.witness->second;
    throw Error(ErrorKind::CostAssumptionViolated, os.str());
  }
  const double C = principal_constant(alpha, cost);
  return 4.0 * C * C / T;
}

MFRewardScheme truncate_after_alpha(const MFRewardScheme& reward, double alpha) {
  require_alpha(alpha);
  const PiecewiseFn& R = reward.fn();
  const std::vector<double> bps = breakpoints_on_alpha(R, alpha);
  std::vector<Piece> pieces;
  for (std::size_t j = 0; j + 2 < bps.size(); ++j) pieces.push_back(R.piece(R.piece_index(bps[j + 1])));
  pieces.emplace_back(Constant{0.0});
  return validate_reward(PiecewiseFn(bps, std::move(pieces)));
}

PiecewiseFn f_transform(const MFRewardScheme& reward, double alpha) {
  require_alpha(alpha);
  const PiecewiseFn& R = reward.fn();
  const std::vector<double> bps = breakpoints_on_alpha(R, alpha);
  const std::size_t k = bps.size() - 1;
  std::vector<Piece> pieces(k, Constant{0.0});
  double tail = 0.0;  // int_hi^alpha R / (2 sqrt(1 - s))
  for (std::size_t j = k - 1; j-- > 0;) {
    const double lo = bps[j];
    const double hi = bps[j + 1];
    const Piece& rp = R.piece(R.piece_index(hi));
    if (const auto* a = std::get_if<Constant>(&rp)) {
      // a sqrt(1 - r) - a (sqrt(1 - r) - sqrt(1 - hi)) - tail
      pieces[j] = Constant{a->value * std::sqrt(1.0 - hi) - tail};
      tail += a->value * (std::sqrt(1.0 - lo) - std::sqrt(1.0 - hi));
      continue;
    }
    TailSpec spec;
    spec.head = [&](double r) { return eval_piece(rp, r) * std::sqrt(1.0 - r); };
    spec.integrand = [&](double s) { return eval_piece(rp, s) / (2.0 * std::sqrt(1.0 - s)); };
    spec.weight = -1.0;
    // f' = R' sqrt(1 - r)
    if (!is_linear_table(rp)) {
      spec.slope = [&](double r) { return derivative_piece(rp, r) * std::sqrt(1.0 - r); };
    }
    pieces[j] = tabulate_with_tail(nodes_on(lo, hi, alpha, {&rp}), spec, tail);
  }
  return PiecewiseFn(bps, std::move(pieces));
}

PiecewiseFn f_inverse(const PiecewiseFn& f, double alpha) {
  require_alpha(alpha);
  const std::vector<double> bps = breakpoints_on_alpha(f, alpha);
  const std::size_t k = bps.size() - 1;
  std::vector<Piece> pieces(k, Constant{0.0});
  double tail = 0.0;  // int_hi^alpha f / (2 (1 - s)^(3/2))
  for (std::size_t j = k - 1; j-- > 0;) {
    const double lo = bps[j];
    const double hi = bps[j + 1];
    const Piece& fp = f.piece(f.piece_index(hi));
    if (const auto* a = std::get_if<Constant>(&fp)) {
      pieces[j] = Constant{a->value / std::sqrt(1.0 - hi) + tail};
      tail += a->value * (1.0 / std::sqrt(1.0 - hi) - 1.0 / std::sqrt(1.0 - lo));
      continue;
    }
    TailSpec spec;
    spec.head = [&](double r) { return eval_piece(fp, r) / std::sqrt(1.0 - r); };
    spec.integrand = [&](double s) {
      return eval_piece(fp, s) / (2.0 * (1.0 - s) * std::sqrt(1.0 - s));
    };
    spec.weight = 1.0;
    // R' = f' / sqrt(1 - r)
    if (!is_linear_table(fp)) {
      spec.slope = [&](double r) { return derivative_piece(fp, r) / std::sqrt(1.0 - r); };
    }
    pieces[j] = tabulate_with_tail(nodes_on(lo, hi, alpha, {&fp}), spec, tail);
  }
  return PiecewiseFn(bps, std::move(pieces));
}

double f_budget(const PiecewiseFn& f, double alpha) {
  require_alpha(alpha);
  return 0.5 * integrate_on_alpha(
                   [&](double r) { return (2.0 - r) * f(r) / ((1.0 - r) * std::sqrt(1.0 - r)); },
                   alpha, {&f});
}

double f_completion_time(const PiecewiseFn& f, double alpha, const MFCost& cost) {
  require_alpha(alpha);
  // f is non-increasing for decreasing schemes, so its infimum on [0, alpha] sits at alpha.
  if (!(f.left_limit(alpha) > 0.0)) return kInf;
  const PiecewiseFn& c = cost.fn();
  return integrate_on_alpha(
      [&](double r) { return 2.0 * cost(r) / (std::sqrt(1.0 - r) * f(r)); }, alpha, {&f, &c});
}

double completion_time(const MFRewardScheme& reward, double alpha, const MFCost& cost) {
  require_alpha(alpha);
  const PiecewiseFn& R = reward.fn();
  if (R.right_limit(alpha) == 0.0 && R.left_limit(1.0) == 0.0) {
    return f_completion_time(f_transform(reward, alpha), alpha, cost);
  }
  EquilibriumOptions options;
  options.stop.target_rank = alpha;
  const MFEquilibrium eq = solve_equilibrium(reward, cost, 0.0, options);
  return quantile(eq.trajectory, alpha);
}

PiecewiseFn optimal_f(const PrincipalSolution& s) {
  const double alpha = s.problem.alpha;
  const double scale = s.problem.budget / s.constant_C;
  const PiecewiseFn& c = s.problem.cost.fn();
  const std::vector<double> bps = breakpoints_on_alpha(c, alpha);
  const std::size_t k = bps.size() - 1;
  std::vector<Piece> pieces(k, Constant{0.0});
  for (std::size_t j = 0; j + 1 < k; ++j) {
    const Piece& cp = c.piece(c.piece_index(bps[j + 1]));
    std::vector<double> nodes = nodes_on(bps[j], bps[j + 1], alpha, {&cp});
    std::vector<double> values(nodes.size());
    std::vector<double> slopes;
    if (!is_linear_table(cp)) slopes.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double r = nodes[i];
      const double cr = eval_piece(cp, r);
      const double g = cr * (1.0 - r) / (2.0 - r);
      values[i] = scale * std::sqrt(g);
      if (!slopes.empty()) {
        const double dg = derivative_piece(cp, r) * (1.0 - r) / (2.0 - r) - cr / ((2.0 - r) * (2.0 - r));
        slopes[i] = scale * dg / (2.0 * std::sqrt(g));
      }
    }
    pieces[j] = Tabulated{std::move(nodes), std::move(values), std::move(slopes)};
  }
  return PiecewiseFn(bps, std::move(pieces));
}

FirstOrderReport verify_first_order_optimality(const PrincipalSolution& s,
                                               const std::vector<PiecewiseFn>& challengers,
                                               double tolerance) {
  const double alpha = s.problem.alpha;
  const double budget = s.problem.budget;
  const double scale = budget / s.constant_C;
  const MFCost& cost = s.problem.cost;
  const PiecewiseFn& c = cost.fn();
  // Exact f* pointwise rather than its tabulation.
  auto f_star = [&](double r) { return scale * std::sqrt(cost(r) * (1.0 - r) / (2.0 - r)); };

  FirstOrderReport report{{}, kInf, true};
  for (std::size_t i = 0; i < challengers.size(); ++i) {
    const PiecewiseFn& f = challengers[i];
    const double spent = f_budget(f, alpha);
    if (spent > budget * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "challenger " << i << " spends " << spent << " which exceeds the budget " << budget;
      throw Error(ErrorKind::InfeasibleChallenger, os.str());
    }
    const double d = integrate_on_alpha(
        [&](double r) {
          const double fs = f_star(r);
          return -2.0 * cost(r) * (f(r) - fs) / (std::sqrt(1.0 - r) * fs * fs);
        },
        alpha, {&f, &c});
    report.derivatives.push_back(d);
    report.min_derivative = std::min(report.min_derivative, d);
    if (d < -tolerance) report.passed = false;
  }
  return report;
}

std::vector<MFRewardScheme> random_challengers(double alpha, double budget, std::size_t count,
                                               std::uint64_t seed) {
  require_alpha(alpha);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> steps(1, 8);
  std::vector<MFRewardScheme> out;
  out.reserve(count);
  while (out.size() < count) {
    const int n = steps(gen);
    std::vector<double> grid{0.0};
    std::vector<double> cuts;
    for (int i = 1; i < n; ++i) cuts.push_back(alpha * unit(gen));
    std::sort(cuts.begin(), cuts.end());
    for (double x : cuts) {
      if (x > grid.back() + 1e-6 && x < alpha - 1e-6) grid.push_back(x);
    }
    grid.push_back(alpha);
    grid.push_back(1.0);

    std::vector<double> levels;
    double level = 1.0;
    double spent = 0.0;
    for (std::size_t j = 0; j + 2 < grid.size(); ++j) {
      levels.push_back(level);
      spent += level * (grid[j + 1] - grid[j]);
      level *= 0.2 + 0.8 * unit(gen);
    }
    std::vector<Piece> pieces;
    for (double l : levels) pieces.emplace_back(Constant{l * budget / spent});
    pieces.emplace_back(Constant{0.0});
    out.push_back(validate_reward(PiecewiseFn(std::move(grid), std::move(pieces))));
  }
  return out;
}

}  // namespace rankrace
