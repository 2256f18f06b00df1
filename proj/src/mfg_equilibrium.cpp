#include "rankrace/mfg_equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rankrace/errors.hpp"
#include "rankrace/quadrature.hpp"

namespace rankrace {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool nearly_at_most(double a, double b) {
  return a <= b + 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

bool nearly_equal(double a, double b) { return nearly_at_most(a, b) && nearly_at_most(b, a); }

std::string describe_interval(const PiecewiseFn& fn, std::size_t j) {
  std::ostringstream os;
  os << "piece " << j << " on (" << fn.lower(j) << ", " << fn.upper(j) << "]";
  return os.str();
}

// Structural monotonicity of one descriptor: each term is non-increasing.
bool piece_non_increasing(const Piece& piece) {
  if (const auto* p = std::get_if<Power>(&piece)) {
    return p->scale == 0.0 || p->exponent == 0.0 || p->scale * p->exponent >= 0.0;
  }
  if (const auto* s = std::get_if<PowerSum>(&piece)) {
    return std::all_of(s->terms.begin(), s->terms.end(), [](const Power& p) {
      return p.scale == 0.0 || p.exponent == 0.0 || p.scale * p.exponent >= 0.0;
    });
  }
  if (const auto* a = std::get_if<Affine>(&piece)) return a->slope <= 0.0;
  if (const auto* t = std::get_if<Tabulated>(&piece)) {
    for (std::size_t i = 1; i < t->values.size(); ++i) {
      if (!nearly_at_most(t->values[i], t->values[i - 1])) return false;
    }
    if (t->slopes.empty()) return true;
    // Hermite segments: Fritsch-Carlson sufficient condition for monotonicity.
    for (std::size_t i = 1; i < t->values.size(); ++i) {
      const double m0 = t->slopes[i - 1];
      const double m1 = t->slopes[i];
      if (m0 > 0.0 || m1 > 0.0) return false;
      const double secant = (t->values[i] - t->values[i - 1]) / (t->grid[i] - t->grid[i - 1]);
      if (secant == 0.0) {
        if (m0 != 0.0 || m1 != 0.0) return false;
        continue;
      }
      const double a = m0 / secant;
      const double b = m1 / secant;
      if (a * a + b * b > 9.0) return false;
    }
  }
  return true;
}

// The piece is constant with the given value (used to detect a flat tail).
bool piece_is_constant(const Piece& piece, double value) {
  if (const auto* c = std::get_if<Constant>(&piece)) return c->value == value;
  if (const auto* p = std::get_if<Power>(&piece)) {
    return (p->scale == 0.0 && value == 0.0) || (p->exponent == 0.0 && p->scale == value);
  }
  if (const auto* a = std::get_if<Affine>(&piece)) return a->slope == 0.0 && a->intercept == value;
  if (const auto* t = std::get_if<Tabulated>(&piece)) {
    return std::all_of(t->values.begin(), t->values.end(), [&](double v) { return v == value; }) &&
           std::all_of(t->slopes.begin(), t->slopes.end(), [](double m) { return m == 0.0; });
  }
  return false;
}

// Nodes on [lo, hi], uniform in u = sqrt(1 - r), so they crowd towards r = 1
// where value functions carry a sqrt(1 - r) boundary layer.
std::vector<double> sqrt_graded_nodes(double lo, double hi, std::size_t n) {
  n = std::max<std::size_t>(n, 2);
  const double u_lo = std::sqrt(1.0 - lo);
  const double u_hi = std::sqrt(1.0 - hi);
  std::vector<double> nodes(n);
  nodes.front() = lo;
  nodes.back() = hi;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double u = u_lo + (u_hi - u_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    nodes[i] = 1.0 - u * u;
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

void merge_points(std::vector<double>& into, const std::vector<double>& extra, double lo, double hi) {
  for (double x : extra) {
    if (x > lo && x < hi) into.push_back(x);
  }
  std::sort(into.begin(), into.end());
  into.erase(std::unique(into.begin(), into.end()), into.end());
}

bool is_linear_table(const Piece& piece) {
  const auto* t = std::get_if<Tabulated>(&piece);
  return t != nullptr && t->slopes.empty();
}

void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

}  // namespace

MFRewardScheme validate_reward(PiecewiseFn fn) {
  const std::size_t k = fn.size();
  for (std::size_t j = 0; j < k; ++j) {
    const Piece& piece = fn.piece(j);
    if (!piece_non_increasing(piece)) {
      throw Error(ErrorKind::NotDecreasing,
                  "reward is increasing inside " + describe_interval(fn, j));
    }
    const double right_end = eval_piece(piece, fn.upper(j));
    if (right_end < 0.0 || (j == 0 && eval_piece(piece, 0.0) < 0.0)) {
      throw Error(ErrorKind::Negative, "reward is negative on " + describe_interval(fn, j));
    }
    if (j + 1 < k) {
      const double b = fn.upper(j);
      const double after = eval_piece(fn.piece(j + 1), b);
      if (!nearly_at_most(after, right_end)) {
        std::ostringstream os;
        os << "reward jumps up at rank " << b << " (" << right_end << " -> " << after << ")";
        throw Error(ErrorKind::NotDecreasing, os.str());
      }
    }
  }
  if (const auto at_one = fn.value_at_one()) {
    const double left = fn.left_limit(1.0);
    if (*at_one != left) {
      std::ostringstream os;
      os << "reward at rank 1 is " << *at_one << " but its left limit is " << left
         << "; agents who never arrive must be paid like the last arrivals, otherwise the value"
            " is approached by ever smaller efforts but never attained and no equilibrium exists";
      throw Error(ErrorKind::NotLeftContinuousAtOne, os.str());
    }
  }
  const double budget = integrate(fn, 0.0, 1.0);
  return MFRewardScheme(std::move(fn), budget);
}

MFCost::MFCost(PiecewiseFn fn, CostContinuity continuity) : fn_(std::move(fn)) {
  for (std::size_t j = 0; j < fn_.size(); ++j) {
    const Piece& piece = fn_.piece(j);
    const double lo = fn_.lower(j);
    const double hi = fn_.upper(j);
    std::vector<double> probes;
    constexpr int kProbes = 64;
    for (int i = 0; i <= kProbes; ++i) probes.push_back(lo + (hi - lo) * i / kProbes);
    append_kinks(piece, lo, hi, probes);
    for (double r : probes) {
      const double c = eval_piece(piece, r);
      if (!(c > 0.0) || !std::isfinite(c)) {
        std::ostringstream os;
        os << "cost coefficient must be positive and finite, got " << c << " at rank " << r;
        throw Error(ErrorKind::InvalidCost, os.str());
      }
    }
    if (continuity == CostContinuity::Required && j + 1 < fn_.size()) {
      const double before = eval_piece(piece, hi);
      const double after = eval_piece(fn_.piece(j + 1), hi);
      if (!nearly_equal(before, after)) {
        std::ostringstream os;
        os << "cost must be Lipschitz continuous; it jumps at rank " << hi << " (" << before
           << " -> " << after << ")";
        throw Error(ErrorKind::InvalidCost, os.str());
      }
    }
  }
  if (const auto at_one = fn_.value_at_one()) {
    if (!(*at_one > 0.0)) throw Error(ErrorKind::InvalidCost, "cost must be positive at rank 1");
    if (continuity == CostContinuity::Required && !nearly_equal(*at_one, fn_.left_limit(1.0))) {
      throw Error(ErrorKind::InvalidCost, "cost must be continuous at rank 1");
    }
  }
}

std::optional<double> MFCost::constant_value() const {
  if (fn_.size() != 1 || fn_.value_at_one()) return std::nullopt;
  if (const auto* c = std::get_if<Constant>(&fn_.piece(0))) return c->value;
  return std::nullopt;
}

PiecewiseFn equilibrium_value(const MFRewardScheme& reward, std::size_t nodes_per_piece) {
  const PiecewiseFn& R = reward.fn();
  const std::size_t k = R.size();
  const double r_one = R.left_limit(1.0);

  // Pieces [tail, k) are flat at R(1); there v = R(1) exactly.
  std::size_t tail = k;
  while (tail > 0 && piece_is_constant(R.piece(tail - 1), r_one)) --tail;

  std::vector<double> bps(R.breakpoints().begin(), R.breakpoints().end());
  std::vector<Piece> pieces(k, Constant{r_one});

  // I(r) = int_r^1 R(y) / sqrt(1 - y) dy, accumulated from the right.
  double cumulative = tail < k ? 2.0 * r_one * std::sqrt(1.0 - R.lower(tail)) : 0.0;
  for (std::size_t jj = tail; jj-- > 0;) {
    const double lo = R.lower(jj);
    const double hi = R.upper(jj);
    std::vector<double> nodes = sqrt_graded_nodes(lo, hi, nodes_per_piece);
    std::vector<double> kinks;
    append_kinks(R.piece(jj), lo, hi, kinks);
    merge_points(nodes, kinks, lo, hi);

    std::vector<double> values(nodes.size());
    std::vector<double> slopes(nodes.size());
    for (std::size_t i = nodes.size(); i-- > 0;) {
      if (i + 1 < nodes.size()) {
        cumulative += integrate_sqrt_weight_piece(R, jj, nodes[i], nodes[i + 1]);
      }
      const double r = nodes[i];
      const double reward = eval_piece(R.piece(jj), r);
      if (r < 1.0) {
        values[i] = cumulative / (2.0 * std::sqrt(1.0 - r));
        // v' = (v - R) / (2 (1 - r)) from differentiating the integral.
        slopes[i] = (values[i] - reward) / (2.0 * (1.0 - r));
      } else {
        values[i] = reward;
        slopes[i] = derivative_piece(R.piece(jj), r) / 3.0;
      }
    }
    if (!std::isfinite(slopes.back())) {
      const std::size_t m = nodes.size() - 1;
      slopes[m] = (values[m] - values[m - 1]) / (nodes[m] - nodes[m - 1]);
    }
    pieces[jj] = Tabulated{std::move(nodes), std::move(values), std::move(slopes)};
  }
  return PiecewiseFn(std::move(bps), std::move(pieces));
}

PiecewiseFn equilibrium_effort(const MFRewardScheme& reward, const MFCost& cost,
                               const PiecewiseFn& value) {
  const PiecewiseFn& R = reward.fn();
  const PiecewiseFn& c = cost.fn();
  std::vector<double> bps(R.breakpoints().begin(), R.breakpoints().end());
  bps.insert(bps.end(), c.breakpoints().begin(), c.breakpoints().end());
  bps.insert(bps.end(), value.breakpoints().begin(), value.breakpoints().end());
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());

  std::vector<Piece> pieces;
  pieces.reserve(bps.size() - 1);
  for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
    const double lo = bps[i];
    const double hi = bps[i + 1];
    const Piece& rp = R.piece(R.piece_index(hi));
    const Piece& vp = value.piece(value.piece_index(hi));
    const Piece& cp = c.piece(c.piece_index(hi));
    if (const auto* vc = std::get_if<Constant>(&vp); vc && piece_is_constant(rp, vc->value)) {
      pieces.emplace_back(Constant{0.0});
      continue;
    }
    std::vector<double> nodes{lo, hi};
    std::vector<double> kinks;
    append_kinks(vp, lo, hi, kinks);
    append_kinks(rp, lo, hi, kinks);
    append_kinks(cp, lo, hi, kinks);
    if (kinks.empty()) {
      // Smooth descriptors: tabulate on a graded grid of our own.
      kinks = sqrt_graded_nodes(lo, hi, EquilibriumOptions{}.nodes_per_piece);
    }
    merge_points(nodes, kinks, lo, hi);
    std::vector<double> values(nodes.size());
    std::vector<double> slopes(nodes.size());
    // Hermite slopes need R and c to be C^1 across the nodes; a linear
    // Tabulated piece is not, and neither is a gap clamped at zero.
    bool smooth = !is_linear_table(rp) && !is_linear_table(cp);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      const double r = nodes[n];
      const double gap = eval_piece(rp, r) - eval_piece(vp, r);
      const double cr = eval_piece(cp, r);
      values[n] = std::max(0.0, gap) / (2.0 * cr);
      if (gap < 0.0) smooth = false;
      if (!smooth) continue;
      const double dgap = derivative_piece(rp, r) - derivative_piece(vp, r);
      slopes[n] = dgap / (2.0 * cr) - values[n] * derivative_piece(cp, r) / cr;
      if (!std::isfinite(slopes[n])) smooth = false;
    }
    if (!smooth) slopes.clear();
    pieces.emplace_back(Tabulated{std::move(nodes), std::move(values), std::move(slopes)});
  }
  return PiecewiseFn(std::move(bps), std::move(pieces));
}

PiecewiseFn equilibrium_effort(const MFRewardScheme& reward, const MFCost& cost) {
  return equilibrium_effort(reward, cost, equilibrium_value(reward));
}

MFEquilibrium solve_equilibrium(const MFRewardScheme& reward, const MFCost& cost, double r0,
                                const EquilibriumOptions& options) {
  PiecewiseFn value = equilibrium_value(reward, options.nodes_per_piece);
  PiecewiseFn effort = equilibrium_effort(reward, cost, value);
  Trajectory traj = solve_state_ode(effort, r0, options.stop, options.ode);
  return MFEquilibrium{std::move(value), std::move(effort), std::move(traj), reward, cost};
}

double value_probabilistic(const MFRewardScheme& reward) {
  const PiecewiseFn& R = reward.fn();
  double sum = 0.0;
  for (std::size_t j = 0; j < R.size(); ++j) {
    const Piece& piece = R.piece(j);
    std::vector<double> ranks{R.lower(j), R.upper(j)};
    append_kinks(piece, R.lower(j), R.upper(j), ranks);
    std::sort(ranks.begin(), ranks.end());
    // u = exp(-tau) and rank 1 - u^2 lies in piece j for u in (sqrt(1-hi), sqrt(1-lo)).
    for (std::size_t i = 0; i + 1 < ranks.size(); ++i) {
      sum += quad::integrate([&](double u) { return eval_piece(piece, 1.0 - u * u); },
                             std::sqrt(1.0 - ranks[i + 1]), std::sqrt(1.0 - ranks[i]));
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------

namespace {

void validate_power(const PowerRewardParams& p) {
  require(std::isfinite(p.budget) && p.budget >= 0.0, ErrorKind::InvalidParameter,
          "budget must be >= 0");
  require(p.alpha > 0.0 && p.alpha <= 1.0, ErrorKind::InvalidParameter,
          "cut-off alpha must lie in (0, 1]");
  require(std::isfinite(p.q) && p.q >= 0.0, ErrorKind::InvalidParameter, "shape q must be >= 0");
  require(std::isfinite(p.cost) && p.cost > 0.0, ErrorKind::InvalidParameter,
          "cost must be positive");
  if (p.alpha == 1.0 && p.q > 0.0 && p.q < 1.0 && !p.force) {
    throw Error(ErrorKind::InvalidParameter,
                "alpha = 1 with 0 < q < 1 gives a reward that is not Lipschitz at rank 1; pass "
                "force to evaluate the formulas anyway");
  }
}

PiecewiseOptions power_options(const PowerRewardParams& p) {
  PiecewiseOptions o;
  o.allow_non_lipschitz = p.force;
  return o;
}

// Fn equal to `head` on [0, alpha] and zero afterwards.
PiecewiseFn cut_off(Piece head, double alpha, const PiecewiseOptions& options) {
  if (alpha >= 1.0) return PiecewiseFn::single(std::move(head), options);
  return PiecewiseFn({0.0, alpha, 1.0}, {std::move(head), Constant{0.0}}, options);
}

Power drop_if_zero(Power p) { return p; }

PowerSum power_sum(std::initializer_list<Power> terms) {
  PowerSum s;
  for (const Power& t : terms) {
    if (t.scale != 0.0) s.terms.push_back(drop_if_zero(t));
  }
  return s;
}

Trajectory sampled_trajectory(const std::vector<double>& ranks, auto&& time_of) {
  Trajectory traj;
  for (double r : ranks) {
    traj.states.push_back(r);
    traj.times.push_back(time_of(r));
  }
  traj.terminal_state = ranks.back();
  return traj;
}

std::vector<double> uniform_ranks(double lo, double hi, std::size_t n) {
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
  }
  out.back() = hi;
  return out;
}

}  // namespace

double power_kappa(const PowerRewardParams& p) {
  validate_power(p);
  return p.budget * (1.0 + p.q) / (1.0 - std::pow(1.0 - p.alpha, 1.0 + p.q));
}

MFRewardScheme power_reward(const PowerRewardParams& p) {
  const double kappa = power_kappa(p);
  return validate_reward(cut_off(Power{kappa, p.q}, p.alpha, power_options(p)));
}

bool power_has_closed_form_state(const PowerRewardParams& p) {
  return p.q == 0.0 || p.alpha == 1.0;
}

double power_quantile(const PowerRewardParams& p, double beta) {
  validate_power(p);
  require(power_has_closed_form_state(p), ErrorKind::InvalidParameter,
          "closed-form quantiles need q = 0 or alpha = 1");
  if (beta <= 0.0) return 0.0;
  if (p.budget == 0.0) return kInf;
  if (p.q == 0.0) {
    if (p.alpha == 1.0 || beta > p.alpha) return kInf;
    return 4.0 * p.cost * p.alpha * (1.0 - std::sqrt(1.0 - beta)) /
           (p.budget * std::sqrt(1.0 - p.alpha));
  }
  if (beta >= 1.0) return kInf;
  return p.cost * (1.0 + 2.0 * p.q) / (p.budget * p.q * p.q * (1.0 + p.q)) *
         (std::pow(1.0 - beta, -p.q) - 1.0);
}

double power_state(const PowerRewardParams& p, double t) {
  validate_power(p);
  require(power_has_closed_form_state(p), ErrorKind::InvalidParameter,
          "closed-form states need q = 0 or alpha = 1");
  if (t <= 0.0 || p.budget == 0.0) return 0.0;
  if (p.q == 0.0) {
    if (p.alpha == 1.0) return 0.0;
    const double t_alpha = power_quantile(p, p.alpha);
    if (t >= t_alpha) return p.alpha;
    const double s = 1.0 - p.budget * std::sqrt(1.0 - p.alpha) / (4.0 * p.cost * p.alpha) * t;
    return 1.0 - s * s;
  }
  const double rate = p.budget * p.q * p.q * (1.0 + p.q) / (p.cost * (1.0 + 2.0 * p.q));
  return 1.0 - std::pow(1.0 + rate * t, -1.0 / p.q);
}

MFEquilibrium closed_form_power(const PowerRewardParams& p) {
  const double kappa = power_kappa(p);
  const PiecewiseOptions options = power_options(p);
  MFRewardScheme reward = power_reward(p);
  MFCost cost = MFCost::constant(p.cost);

  const double q = p.q;
  const double tail = std::pow(1.0 - p.alpha, q + 0.5);
  PiecewiseFn value =
      cut_off(power_sum({{kappa / (1.0 + 2.0 * q), q}, {-kappa * tail / (1.0 + 2.0 * q), -0.5}}),
              p.alpha, options);
  PiecewiseFn effort = cut_off(power_sum({{kappa * q / (p.cost * (1.0 + 2.0 * q)), q},
                                          {kappa * tail / (2.0 * p.cost * (1.0 + 2.0 * q)), -0.5}}),
                               p.alpha, options);

  Trajectory traj;
  if (p.budget == 0.0 || (q == 0.0 && p.alpha == 1.0)) {
    traj.times = {0.0};
    traj.states = {0.0};
    traj.frozen_after = 0.0;
    traj.horizon_unreachable = true;
  } else if (q == 0.0) {
    traj = sampled_trajectory(uniform_ranks(0.0, p.alpha, 4000),
                              [&](double r) { return power_quantile(p, r); });
    traj.frozen_after = traj.times.back();
    traj.terminal_state = p.alpha;
  } else if (p.alpha == 1.0) {
    std::vector<double> ranks = uniform_ranks(0.0, 0.99, 2000);
    for (int i = 1; i <= 2000; ++i) ranks.push_back(1.0 - std::pow(10.0, -2.0 - 7.0 * i / 2000.0));
    traj = sampled_trajectory(ranks, [&](double r) { return power_quantile(p, r); });
    traj.terminal_state = 1.0;
  } else {
    traj = solve_state_ode(effort, 0.0);
  }
  return MFEquilibrium{std::move(value), std::move(effort), std::move(traj), std::move(reward),
                       std::move(cost)};
}

// ---------------------------------------------------------------------------

PiecewiseFn staircase_fn(const std::vector<double>& levels, const std::vector<double>& grid) {
  std::vector<Piece> pieces;
  pieces.reserve(levels.size());
  for (double level : levels) pieces.emplace_back(Constant{level});
  return PiecewiseFn(grid, std::move(pieces));
}

StaircaseEquilibrium closed_form_staircase(std::vector<double> levels, std::vector<double> costs,
                                           std::vector<double> grid) {
  const std::size_t n = levels.size();
  require(n >= 1 && grid.size() == n + 1 && costs.size() == n, ErrorKind::InvalidGrid,
          "staircase needs n levels, n costs and n + 1 grid points");
  require(grid.front() == 0.0 && grid.back() == 1.0, ErrorKind::InvalidGrid,
          "staircase grid must run from 0 to 1");
  for (std::size_t j = 1; j <= n; ++j) {
    require(grid[j] > grid[j - 1], ErrorKind::InvalidGrid,
            "staircase grid must be strictly increasing");
  }
  MFRewardScheme reward = validate_reward(staircase_fn(levels, grid));
  MFCost cost(staircase_fn(costs, grid), CostContinuity::AllowJumps);

  std::vector<double> s(n + 1);
  for (std::size_t j = 0; j <= n; ++j) s[j] = std::sqrt(1.0 - grid[j]);

  // slopes[j] is A_{j+1} = R_{j+1} s_{j+1} - sum_{k > j+1} R_k (s_{k-1} - s_k).
  std::vector<double> slopes(n, 0.0);
  double later = 0.0;
  for (std::size_t j = n; j-- > 0;) {
    const bool flat_tail =
        std::all_of(levels.begin() + static_cast<std::ptrdiff_t>(j), levels.end(),
                    [&](double level) { return level == levels[j]; });
    slopes[j] = flat_tail ? 0.0 : levels[j] * s[j + 1] - later;
    later += levels[j] * (s[j] - s[j + 1]);
  }

  std::vector<double> times(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    times[j + 1] = slopes[j] > 0.0 ? times[j] + 4.0 * costs[j] / slopes[j] * (s[j] - s[j + 1])
                                   : kInf;
  }

  std::vector<Piece> value_pieces;
  std::vector<Piece> effort_pieces;
  for (std::size_t j = 0; j < n; ++j) {
    value_pieces.emplace_back(power_sum({{levels[j], 0.0}, {-slopes[j], -0.5}}));
    if (slopes[j] > 0.0) {
      effort_pieces.emplace_back(Power{slopes[j] / (2.0 * costs[j]), -0.5});
    } else {
      effort_pieces.emplace_back(Constant{0.0});
    }
  }

  StaircaseEquilibrium out{
      MFEquilibrium{PiecewiseFn(grid, std::move(value_pieces)),
                    PiecewiseFn(grid, std::move(effort_pieces)), Trajectory{}, std::move(reward),
                    std::move(cost)},
      std::move(levels), std::move(costs), std::move(grid), std::move(slopes), std::move(times)};

  Trajectory& traj = out.equilibrium.trajectory;
  traj.times = {0.0};
  traj.states = {0.0};
  for (std::size_t j = 0; j < n; ++j) {
    if (!(out.slopes[j] > 0.0)) {
      traj.frozen_after = out.segment_times[j];
      traj.terminal_state = out.grid[j];
      traj.horizon_unreachable = true;
      break;
    }
    const double hi = j + 1 == n ? 1.0 - 1e-9 : out.grid[j + 1];
    for (double r : uniform_ranks(out.grid[j], hi, 512)) {
      if (r <= traj.states.back()) continue;
      traj.states.push_back(r);
      traj.times.push_back(out.quantile(r));
    }
    traj.terminal_state = traj.states.back();
  }
  return out;
}

double StaircaseEquilibrium::quantile(double beta) const {
  if (beta <= 0.0) return 0.0;
  const std::size_t n = levels.size();
  std::size_t j = 0;
  while (j + 1 < n && grid[j + 1] < beta) ++j;
  if (!(slopes[j] > 0.0) || !std::isfinite(segment_times[j])) return kInf;
  return segment_times[j] +
         4.0 * costs[j] / slopes[j] * (std::sqrt(1.0 - grid[j]) - std::sqrt(1.0 - beta));
}

double StaircaseEquilibrium::state(double t) const {
  if (t <= 0.0) return 0.0;
  const std::size_t n = levels.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (!(slopes[j] > 0.0)) return grid[j];
    if (t <= segment_times[j + 1]) {
      const double root = std::sqrt(1.0 - grid[j]) - slopes[j] / (4.0 * costs[j]) * (t - segment_times[j]);
      return 1.0 - root * root;
    }
  }
  return 1.0;
}

}  // namespace rankrace
