#include "rankrace/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "rankrace/errors.hpp"

namespace rankrace {
namespace {

// Below this step length in rank the integrand is treated as divergent: the
// effort vanishes ahead and rho only approaches the current rank
// asymptotically.
constexpr double kMinRankStep = 1e-14;

struct SimpsonStep {
  double coarse;
  double fine;
  double start_rate;
  double end_rate;
};

template <typename G>
SimpsonStep simpson_pair(G& g, double a, double h) {
  const double f0 = g(a);
  const double f1 = g(a + 0.25 * h);
  const double f2 = g(a + 0.5 * h);
  const double f3 = g(a + 0.75 * h);
  const double f4 = g(a + h);
  const double coarse = h / 6.0 * (f0 + 4.0 * f2 + f4);
  const double fine = h / 12.0 * (f0 + 4.0 * f1 + 2.0 * f2 + 4.0 * f3 + f4);
  return {coarse, fine, f0, f4};
}

// Cubic Hermite for t as a function of rho on one segment; w in [0, 1].
double hermite_time(const Trajectory& traj, std::size_t i, double w) {
  const double h = traj.states[i + 1] - traj.states[i];
  const double t0 = traj.times[i];
  const double t1 = traj.times[i + 1];
  const double m0 = traj.inverse_rates[i][0] * h;
  const double m1 = traj.inverse_rates[i][1] * h;
  const double w2 = w * w;
  const double w3 = w2 * w;
  return (2 * w3 - 3 * w2 + 1) * t0 + (w3 - 2 * w2 + w) * m0 + (-2 * w3 + 3 * w2) * t1 +
         (w3 - w2) * m1;
}

bool has_hermite(const Trajectory& traj, std::size_t i) {
  if (traj.inverse_rates.size() + 1 != traj.states.size()) return false;
  return std::isfinite(traj.inverse_rates[i][0]) && std::isfinite(traj.inverse_rates[i][1]);
}

}  // namespace

Trajectory solve_state_ode(const PiecewiseFn& effort, double r0, const OdeStop& stop,
                           const OdeOptions& options) {
  if (!(r0 >= 0.0 && r0 < 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "initial rank must lie in [0, 1)");
  }
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(r0);

  const double target = std::min(stop.target_rank, std::nextafter(1.0, 0.0));
  double rho = r0;
  double t = 0.0;

  std::vector<double> cuts;
  for (double x : effort.smoothness_points()) {
    if (x > r0 && x < target) cuts.push_back(x);
  }
  cuts.push_back(target);

  auto finish_frozen = [&](double at_rank) {
    traj.frozen_after = t;
    traj.terminal_state = at_rank;
    traj.horizon_unreachable = at_rank < target;
    return traj;
  };

  if (target <= r0) {
    if (effort.right_limit(r0) <= 0.0) return finish_frozen(r0);
    traj.terminal_state = r0;
    return traj;
  }

  double h = options.max_rank_step;
  for (double end : cuts) {
    // The piece owning (rho, end] supplies the effort on this segment, so at
    // rho itself the right limit is used.
    const Piece& piece = effort.piece(effort.piece_index(end));
    const double lambda_start = eval_piece(piece, rho);
    if (lambda_start < 0.0) {
      throw Error(ErrorKind::InvalidParameter, "effort must be non-negative");
    }
    if (lambda_start == 0.0) return finish_frozen(rho);

    auto inverse_speed = [&](double x) {
      const double lambda = eval_piece(piece, x);
      if (lambda <= 0.0) return std::numeric_limits<double>::infinity();
      return 1.0 / (lambda * (1.0 - x));
    };

    while (rho < end) {
      h = std::min({h, end - rho, options.max_rank_step, options.max_relative_step * (1.0 - rho)});
      const SimpsonStep s = simpson_pair(inverse_speed, rho, h);
      const double err = std::abs(s.fine - s.coarse) / 15.0;
      if (!std::isfinite(s.fine) || err > options.tol * s.fine) {
        h *= 0.5;
        if (h < kMinRankStep) {
          // Effort vanishes just ahead; rho creeps towards this rank forever.
          traj.terminal_state = rho;
          traj.horizon_unreachable = true;
          return traj;
        }
        continue;
      }
      t += s.fine;
      rho = (end - rho - h <= 0.0) ? end : rho + h;
      traj.times.push_back(t);
      traj.states.push_back(rho);
      traj.inverse_rates.push_back({s.start_rate, s.end_rate});
      if (t >= stop.max_time) {
        traj.terminal_state = rho;
        traj.horizon_unreachable = rho < target;
        return traj;
      }
      h *= 2.0;
    }
  }

  if (effort.right_limit(rho) <= 0.0) return finish_frozen(rho);
  traj.terminal_state = rho;
  return traj;
}

double quantile(const Trajectory& traj, double beta) {
  const auto& s = traj.states;
  if (beta <= s.front()) return traj.times.front();
  const auto it = std::lower_bound(s.begin(), s.end(), beta);
  if (it == s.end()) return std::numeric_limits<double>::infinity();
  const std::size_t i = static_cast<std::size_t>(it - s.begin());
  const double w = (beta - s[i - 1]) / (s[i] - s[i - 1]);
  if (has_hermite(traj, i - 1)) return hermite_time(traj, i - 1, w);
  return traj.times[i - 1] + w * (traj.times[i] - traj.times[i - 1]);
}

double state_at(const Trajectory& traj, double t) {
  const auto& ts = traj.times;
  if (t <= ts.front()) return traj.states.front();
  if (t >= ts.back()) return traj.frozen_after ? traj.terminal_state : traj.states.back();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - ts.begin());
  const double w = (t - ts[i - 1]) / (ts[i] - ts[i - 1]);
  const double linear = traj.states[i - 1] + w * (traj.states[i] - traj.states[i - 1]);
  if (!has_hermite(traj, i - 1)) return linear;
  // Invert the Hermite time interpolant; it is monotone on the bracket.
  double lo = 0.0;
  double hi = 1.0;
  for (int iter = 0; iter < 60 && hi - lo > 1e-15; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (hermite_time(traj, i - 1, mid) < t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return traj.states[i - 1] + 0.5 * (lo + hi) * (traj.states[i] - traj.states[i - 1]);
}

}  // namespace rankrace
