#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "rankrace/errors.hpp"

namespace rankrace::quad {

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-15;
  int max_intervals = 4000;
};

struct Estimate {
  double value;
  double error;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline void require_finite(double y, double x) {
  if (!std::isfinite(y)) {
    throw Error(ErrorKind::NonFiniteIntegrand,
                "integrand is not finite at x = " + std::to_string(x));
  }
}

}  // namespace detail

/// One Gauss-Kronrod 15-point panel on [a, b]. The error is |K15 - G7|.
template <typename F>
Estimate gauss_kronrod15(F&& f, double a, double b) {
  using namespace detail;
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  require_finite(fc, center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    require_finite(f1, center - dx);
    require_finite(f2, center + dx);
    kronrod += kKronrodWeights[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * (f1 + f2);
  }
  return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

/// Globally adaptive Gauss-Kronrod quadrature: the panel with the largest
/// error estimate is bisected until the summed error meets the tolerance.
template <typename F>
double integrate(F&& f, double a, double b, const Options& opts = {}) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, opts);

  struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& other) const { return error < other.error; }
  };

  std::priority_queue<Panel> panels;
  const Estimate first = gauss_kronrod15(f, a, b);
  panels.push({a, b, first.value, first.error});
  double total = first.value;
  double total_error = first.error;

  int intervals = 1;
  while (total_error > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
    if (intervals >= opts.max_intervals) {
      throw Error(ErrorKind::QuadratureFailure,
                  "adaptive quadrature did not converge on [" + std::to_string(a) + ", " +
                      std::to_string(b) + "]");
    }
    const Panel worst = panels.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Panel is at floating-point resolution; accept what we have.
      break;
    }
    panels.pop();
    const Estimate left = gauss_kronrod15(f, worst.a, mid);
    const Estimate right = gauss_kronrod15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    panels.push({worst.a, mid, left.value, left.error});
    panels.push({mid, worst.b, right.value, right.error});
    ++intervals;
  }

  // Re-sum to shed the drift accumulated by the running updates.
  double sum = 0.0;
  while (!panels.empty()) {
    sum += panels.top().value;
    panels.pop();
  }
  return sum;
}

/// Integrates over consecutive intervals [cuts[i], cuts[i+1]] and sums.
/// Each interval gets its own adaptive pass so kinks at the cuts cost nothing.
template <typename F>
double integrate_split(F&& f, const std::vector<double>& cuts, const Options& opts = {}) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) sum += integrate(f, cuts[i], cuts[i + 1], opts);
  }
  return sum;
}

}  // namespace rankrace::quad
