#include "rankrace/piecewise_fn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rankrace/errors.hpp"
#include "rankrace/quadrature.hpp"

namespace rankrace {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorKind::InvalidPiecewise, what);
}

double power_term(const Power& p, double r) {
  if (p.scale == 0.0) return 0.0;
  if (p.exponent == 0.0) return p.scale;
  return p.scale * std::pow(1.0 - r, p.exponent);
}

// Index i with grid[i - 1] < r <= grid[i], clamped to the interior.
std::size_t segment_of(const std::vector<double>& g, double r) {
  const auto it = std::lower_bound(g.begin() + 1, g.end() - 1, r);
  return static_cast<std::size_t>(it - g.begin());
}

double interpolate(const Tabulated& t, double r) {
  const auto& g = t.grid;
  if (r <= g.front()) return t.values.front();
  if (r >= g.back()) return t.values.back();
  const std::size_t i = segment_of(g, r);
  const double h = g[i] - g[i - 1];
  const double w = (r - g[i - 1]) / h;
  const double y0 = t.values[i - 1];
  const double y1 = t.values[i];
  if (t.slopes.empty()) return y0 + w * (y1 - y0);
  const double m0 = t.slopes[i - 1] * h;
  const double m1 = t.slopes[i] * h;
  const double w2 = w * w;
  const double w3 = w2 * w;
  return (2 * w3 - 3 * w2 + 1) * y0 + (w3 - 2 * w2 + w) * m0 + (-2 * w3 + 3 * w2) * y1 +
         (w3 - w2) * m1;
}

double interpolate_derivative(const Tabulated& t, double r) {
  const auto& g = t.grid;
  const std::size_t i = segment_of(g, std::clamp(r, g.front(), g.back()));
  const double h = g[i] - g[i - 1];
  const double y0 = t.values[i - 1];
  const double y1 = t.values[i];
  if (t.slopes.empty()) return (y1 - y0) / h;
  const double w = std::clamp((r - g[i - 1]) / h, 0.0, 1.0);
  const double w2 = w * w;
  return ((6 * w2 - 6 * w) * y0 + (-6 * w2 + 6 * w) * y1) / h +
         (3 * w2 - 4 * w + 1) * t.slopes[i - 1] + (3 * w2 - 2 * w) * t.slopes[i];
}

double power_derivative(const Power& p, double r) {
  if (p.scale == 0.0 || p.exponent == 0.0) return 0.0;
  return -p.scale * p.exponent * std::pow(1.0 - r, p.exponent - 1.0);
}

bool power_is_lipschitz(const Power& p, bool touches_one) {
  if (!touches_one || p.scale == 0.0) return true;
  return p.exponent == 0.0 || p.exponent >= 1.0;
}

void validate_piece(const Piece& piece, double lo, double hi, std::size_t j,
                    bool allow_non_lipschitz) {
  const bool touches_one = hi >= 1.0;
  std::ostringstream where;
  where << "piece " << j << " on (" << lo << ", " << hi << "]";
  std::visit(
      Overloaded{
          [&](const Constant& c) {
            if (!std::isfinite(c.value)) invalid(where.str() + ": non-finite constant");
          },
          [&](const Power& p) {
            if (!std::isfinite(p.scale) || !std::isfinite(p.exponent))
              invalid(where.str() + ": non-finite power parameters");
            if (!allow_non_lipschitz && !power_is_lipschitz(p, touches_one))
              invalid(where.str() + ": power exponent must be 0 or >= 1 on a piece touching r = 1");
          },
          [&](const PowerSum& s) {
            for (const Power& p : s.terms) {
              if (!std::isfinite(p.scale) || !std::isfinite(p.exponent))
                invalid(where.str() + ": non-finite power parameters");
              if (!allow_non_lipschitz && !power_is_lipschitz(p, touches_one))
                invalid(where.str() +
                        ": power exponent must be 0 or >= 1 on a piece touching r = 1");
            }
          },
          [&](const Affine& a) {
            if (!std::isfinite(a.intercept) || !std::isfinite(a.slope))
              invalid(where.str() + ": non-finite affine parameters");
          },
          [&](const Tabulated& t) {
            if (t.grid.size() < 2 || t.grid.size() != t.values.size())
              invalid(where.str() + ": tabulated piece needs >= 2 matching grid/value entries");
            if (!t.slopes.empty() && t.slopes.size() != t.grid.size())
              invalid(where.str() + ": tabulated slopes must match the grid");
            for (double m : t.slopes) {
              if (!std::isfinite(m)) invalid(where.str() + ": non-finite tabulated slope");
            }
            for (std::size_t i = 0; i < t.grid.size(); ++i) {
              if (!std::isfinite(t.grid[i]) || !std::isfinite(t.values[i]))
                invalid(where.str() + ": non-finite tabulated entry");
              if (i > 0 && !(t.grid[i] > t.grid[i - 1]))
                invalid(where.str() + ": tabulated grid must be strictly increasing");
            }
            if (t.grid.front() > lo || t.grid.back() < hi)
              invalid(where.str() + ": tabulated grid does not cover the piece");
          },
      },
      piece);
}

}  // namespace

double eval_piece(const Piece& piece, double r) {
  return std::visit(Overloaded{
                        [](const Constant& c) { return c.value; },
                        [r](const Power& p) { return power_term(p, r); },
                        [r](const PowerSum& s) {
                          double sum = 0.0;
                          for (const Power& p : s.terms) sum += power_term(p, r);
                          return sum;
                        },
                        [r](const Affine& a) { return a.intercept + a.slope * r; },
                        [r](const Tabulated& t) { return interpolate(t, r); },
                    },
                    piece);
}

double derivative_piece(const Piece& piece, double r) {
  return std::visit(Overloaded{
                        [](const Constant&) { return 0.0; },
                        [r](const Power& p) { return power_derivative(p, r); },
                        [r](const PowerSum& s) {
                          double sum = 0.0;
                          for (const Power& p : s.terms) sum += power_derivative(p, r);
                          return sum;
                        },
                        [](const Affine& a) { return a.slope; },
                        [r](const Tabulated& t) { return interpolate_derivative(t, r); },
                    },
                    piece);
}

void append_kinks(const Piece& piece, double lo, double hi, std::vector<double>& out) {
  if (const auto* t = std::get_if<Tabulated>(&piece)) {
    auto it = std::upper_bound(t->grid.begin(), t->grid.end(), lo);
    for (; it != t->grid.end() && *it < hi; ++it) out.push_back(*it);
  }
}

PiecewiseFn::PiecewiseFn(std::vector<double> breakpoints, std::vector<Piece> pieces,
                         PiecewiseOptions options)
    : breakpoints_(std::move(breakpoints)),
      pieces_(std::move(pieces)),
      value_at_one_(options.value_at_one) {
  if (breakpoints_.size() < 2) invalid("need at least the breakpoints 0 and 1");
  if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0)
    invalid("breakpoints must start at 0 and end at 1");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1])) invalid("breakpoints must be strictly increasing");
  }
  if (pieces_.size() + 1 != breakpoints_.size())
    invalid("expected one piece per breakpoint interval");
  for (std::size_t j = 0; j < pieces_.size(); ++j) {
    validate_piece(pieces_[j], breakpoints_[j], breakpoints_[j + 1], j,
                   options.allow_non_lipschitz);
  }
  if (value_at_one_ && !std::isfinite(*value_at_one_)) invalid("non-finite value at r = 1");
}

PiecewiseFn PiecewiseFn::constant(double value) {
  return PiecewiseFn({0.0, 1.0}, {Constant{value}});
}

PiecewiseFn PiecewiseFn::single(Piece piece, PiecewiseOptions options) {
  return PiecewiseFn({0.0, 1.0}, {std::move(piece)}, std::move(options));
}

std::size_t PiecewiseFn::piece_index(double r) const {
  // First interior breakpoint >= r; pieces are right-closed.
  const auto first = breakpoints_.begin() + 1;
  const auto last = breakpoints_.end() - 1;
  return static_cast<std::size_t>(std::lower_bound(first, last, r) - first);
}

std::size_t PiecewiseFn::piece_index_right(double r) const {
  const auto first = breakpoints_.begin() + 1;
  const auto last = breakpoints_.end() - 1;
  return static_cast<std::size_t>(std::upper_bound(first, last, r) - first);
}

double PiecewiseFn::operator()(double r) const {
  if (r >= 1.0 && value_at_one_) return *value_at_one_;
  return eval_piece(pieces_[piece_index(r)], r);
}

double PiecewiseFn::left_limit(double r) const { return eval_piece(pieces_[piece_index(r)], r); }

double PiecewiseFn::right_limit(double r) const {
  return eval_piece(pieces_[piece_index_right(r)], r);
}

std::vector<double> PiecewiseFn::smoothness_points() const {
  std::vector<double> pts(breakpoints_.begin(), breakpoints_.end());
  for (std::size_t j = 0; j < pieces_.size(); ++j) {
    append_kinks(pieces_[j], breakpoints_[j], breakpoints_[j + 1], pts);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double integrate(const PiecewiseFn& f, double a, double b) {
  if (b <= a) return 0.0;
  std::vector<double> cuts{a};
  for (double x : f.smoothness_points()) {
    if (x > a && x < b) cuts.push_back(x);
  }
  cuts.push_back(b);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const Piece& piece = f.piece(f.piece_index(cuts[i + 1]));
    sum += quad::integrate([&](double r) { return eval_piece(piece, r); }, cuts[i], cuts[i + 1]);
  }
  return sum;
}

double integrate_sqrt_weight_piece(const PiecewiseFn& f, std::size_t j, double a, double b) {
  if (b <= a) return 0.0;
  const Piece& piece = f.piece(j);
  std::vector<double> cuts{a};
  append_kinks(piece, a, b, cuts);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  auto integrand = [&](double u) { return 2.0 * eval_piece(piece, 1.0 - u * u); };
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    // y in [lo, hi] maps to u in [sqrt(1 - hi), sqrt(1 - lo)].
    const double u_lo = std::sqrt(1.0 - cuts[i + 1]);
    const double u_hi = std::sqrt(1.0 - cuts[i]);
    sum += quad::integrate(integrand, u_lo, u_hi);
  }
  return sum;
}

double integrate_sqrt_weight(const PiecewiseFn& f, double r) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw Error(ErrorKind::InvalidParameter, "integrate_sqrt_weight needs r in [0, 1)");
  }
  double sum = 0.0;
  for (std::size_t j = f.piece_index(r); j < f.size(); ++j) {
    const double lo = std::max(r, f.lower(j));
    sum += integrate_sqrt_weight_piece(f, j, lo, f.upper(j));
  }
  return sum;
}

}  // namespace rankrace
