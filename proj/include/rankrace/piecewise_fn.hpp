#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace rankrace {

/// r -> value
struct Constant {
  double value = 0.0;
};

/// r -> scale * (1 - r)^exponent
struct Power {
  double scale = 0.0;
  double exponent = 0.0;
};

/// r -> sum_k scale_k * (1 - r)^exponent_k. Closed-form value functions are
/// sums of two power terms, e.g. a - b / sqrt(1 - r).
struct PowerSum {
  std::vector<Power> terms;
};

/// r -> intercept + slope * r
struct Affine {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Interpolation through (grid[i], values[i]): linear, or cubic Hermite when
/// slopes (derivatives at the nodes) are given. The grid must cover the
/// interval of the piece that owns it.
struct Tabulated {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> slopes{};
};

using Piece = std::variant<Constant, Power, PowerSum, Affine, Tabulated>;

double eval_piece(const Piece& piece, double r);

/// Derivative of the descriptor at r. For linear Tabulated pieces this is the
/// slope of the segment ending at r (right-closed, like the pieces).
double derivative_piece(const Piece& piece, double r);

/// Nodes at which the descriptor is not smooth (Tabulated grid points).
void append_kinks(const Piece& piece, double lo, double hi, std::vector<double>& out);

struct PiecewiseOptions {
  /// Accept Power pieces that are not Lipschitz at r = 1 (0 < q < 1 or q < 0).
  bool allow_non_lipschitz = false;
  /// Explicit value at r = 1 when it differs from the left limit of the last
  /// piece. Such functions are representable so that validation can reject them.
  std::optional<double> value_at_one;
};

/// A function on [0, 1] made of descriptor pieces between strictly increasing
/// breakpoints 0 = b_0 < ... < b_k = 1. Piece j owns (b_j, b_{j+1}]; piece 0
/// also owns r = 0.
class PiecewiseFn {
 public:
  PiecewiseFn(std::vector<double> breakpoints, std::vector<Piece> pieces,
              PiecewiseOptions options = {});

  static PiecewiseFn constant(double value);
  static PiecewiseFn single(Piece piece, PiecewiseOptions options = {});

  double operator()(double r) const;

  /// Index of the piece that owns r under the right-closed convention.
  std::size_t piece_index(double r) const;
  /// Index of the piece owning (r, r + eps); differs from piece_index only at
  /// breakpoints.
  std::size_t piece_index_right(double r) const;

  double left_limit(double r) const;
  double right_limit(double r) const;

  std::span<const double> breakpoints() const { return breakpoints_; }
  const Piece& piece(std::size_t j) const { return pieces_[j]; }
  std::size_t size() const { return pieces_.size(); }
  double lower(std::size_t j) const { return breakpoints_[j]; }
  double upper(std::size_t j) const { return breakpoints_[j + 1]; }
  std::optional<double> value_at_one() const { return value_at_one_; }

  /// Sorted breakpoints plus every interior point where some piece has a kink.
  std::vector<double> smoothness_points() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<Piece> pieces_;
  std::optional<double> value_at_one_;
};

/// Integral of f over [a, b], split at every smoothness point.
double integrate(const PiecewiseFn& f, double a, double b);

/// int_r^1 f(y) / sqrt(1 - y) dy, computed after the substitution y = 1 - u^2
/// which turns the endpoint singularity into the smooth integrand 2 f(1 - u^2).
double integrate_sqrt_weight(const PiecewiseFn& f, double r);

/// Same integral restricted to [a, b] inside a single piece j.
double integrate_sqrt_weight_piece(const PiecewiseFn& f, std::size_t j, double a, double b);

}  // namespace rankrace
