#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rankrace/errors.hpp"
#include "rankrace/mfg_equilibrium.hpp"

using namespace rankrace;
using doctest::Approx;

namespace {

ErrorKind kind_of(auto&& make) {
  try {
    make();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::QuadratureFailure;
}

MFRewardScheme uniform_cutoff(double alpha = 0.5, double budget = 1.0) {
  return validate_reward(
      PiecewiseFn({0.0, alpha, 1.0}, {Constant{budget / alpha}, Constant{0.0}}));
}

double sup_error(const PiecewiseFn& a, const PiecewiseFn& b, double hi, int n = 4000) {
  double worst = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = hi * i / n;
    worst = std::max(worst, std::abs(a(r) - b(r)));
  }
  return worst;
}

}  // namespace

TEST_CASE("reward validation") {
  const MFRewardScheme one = validate_reward(PiecewiseFn::constant(1.0));
  CHECK(one.budget() == Approx(1.0));

  PiecewiseOptions jump_at_one;
  jump_at_one.value_at_one = 0.0;
  CHECK(kind_of([&] { validate_reward(PiecewiseFn::single(Constant{1.0}, jump_at_one)); }) ==
        ErrorKind::NotLeftContinuousAtOne);
  try {
    validate_reward(PiecewiseFn::single(Constant{1.0}, jump_at_one));
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("no equilibrium exists") != std::string::npos);
  }

  CHECK(kind_of([] {
          validate_reward(PiecewiseFn({0.0, 0.5, 1.0}, {Constant{0.0}, Constant{1.0}}));
        }) == ErrorKind::NotDecreasing);
  CHECK(kind_of([] { validate_reward(PiecewiseFn::single(Affine{0.0, 1.0})); }) ==
        ErrorKind::NotDecreasing);
  CHECK(kind_of([] { validate_reward(PiecewiseFn::single(Power{-1.0, 1.0})); }) ==
        ErrorKind::NotDecreasing);
  CHECK(kind_of([] {
          validate_reward(PiecewiseFn::single(Tabulated{{0.0, 0.5, 1.0}, {2.0, 1.0, 1.5}}));
        }) == ErrorKind::NotDecreasing);
  CHECK(kind_of([] { validate_reward(PiecewiseFn::single(Affine{0.5, -1.0})); }) ==
        ErrorKind::Negative);
  CHECK(kind_of([] { validate_reward(PiecewiseFn::constant(-1.0)); }) == ErrorKind::Negative);
  CHECK(uniform_cutoff().budget() == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("cost validation") {
  CHECK_NOTHROW(MFCost::constant(2.0));
  CHECK(MFCost::constant(2.0).constant_value() == 2.0);
  CHECK(kind_of([] { MFCost::constant(0.0); }) == ErrorKind::InvalidCost);
  CHECK(kind_of([] { MFCost(PiecewiseFn::single(Affine{1.0, -1.0})); }) == ErrorKind::InvalidCost);
  const auto step = PiecewiseFn({0.0, 0.5, 1.0}, {Constant{1.0}, Constant{2.0}});
  CHECK(kind_of([&] { MFCost c(step); }) == ErrorKind::InvalidCost);
  CHECK_NOTHROW(MFCost(step, CostContinuity::AllowJumps));
  CHECK_FALSE(MFCost(PiecewiseFn::single(Affine{1.0, -0.5})).constant_value());
}

TEST_CASE("value function examples") {
  CHECK(equilibrium_value(validate_reward(PiecewiseFn::constant(1.0)))(0.3) == 1.0);
  const PiecewiseFn v = equilibrium_value(uniform_cutoff());
  CHECK(v(0.0) == Approx(0.585786437626905).epsilon(1e-10));
  CHECK(v(0.25) == Approx(0.367006838144548).epsilon(1e-9));
  CHECK(v(0.5) == Approx(0.0).scale(1.0));
  CHECK(v(0.9) == 0.0);

  const PiecewiseFn vp = equilibrium_value(validate_reward(PiecewiseFn::single(Power{2.0, 1.0})));
  CHECK(vp(0.0) == Approx(2.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("effort examples") {
  const MFCost one = MFCost::constant(1.0);
  const PiecewiseFn flat = equilibrium_effort(validate_reward(PiecewiseFn::constant(3.0)), one);
  CHECK(flat(0.0) == 0.0);
  CHECK(flat(0.999) == 0.0);

  const PiecewiseFn e = equilibrium_effort(uniform_cutoff(), one);
  CHECK(e(0.0) == Approx(std::sqrt(0.5)).epsilon(1e-9));
  CHECK(e(0.25) == Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-9));
  CHECK(e(0.5) == Approx(1.0).epsilon(1e-9));
  CHECK(e(0.6) == 0.0);

  const PiecewiseFn ep = equilibrium_effort(validate_reward(PiecewiseFn::single(Power{2.0, 1.0})), one);
  CHECK(ep(0.0) == Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(ep(0.4) == Approx(0.4).epsilon(1e-9));
}

TEST_CASE("solve_equilibrium examples") {
  const MFCost one = MFCost::constant(1.0);
  const MFEquilibrium cut = solve_equilibrium(uniform_cutoff(), one);
  CHECK(quantile(cut.trajectory, 0.5) == Approx(0.828427124746190).epsilon(1e-8));

  const MFEquilibrium pw = solve_equilibrium(validate_reward(PiecewiseFn::single(Power{2.0, 1.0})), one);
  CHECK(quantile(pw.trajectory, 0.5) == Approx(1.5).epsilon(1e-8));

  const MFEquilibrium still = solve_equilibrium(validate_reward(PiecewiseFn::constant(1.0)), one);
  REQUIRE(still.trajectory.frozen_after);
  CHECK(*still.trajectory.frozen_after == 0.0);
  CHECK(still.trajectory.terminal_state == 0.0);

  // Starting beyond the cut-off freezes immediately.
  const MFEquilibrium late = solve_equilibrium(uniform_cutoff(), one, 0.7);
  CHECK(late.trajectory.terminal_state == 0.7);
}

TEST_CASE("probabilistic representation") {
  CHECK(value_probabilistic(validate_reward(PiecewiseFn::constant(1.0))) == Approx(1.0));
  CHECK(value_probabilistic(uniform_cutoff()) == Approx(0.585786437626905).epsilon(1e-12));
  CHECK(value_probabilistic(validate_reward(PiecewiseFn::single(Power{2.0, 1.0}))) ==
        Approx(2.0 / 3.0).epsilon(1e-12));

  std::mt19937_64 gen(3);
  for (int i = 0; i < 20; ++i) {
    const auto s = oracle::random_staircase(gen, 2 + i % 5, i % 2 == 0);
    const MFRewardScheme R = validate_reward(staircase_fn(s.levels, s.grid));
    CHECK(value_probabilistic(R) == Approx(equilibrium_value(R)(0.0)).epsilon(1e-9));
  }
}

TEST_CASE("power family closed form") {
  PowerRewardParams p;
  p.alpha = 0.5;
  CHECK(power_kappa(p) == Approx(2.0));
  const MFEquilibrium cf = closed_form_power(p);
  CHECK(cf.effort(0.5) == Approx(1.0).epsilon(1e-14));
  CHECK(cf.effort(0.0) == Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(cf.value(0.0) == Approx(0.585786437626905).epsilon(1e-14));
  CHECK(power_quantile(p, 0.5) == Approx(0.828427124746190).epsilon(1e-14));
  CHECK(std::isinf(power_quantile(p, 0.75)));
  REQUIRE(cf.trajectory.frozen_after);
  CHECK(*cf.trajectory.frozen_after == Approx(0.828427124746190).epsilon(1e-14));
  for (double t : {0.1, 0.5, 0.8}) {
    const double root = 1.0 - std::sqrt(0.5) / 2.0 * t;
    CHECK(power_state(p, t) == Approx(1.0 - root * root).epsilon(1e-14));
  }

  PowerRewardParams lin;
  lin.q = 1.0;
  const MFEquilibrium l = closed_form_power(lin);
  CHECK(l.value(0.3) == Approx(2.0 / 3.0 * 0.7).epsilon(1e-14));
  CHECK(l.effort(0.3) == Approx(2.0 / 3.0 * 0.7).epsilon(1e-14));
  for (double t : {0.5, 2.0, 10.0}) {
    CHECK(power_state(lin, t) == Approx(1.0 - 1.0 / (1.0 + 2.0 / 3.0 * t)).epsilon(1e-14));
  }
  CHECK(power_quantile(lin, 0.5) == Approx(1.5).epsilon(1e-14));

  PowerRewardParams zero;
  zero.budget = 0.0;
  zero.q = 2.0;
  const MFEquilibrium z = closed_form_power(zero);
  CHECK(z.value(0.2) == 0.0);
  CHECK(z.effort(0.2) == 0.0);

  PowerRewardParams rough;
  rough.q = 0.5;
  CHECK(kind_of([&] { closed_form_power(rough); }) == ErrorKind::InvalidParameter);
  rough.force = true;
  CHECK_NOTHROW(closed_form_power(rough));
  PowerRewardParams bad;
  bad.alpha = 0.0;
  CHECK(kind_of([&] { power_kappa(bad); }) == ErrorKind::InvalidParameter);
}

TEST_CASE("numerical pipeline matches the power closed forms") {
  const MFCost unit = MFCost::constant(1.0);
  for (double alpha : {0.3, 0.5, 0.8, 1.0}) {
    for (double q : {0.0, 1.0, 2.0, 3.5}) {
      if (alpha == 1.0 && q == 0.0) continue;
      for (double cost : {0.5, 2.0}) {
        PowerRewardParams p;
        p.alpha = alpha;
        p.q = q;
        p.cost = cost;
        p.budget = 1.3;
        const MFEquilibrium cf = closed_form_power(p);
        const MFEquilibrium num = solve_equilibrium(cf.reward, MFCost::constant(cost));
        CHECK(sup_error(num.value, cf.value, 1.0 - 1e-3) <= 1e-6);
        CHECK(sup_error(num.effort, cf.effort, 1.0 - 1e-3) <= 1e-6);
        if (power_has_closed_form_state(p)) {
          for (double beta : {0.1, 0.25, 0.5, 0.9}) {
            const double exact = power_quantile(p, beta);
            const double ours = quantile(num.trajectory, beta);
            if (std::isinf(exact)) {
              CHECK(std::isinf(ours));
            } else {
              CHECK(ours == Approx(exact).epsilon(1e-6));
            }
          }
        }
      }
    }
  }
  (void)unit;
}

TEST_CASE("staircase closed form") {
  const StaircaseEquilibrium one = closed_form_staircase({1.0, 0.0}, {1.0, 1.0}, {0.0, 0.5, 1.0});
  CHECK(one.slopes[0] == Approx(std::sqrt(0.5)).epsilon(1e-15));
  CHECK(one.equilibrium.effort(0.0) == Approx(0.353553390593274).epsilon(1e-14));
  CHECK(one.segment_times[1] == Approx(1.65685424949238).epsilon(1e-14));
  CHECK(std::isinf(one.segment_times[2]));
  // Same as the power family with q = 0, B = 0.5.
  PowerRewardParams p;
  p.alpha = 0.5;
  p.budget = 0.5;
  CHECK(one.quantile(0.3) == Approx(power_quantile(p, 0.3)).epsilon(1e-14));

  const StaircaseEquilibrium flat =
      closed_form_staircase({0.7, 0.7, 0.7}, {1.0, 2.0, 1.0}, {0.0, 0.2, 0.6, 1.0});
  for (double a : flat.slopes) CHECK(a == 0.0);
  CHECK(std::isinf(flat.segment_times[1]));
  CHECK(flat.equilibrium.effort(0.4) == 0.0);
  CHECK(flat.equilibrium.value(0.4) == 0.7);

  CHECK(kind_of([] { closed_form_staircase({1.0}, {1.0}, {0.0, 0.5}); }) == ErrorKind::InvalidGrid);
  CHECK(kind_of([] { closed_form_staircase({1.0, 0.0}, {1.0, 1.0}, {0.0, 0.5, 0.5}); }) ==
        ErrorKind::InvalidGrid);
  CHECK(kind_of([] { closed_form_staircase({1.0, 0.0}, {1.0}, {0.0, 0.5, 1.0}); }) ==
        ErrorKind::InvalidGrid);
}

TEST_CASE("staircase closed form matches the numerical pipeline") {
  auto check = [](const oracle::Staircase& s) {
    const StaircaseEquilibrium cf = closed_form_staircase(s.levels, s.costs, s.grid);
    const MFEquilibrium num = solve_equilibrium(
        cf.equilibrium.reward, MFCost(staircase_fn(s.costs, s.grid), CostContinuity::AllowJumps));
    CHECK(sup_error(num.value, cf.equilibrium.value, 1.0 - 1e-3) <= 1e-6);
    CHECK(sup_error(num.effort, cf.equilibrium.effort, 1.0 - 1e-3) <= 1e-6);
    for (double beta : {0.05, 0.3, 0.6, 0.95, 0.999}) {
      const double exact = cf.quantile(beta);
      const double ours = quantile(num.trajectory, beta);
      if (std::isinf(exact)) {
        CHECK(std::isinf(ours));
      } else {
        CHECK(ours == Approx(exact).epsilon(1e-6));
      }
    }
    for (double t : {0.1, 0.5, 2.0}) {
      CHECK(state_at(num.trajectory, t) == Approx(cf.state(t)).epsilon(1e-6));
    }
  };
  check({{2.0, 1.0, 0.0}, {1.0, 1.0, 1.0}, {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}});
  std::mt19937_64 gen(5);
  for (int i = 0; i < 12; ++i) check(oracle::random_staircase(gen, 2 + i % 4, i % 3 != 0));
}

TEST_CASE("two-step staircase against hand sums") {
  const std::vector<double> grid{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  const StaircaseEquilibrium cf = closed_form_staircase({2.0, 1.0, 0.0}, {1.0, 1.0, 1.0}, grid);
  const double s1 = std::sqrt(2.0 / 3.0);
  const double s2 = std::sqrt(1.0 / 3.0);
  const double a2 = 1.0 * s2;
  const double a1 = 2.0 * s1 - 1.0 * (s1 - s2);
  CHECK(cf.slopes[0] == Approx(a1).epsilon(1e-15));
  CHECK(cf.slopes[1] == Approx(a2).epsilon(1e-15));
  CHECK(cf.slopes[2] == 0.0);
  CHECK(cf.segment_times[1] == Approx(4.0 / a1 * (1.0 - s1)).epsilon(1e-15));
  CHECK(cf.segment_times[2] ==
        Approx(4.0 / a1 * (1.0 - s1) + 4.0 / a2 * (s1 - s2)).epsilon(1e-15));
  CHECK(cf.equilibrium.value(0.0) == Approx(2.0 - a1).epsilon(1e-15));
}

TEST_CASE("equilibrium invariants") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MFRewardScheme> corpus{uniform_cutoff(0.3), uniform_cutoff(0.8, 2.0),
                                     validate_reward(PiecewiseFn::single(Power{2.0, 1.0})),
                                     validate_reward(PiecewiseFn::single(Affine{2.0, -1.5}))};
  for (int i = 0; i < 6; ++i) {
    const auto s = oracle::random_staircase(gen, 3, i % 2 == 0);
    corpus.push_back(validate_reward(staircase_fn(s.levels, s.grid)));
  }
  const MFCost cost(PiecewiseFn::single(Affine{1.5, -0.7}));
  for (const MFRewardScheme& R : corpus) {
    const PiecewiseFn v = equilibrium_value(R);
    const PiecewiseFn e = equilibrium_effort(R, cost, v);
    const double r_one = R.fn().left_limit(1.0);
    double prev = v(0.0);
    for (int i = 0; i <= 2000; ++i) {
      const double r = i / 2000.0;
      REQUIRE(v(r) <= R(r) + 1e-12);
      REQUIRE(v(r) >= r_one - 1e-12);
      REQUIRE(v(r) <= prev + 1e-12);
      REQUIRE(e(r) >= 0.0);
      prev = v(r);
      if (r < 1.0) REQUIRE(std::abs(2.0 * cost(r) * e(r) - (R(r) - v(r))) <= 1e-8);
    }
    // Exact at the tabulation nodes of the effort.
    for (std::size_t j = 0; j < e.size(); ++j) {
      const auto* t = std::get_if<Tabulated>(&e.piece(j));
      if (t == nullptr) continue;
      for (double r : t->grid) {
        if (r >= 1.0 || r <= e.lower(j)) continue;
        REQUIRE(std::abs(2.0 * cost(r) * e(r) - (R(r) - v(r))) <= 1e-12 * (1.0 + R(r)));
      }
    }
    CHECK(v(1.0) == Approx(r_one));

    // Hamilton-Jacobi residual by central differences inside pieces where R > R(1).
    const auto bps = R.fn().breakpoints();
    for (std::size_t j = 0; j + 1 < bps.size(); ++j) {
      for (int i = 1; i < 20; ++i) {
        const double r = bps[j] + (bps[j + 1] - bps[j]) * i / 20.0;
        if (r > 0.999 || R(r) <= r_one) continue;
        const double h = 1e-5 * std::min(r - bps[j], bps[j + 1] - r);
        const double dv = (v(r + h) - v(r - h)) / (2.0 * h);
        CHECK(std::abs(R(r) - v(r) + 2.0 * (1.0 - r) * dv) <= 1e-5);
      }
    }
  }
}

TEST_CASE("value does not depend on the cost and doubling the cost doubles time") {
  const MFRewardScheme R = validate_reward(
      PiecewiseFn({0.0, 0.4, 1.0}, {Affine{3.0, -1.0}, Power{1.0, 1.0}}));
  const MFCost c(PiecewiseFn::single(Tabulated{{0.0, 0.5, 1.0}, {1.0, 0.6, 0.8}}));
  const MFCost c2(PiecewiseFn::single(Tabulated{{0.0, 0.5, 1.0}, {2.0, 1.2, 1.6}}));
  const MFEquilibrium a = solve_equilibrium(R, c);
  const MFEquilibrium b = solve_equilibrium(R, c2);
  for (int i = 0; i <= 100; ++i) CHECK(a.value(i / 100.0) == b.value(i / 100.0));
  for (double beta : {0.2, 0.5, 0.9, 0.99}) {
    CHECK(quantile(b.trajectory, beta) == Approx(2.0 * quantile(a.trajectory, beta)).epsilon(1e-8));
  }
}

TEST_CASE("stability under vanishing reward shifts") {
  const PiecewiseFn base({0.0, 0.5, 1.0}, {Affine{3.0, -1.0}, Constant{0.5}});
  const MFCost cost = MFCost::constant(1.0);
  const MFEquilibrium ref = solve_equilibrium(validate_reward(base), cost);
  double prev_v = INFINITY;
  double prev_rho = INFINITY;
  for (double n : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
    // Shift the reward up by 1/n on the paying ranks only, so effort changes.
    const PiecewiseFn shifted({0.0, 0.5, 1.0}, {Affine{3.0 + 1.0 / n, -1.0}, Constant{0.5}});
    const MFEquilibrium eq = solve_equilibrium(validate_reward(shifted), cost);
    const double dv = sup_error(eq.value, ref.value, 1.0, 1000);
    double drho = 0.0;
    for (double t = 0.0; t <= 5.0; t += 0.05) {
      drho = std::max(drho, std::abs(state_at(eq.trajectory, t) - state_at(ref.trajectory, t)));
    }
    CHECK(dv < prev_v);
    CHECK(drho < prev_rho);
    prev_v = dv;
    prev_rho = drho;
  }
  CHECK(prev_v < 0.03);
}
