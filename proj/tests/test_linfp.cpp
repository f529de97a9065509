#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "kinefp/linfp.hpp"
#include "kinefp/oracle.hpp"
#include "test_helpers.hpp"

using namespace kinefp;
using namespace kinefp::testing;

namespace {

const PropagatorSpec kSpec{1.0, 1.0, 1, GStrategy::ou_covariance};

Grid default_grid() { return make_grid(1, 64, 64, 6.0, 5.0); }

}  // namespace

TEST_CASE("propagate_free of the zero field is zero") {
  const Grid g = default_grid();
  PhaseField out = propagate_free(PhaseField(g), 0.4, kSpec);
  CHECK(max_abs(out.values) == 0.0);
}

TEST_CASE("propagate_free rejects t <= 0") {
  const Grid g = default_grid();
  CHECK_THROWS_AS(propagate_free(PhaseField(g), 0.0, kSpec),
                  std::invalid_argument);
}

TEST_CASE("propagate_free conserves mass for well-contained data") {
  const Grid g = default_grid();
  PhaseField p0 = gaussian_phase(g, 0.0, 0.0, 0.9, 0.7);
  for (double t : {0.05, 0.3, 1.0}) {
    PhaseField p = propagate_free(p0, t, kSpec);
    CHECK(integrate_phase(p) ==
          doctest::Approx(integrate_phase(p0)).epsilon(1e-4));
    // nonnegative cell reconstructions make the output nonnegative
    CHECK(min_value(p.values) >= 0.0);
  }
}

TEST_CASE("propagate_free matches the finite-difference oracle in L1") {
  const Grid g = make_grid(1, 64, 64, 6.0, 4.0);
  PhaseField p0 = gaussian_phase(g, 0.0, 0.0, 1.0, 0.7);
  const double T = 0.5;
  PhaseField prop = propagate_free(p0, T, kSpec);

  FdProblem fd;
  fd.p0 = p0;
  fd.horizon = T;
  ModelParams params;
  params.k = kSpec.k;
  params.sigma = kSpec.sigma;
  const int nt = static_cast<int>(std::ceil(T / fd_fp_max_dt(fd, params)));
  auto ref = fd_solve_fp(fd, params, nt);

  const double err = l1_distance(prop, ref.back());
  const double budget = (g.dx * g.dx + g.dv * g.dv + T / nt) * lp_norm(p0, 1.0);
  CHECK(err < 5.0 * budget);
}

TEST_CASE("solve_linear with no coefficients reduces to free propagation") {
  const Grid g = default_grid();
  LinearProblem prob;
  prob.p0 = gaussian_phase(g, 0.0, 0.0, 0.9, 0.7);
  prob.horizon = 0.6;
  auto run = solve_linear(prob, kSpec, 20);
  PhaseField direct = propagate_free(prob.p0, 0.6, kSpec);
  // stepping composes the discrete operator; agreement is at the level of
  // the accumulated reconstruction error, far below the field scale
  CHECK(l1_distance(run.back(), direct) < 2e-2 * lp_norm(prob.p0, 1.0));
}

TEST_CASE("constant potential acts as an exact integrating factor") {
  const Grid g = default_grid();
  const double a0 = 0.7, T = 0.5;
  LinearProblem prob;
  prob.p0 = gaussian_phase(g, 0.2, -0.1, 0.9, 0.7);
  prob.horizon = T;
  SpatialField A(g);
  for (auto& x : A.values) x = a0;
  prob.potential_x = {A};
  auto run = solve_linear(prob, kSpec, 10);

  LinearProblem free_prob = prob;
  free_prob.potential_x.clear();
  auto run_free = solve_linear(free_prob, kSpec, 10);
  double worst = 0;
  for (std::size_t i = 0; i < run.back().size(); ++i)
    worst = std::max(worst, std::abs(run.back()[i] -
                                     std::exp(-a0 * T) * run_free.back()[i]));
  CHECK(worst <= 1e-6 * max_abs(run_free.back().values));
}

TEST_CASE("(int1)/(intinf): L1 and sup ceilings for a = 0 runs") {
  const Grid g = default_grid();
  LinearProblem prob;
  prob.p0 = gaussian_phase(g, 0.0, 0.0, 0.9, 0.7);
  prob.horizon = 0.6;
  PhaseField f = gaussian_phase(g, 0.5, 0.2, 0.8, 0.6, 0.4);
  prob.source = {f};
  const int nt = 20;
  auto run = solve_linear(prob, kSpec, nt);

  const double f_l1 = lp_norm(f, 1.0);
  const double f_sup = max_abs(f.values);
  const int N = g.dim;
  for (int n = 0; n <= nt; ++n) {
    const double t = run[n].time_stamp;
    CHECK(lp_norm(run[n], 1.0) <=
          (lp_norm(prob.p0, 1.0) + t * f_l1) * (1.0 + 1e-6));
    const double sup_rhs =
        std::exp(N * kSpec.k * t) * max_abs(prob.p0.values) +
        (std::exp(N * kSpec.k * t) - 1.0) / (N * kSpec.k) * f_sup;
    CHECK(max_abs(run[n].values) <= sup_rhs * (1.0 + 5e-2));
  }
}

TEST_CASE("boxed constant data grow in sup at most like e^{N k t}") {
  const Grid g = make_grid(1, 64, 64, 6.0, 5.0);
  PhaseField ones(g);
  for (auto& x : ones.values) x = 1.0;
  const double t = 0.5;
  PhaseField out = propagate_free(ones, t, kSpec);
  CHECK(max_abs(out.values) <= std::exp(g.dim * kSpec.k * t) * (1.0 + 1e-3));
}

TEST_CASE("propagation generalizes to three axes") {
  const Grid g = make_grid(3, 10, 10, 4.0, 4.0);
  PhaseField p0 = gaussian_phase(g, 0.0, 0.0, 1.0, 0.8);
  PhaseField p = propagate_free(p0, 0.5, PropagatorSpec{1.0, 1.0, 3});
  CHECK(integrate_phase(p) ==
        doctest::Approx(integrate_phase(p0)).epsilon(2e-2));
  CHECK(min_value(p.values) >= 0.0);
}

TEST_CASE("series_truncation_bound values and decay") {
  CHECK(series_truncation_bound(0.0, 2.0, 5) == 0.0);
  CHECK(series_truncation_bound(1.0, 1.0, 3) ==
        doctest::Approx(1.0 / 24.0).epsilon(1e-12));
  // monotone decreasing once l + 1 > a T
  const double aT = 3.0;
  double prev = series_truncation_bound(aT, 1.0, 3);
  for (int l = 4; l < 12; ++l) {
    const double cur = series_truncation_bound(aT, 1.0, l);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK_THROWS_AS(series_truncation_bound(-1.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("solve_linear refuses when the truncation bound exceeds tol") {
  const Grid g = make_grid(1, 16, 16, 6.0, 5.0);
  LinearProblem prob;
  prob.p0 = gaussian_phase(g, 0, 0, 1.0, 0.8);
  prob.horizon = 2.0;
  SpatialField A(g);
  for (auto& x : A.values) x = 30.0;
  prob.potential_x = {A};
  prob.series_lmax = 4;  // bound (60)^5/5! is astronomically large
  CHECK_THROWS_AS(solve_linear(prob, kSpec, 4), std::runtime_error);
}

TEST_CASE("volterra levels obey the factorial truncation bound") {
  const Grid g = make_grid(1, 48, 48, 6.0, 5.0);
  const double T = 1.0;
  for (double a0 : {0.5, 1.0, 2.0}) {
    LinearProblem prob;
    prob.p0 = gaussian_phase(g, 0, 0, 0.9, 0.7);
    prob.horizon = T;
    SpatialField A(g);
    for (auto& x : A.values) x = a0;
    prob.potential_x = {A};
    auto levels = volterra_levels(prob, kSpec, 20, 5);
    const double mass0 = lp_norm(prob.p0, 1.0);
    for (int l = 0; l + 1 < static_cast<int>(levels.size()); ++l) {
      double change = 0;
      for (std::size_t n = 0; n < levels[l].size(); ++n)
        change = std::max(change, l1_distance(levels[l + 1][n], levels[l][n]));
      const double bound = series_truncation_bound(a0, T, l) * mass0;
      CHECK(change <= 10.0 * bound);
    }
  }
}

TEST_CASE("compare_solutions: identical runs are equal") {
  const Grid g = make_grid(1, 32, 32, 6.0, 5.0);
  LinearProblem prob;
  prob.p0 = gaussian_phase(g, 0, 0, 1.0, 0.8);
  prob.horizon = 0.4;
  auto run = solve_linear(prob, kSpec, 8);
  auto verdict = compare_solutions(run, run, 0.0);
  CHECK(verdict.equal);
  CHECK(verdict.ordered);
}

TEST_CASE("compare_solutions: doubled data dominate") {
  const Grid g = make_grid(1, 32, 32, 6.0, 5.0);
  LinearProblem prob;
  prob.p0 = gaussian_phase(g, 0, 0, 1.0, 0.8);
  prob.horizon = 0.4;
  auto run1 = solve_linear(prob, kSpec, 8);
  LinearProblem prob2 = prob;
  for (auto& x : prob2.p0.values) x *= 2.0;
  auto run2 = solve_linear(prob2, kSpec, 8);
  auto verdict =
      compare_solutions(run1, run2, eps_pos(max_abs(run2[0].values)));
  CHECK(verdict.ordered);
}

TEST_CASE("comparison principle on random ordered pairs with F, a, f on") {
  std::mt19937_64 rng(2024);
  const Grid g = make_grid(1, 48, 48, 6.0, 5.0);
  std::uniform_real_distribution<double> uf(-0.3, 0.3), ua(0.0, 0.6);
  for (int rep = 0; rep < 10; ++rep) {
    LinearProblem lo;
    lo.p0 = random_smooth_density(g, rng);
    lo.horizon = 0.5;
    lo.x_reconstruction = XReconstruction::donor;  // provably monotone mode
    SpatialField F(g, FieldKind::force_component);
    SpatialField A(g);
    int idx[1];
    for (std::size_t i = 0; i < F.size(); ++i) {
      unflatten(i, g.nx, 1, idx);
      F[i] = uf(rng) * std::exp(-g.x(idx[0]) * g.x(idx[0]) / 4.0);
      A[i] = ua(rng);
    }
    lo.force = {{F}};
    lo.potential_x = {A};
    PhaseField f_lo = random_smooth_density(g, rng, 1);
    for (auto& x : f_lo.values) x *= 0.2;
    lo.source = {f_lo};

    LinearProblem hi = lo;
    PhaseField extra = random_smooth_density(g, rng, 2);
    for (std::size_t i = 0; i < hi.p0.size(); ++i) hi.p0[i] += 0.5 * extra[i];
    PhaseField f_extra = random_smooth_density(g, rng, 1);
    for (std::size_t i = 0; i < f_lo.size(); ++i)
      hi.source[0][i] += 0.1 * f_extra[i];

    auto run_lo = solve_linear(lo, kSpec, 25);
    auto run_hi = solve_linear(hi, kSpec, 25);
    auto verdict = compare_solutions(
        run_lo, run_hi, eps_pos(max_abs(run_hi[0].values)));
    INFO("rep ", rep, ": ", verdict.describe());
    CHECK(verdict.ordered);
  }
}

TEST_CASE("nonnegativity: p0, a, f >= 0 keeps the solution above -eps_pos") {
  std::mt19937_64 rng(99);
  const Grid g = make_grid(1, 48, 48, 6.0, 5.0);
  for (int rep = 0; rep < 5; ++rep) {
    LinearProblem prob;
    prob.p0 = random_smooth_density(g, rng);
    prob.horizon = 0.5;
    SpatialField F(g), A(g);
    int idx[1];
    std::uniform_real_distribution<double> uf(-0.3, 0.3), ua(0.0, 0.8);
    for (std::size_t i = 0; i < F.size(); ++i) {
      unflatten(i, g.nx, 1, idx);
      F[i] = uf(rng) * std::exp(-g.x(idx[0]) * g.x(idx[0]) / 4.0);
      A[i] = ua(rng);
    }
    prob.force = {{F}};
    prob.potential_x = {A};
    auto run = solve_linear(prob, kSpec, 25);
    for (const auto& p : run)
      CHECK(min_value(p.values) >= -eps_pos(max_abs(p.values)));
  }
}

TEST_CASE("Duhamel consistency: halving dt moves the solution at first order") {
  const Grid g = make_grid(1, 48, 96, 6.0, 5.0);
  PropagatorSpec spec{1.0, 2.0, 1, GStrategy::ou_covariance};
  LinearProblem prob;
  prob.p0 = gaussian_phase(g, 0.0, 0.0, 1.0, 0.8);
  prob.horizon = 0.6;
  SpatialField F(g), A(g);
  int idx[1];
  for (std::size_t i = 0; i < F.size(); ++i) {
    unflatten(i, g.nx, 1, idx);
    const double x = g.x(idx[0]);
    F[i] = 0.4 * std::exp(-x * x / 3.0);
    A[i] = 0.5 / (1.0 + x * x);
  }
  prob.force = {{F}};
  prob.potential_x = {A};

  auto run1 = solve_linear(prob, spec, 15);
  auto run2 = solve_linear(prob, spec, 30);
  auto run4 = solve_linear(prob, spec, 60);
  const double e1 = l1_distance(run1.back(), run2.back());
  const double e2 = l1_distance(run2.back(), run4.back());
  const double order = std::log2(e1 / e2);
  INFO("e1 ", e1, " e2 ", e2, " order ", order);
  CHECK(order > 0.8);
  CHECK(order < 1.5);
}

TEST_CASE("upper_solution with alpha1 = 0 and unit scaling is the 4-sigma flow") {
  const Grid g = default_grid();
  PhaseField p0 = gaussian_phase(g, 0, 0, 0.9, 0.7);
  ModelParams params;
  params.alpha1 = 1.0;  // cancelled by rho_sup = 0 below
  const double M_T = std::ldexp(1.0, -2 * params.dim);  // 2^{2N} M_T = 1
  PhaseField up = upper_solution(p0, params, 0.0, 0.5, M_T);
  PropagatorSpec wide{params.k, 4.0 * params.sigma, params.dim,
                      GStrategy::ou_covariance};
  PhaseField direct = propagate_free(p0, 0.5, wide);
  CHECK(l1_distance(up, direct) < 1e-12 * lp_norm(direct, 1.0) + 1e-300);
}

TEST_CASE("upper_solution dominates branching-only runs") {
  const Grid g = default_grid();
  ModelParams params;
  params.alpha1 = 0.6;
  PhaseField p0 = gaussian_phase(g, 0, 0, 0.9, 0.7);

  // branching-only: potential -alpha1 * rho with rho <= 1
  LinearProblem prob;
  prob.p0 = p0;
  prob.horizon = 0.5;
  SpatialField B(g);
  for (auto& x : B.values) x = -params.alpha1;
  prob.potential_rho_coef = {B};
  RhoSpec rho = RhoSpec::defaults(params);
  prob.rho_values = rho_on_grid(g, rho);
  auto run = solve_linear(prob, kSpec, 15);

  PhaseField up = upper_solution(p0, params, rho_sup(rho), 0.5, 1.0);
  double worst = 0;
  for (std::size_t i = 0; i < up.size(); ++i)
    worst = std::min(worst, up[i] - run.back()[i]);
  CHECK(worst >= -eps_pos(max_abs(up.values)));
}

TEST_CASE("upper_solution is linear in the data") {
  const Grid g = make_grid(1, 32, 32, 6.0, 5.0);
  ModelParams params;
  PhaseField p0 = gaussian_phase(g, 0, 0, 1.0, 0.8);
  PhaseField p0b = p0;
  for (auto& x : p0b.values) x *= 3.0;
  PhaseField u1 = upper_solution(p0, params, 1.0, 0.4, 2.0);
  PhaseField u3 = upper_solution(p0b, params, 1.0, 0.4, 2.0);
  double worst = 0;
  for (std::size_t i = 0; i < u1.size(); ++i)
    worst = std::max(worst, std::abs(u3[i] - 3.0 * u1[i]));
  CHECK(worst <= 1e-12 * max_abs(u3.values));
}
