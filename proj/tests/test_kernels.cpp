#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "kinefp/gcheck.hpp"
#include "kinefp/kernels.hpp"

using namespace kinefp;

TEST_CASE("eval_G rejects t <= tau") {
  PropagatorSpec spec{1.0, 1.0, 1, GStrategy::ou_covariance};
  double z = 0;
  CHECK_THROWS_AS(eval_G(1.0, &z, &z, 1.0, &z, &z, spec), std::invalid_argument);
}

TEST_CASE("G applied to the constant 1 gives e^{N k lag}") {
  // N = 1, k = 0.5, lag = 1: e^{0.5} ~ 1.64872
  PropagatorSpec spec{0.5, 1.0, 1, GStrategy::ou_covariance};
  double x = 0.2, v = -0.3;
  const double got = g_backward_mass(spec, 1.0, &x, &v, 220);
  CHECK(got == doctest::Approx(std::exp(0.5)).epsilon(2e-5));
  CHECK(std::exp(0.5) == doctest::Approx(1.64872).epsilon(1e-5));
}

TEST_CASE("G integrates to 1 over (x, v)") {
  // N = 1, k = 1, sigma = 1, lag = 0.5
  PropagatorSpec spec{1.0, 1.0, 1, GStrategy::ou_covariance};
  double xi = 0.1, nu = 0.4;
  const double got = g_forward_mass(spec, 0.5, &xi, &nu, 260);
  CHECK(got == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("(G1) holds for random parameter draws, N = 1 and N = 2") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> uk(0.3, 2.0), us(0.4, 1.5),
      ut(0.2, 1.0), up(-0.7, 0.7);
  for (int rep = 0; rep < 8; ++rep) {
    PropagatorSpec spec{uk(rng), us(rng), 1, GStrategy::ou_covariance};
    const double lag = ut(rng);
    double xi = up(rng), nu = up(rng), x = up(rng), v = up(rng);
    CHECK(g_forward_mass(spec, lag, &xi, &nu, 200) ==
          doctest::Approx(1.0).epsilon(1e-4));
    CHECK(g_backward_mass(spec, lag, &x, &v, 200) ==
          doctest::Approx(std::exp(spec.k * lag)).epsilon(1e-4));
  }
  for (int rep = 0; rep < 2; ++rep) {
    PropagatorSpec spec{uk(rng), us(rng), 2, GStrategy::ou_covariance};
    const double lag = ut(rng);
    double xi[2] = {up(rng), up(rng)}, nu[2] = {up(rng), up(rng)};
    CHECK(g_forward_mass(spec, lag, xi, nu, 44) ==
          doctest::Approx(1.0).epsilon(1e-4));
    double x[2] = {up(rng), up(rng)}, v[2] = {up(rng), up(rng)};
    CHECK(g_backward_mass(spec, lag, x, v, 44) ==
          doctest::Approx(std::exp(2.0 * spec.k * lag)).epsilon(1e-4));
  }
}

TEST_CASE("(G2) Chapman-Kolmogorov composition by quadrature") {
  PropagatorSpec spec{0.8, 0.9, 1, GStrategy::ou_covariance};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> up(-0.5, 0.5);
  for (int rep = 0; rep < 4; ++rep) {
    double x = up(rng), v = up(rng), xi = up(rng), nu = up(rng);
    const double err = g_chapman_error(spec, 0.3, 0.35, &x, &v, &xi, &nu, 200);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("G is strictly positive at scattered points") {
  PropagatorSpec spec{1.3, 0.6, 2, GStrategy::ou_covariance};
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> up(-3.0, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    double x[2] = {up(rng), up(rng)}, v[2] = {up(rng), up(rng)};
    double xi[2] = {up(rng), up(rng)}, nu[2] = {up(rng), up(rng)};
    CHECK(eval_G(0.7, x, v, 0.0, xi, nu, spec) > 0.0);
  }
}

TEST_CASE("field-free PDE residual of G decays at second order") {
  PropagatorSpec spec{1.0, 0.8, 1, GStrategy::ou_covariance};
  const double r1 = g_pde_residual(spec, 0.5, 0.02);
  const double r2 = g_pde_residual(spec, 0.5, 0.01);
  const double r3 = g_pde_residual(spec, 0.5, 0.005);
  CHECK(std::log2(r1 / r2) > 1.8);
  CHECK(std::log2(r2 / r3) > 1.8);
}

TEST_CASE("delta property: short-lag propagation reproduces smooth data") {
  // the G operator at lag 1e-3 applied to a smooth p0, evaluated by the
  // backward quadrature at interior points
  PropagatorSpec spec{1.0, 1.0, 1, GStrategy::ou_covariance};
  const double lag = 1e-3;
  auto p0 = [](double x, double v) {
    return std::exp(-x * x / 2.0 - v * v / 1.5) * (1.0 + 0.3 * x - 0.2 * v);
  };
  const OuMoments m = ou_moments(spec.k, spec.sigma, lag);
  for (double x : {-0.6, 0.0, 0.8})
    for (double v : {-0.5, 0.3}) {
      // quadrature over the tight backward box
      const double nu_c = v / m.decay;
      const double xi_c = x - nu_c * m.mean_x_coef;
      const double wx = 10.0 * std::sqrt(m.s_xx), wv = 10.0 * std::sqrt(m.s_vv);
      const int n = 160;
      double acc = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double xi = xi_c - wx + (i + 0.5) * 2 * wx / n;
          const double nu = nu_c - wv + (j + 0.5) * 2 * wv / n;
          acc += eval_G(lag, &x, &v, 0.0, &xi, &nu, spec) * p0(xi, nu) *
                 (2 * wx / n) * (2 * wv / n);
        }
      CHECK(acc == doctest::Approx(p0(x, v)).epsilon(5e-3));
    }
}

TEST_CASE("paper formula and OU covariance agree to 1e-10") {
  for (double lag : {0.05, 0.2, 0.7, 1.5, 3.0}) {
    CHECK(g_strategy_disagreement(1.1, 0.8, 1, lag) < 1e-10);
    CHECK(g_strategy_disagreement(0.4, 1.3, 2, lag) < 1e-10);
  }
}

TEST_CASE("kernel evaluation rejects invalid parameters and lags") {
  PropagatorSpec bad{0.0, 1.0, 1, GStrategy::ou_covariance};
  double z = 0;
  CHECK_THROWS_AS(eval_G(0.5, &z, &z, 0.0, &z, &z, bad), std::invalid_argument);
  CHECK_THROWS_AS(eval_heat_kernel(0.0, &z, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(eval_heat_kernel(-0.1, &z, 1.0, 1), std::invalid_argument);
}

TEST_CASE("heat kernel integrates to 1 at N = 2") {
  const int n = 240;
  const double L = 7.0, h = 2.0 * L / n;
  double mass = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double x[2] = {-L + (i + 0.5) * h, -L + (j + 0.5) * h};
      mass += eval_heat_kernel(0.3, x, 1.0, 2) * h * h;
    }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("heat kernel gradient L1 norm scales as t^{-1/2}") {
  const double d = 0.7;
  double ratios[3];
  int c = 0;
  for (double t : {0.1, 0.2, 0.4}) {
    const int n = 6000;
    const double L = 10.0;
    double l1 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = -L + (i + 0.5) * 2 * L / n;
      l1 += std::abs(-x / (2 * d * t) * eval_heat_kernel(t, &x, d, 1)) * 2 * L / n;
    }
    ratios[c++] = l1 * std::sqrt(t);
  }
  CHECK(ratios[0] == doctest::Approx(ratios[1]).epsilon(0.01));
  CHECK(ratios[1] == doctest::Approx(ratios[2]).epsilon(0.01));
  // and the constant is the exact (pi d)^{-1/2}
  CHECK(ratios[0] == doctest::Approx(grad_heat_l1_constant(d)).epsilon(1e-3));
}

TEST_CASE("heat kernel convolved with a constant returns the constant") {
  // mass-1 kernel: quadrature of K * c0 for c0 = 2.7
  const double c0 = 2.7;
  const int n = 400;
  const double L = 9.0, h = 2 * L / n;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    const double x = -L + (i + 0.5) * h;
    acc += eval_heat_kernel(0.5, &x, 1.0, 1) * c0 * h;
  }
  CHECK(acc == doctest::Approx(c0).epsilon(1e-9));
}

TEST_CASE("alpha_of_c values and monotonicity") {
  ModelParams p;
  p.alpha1 = 0.9;
  p.c_R = 1.3;
  CHECK(alpha_of_c(0.0, p) == 0.0);
  CHECK(alpha_of_c(p.c_R, p) == doctest::Approx(p.alpha1 / 2));
  CHECK(alpha_of_c(1e6 * p.c_R, p) ==
        doctest::Approx(p.alpha1).epsilon(1e-5));
  CHECK_THROWS_AS(alpha_of_c(-0.1, p), std::invalid_argument);
  double prev = -1;
  for (double c = 0; c < 5; c += 0.1) {
    const double a = alpha_of_c(c, p);
    CHECK(a >= prev);
    CHECK(a < p.alpha1);
    prev = a;
  }
}

TEST_CASE("fermi_weight values") {
  ModelParams p;
  p.delta = 2.0;
  p.v_max = 1.5;
  CHECK(fermi_weight(p.v_max, p) == doctest::Approx(0.5));
  CHECK(fermi_weight(0.0, p) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-p.delta * p.v_max * p.v_max))));
  ModelParams sharp = p;
  sharp.delta = 40.0 / (p.v_max * p.v_max);
  CHECK(fermi_weight(1.2 * p.v_max, sharp) < 1e-6);
  // monotone decreasing
  double prev = 2.0;
  for (double s = 0; s < 4; s += 0.05) {
    const double w = fermi_weight(s, p);
    CHECK(w < prev);
    CHECK(w > 0);
    CHECK(w < 1);
    prev = w;
  }
}

TEST_CASE("force_from_c: constant c gives zero force, q1 = 0 gives d1 grad c") {
  GridSpec gs;
  gs.nx = 32;
  const Grid g(gs, 1);
  ModelParams p;
  p.d1 = 0.4;
  p.gamma1 = 0.6;

  SpatialField c(g, FieldKind::taf);
  std::vector<SpatialField> grad(1, SpatialField(g));
  for (int i = 0; i < g.nx; ++i) c[i] = 1.7;
  auto F = force_from_c(c, grad, p);
  CHECK(max_abs(F[0].values) == 0.0);

  for (int i = 0; i < g.nx; ++i) {
    c[i] = std::exp(-g.x(i) * g.x(i));
    grad[0][i] = -2.0 * g.x(i) * c[i];
  }
  ModelParams q0 = p;
  q0.q1 = 0.0;
  auto F2 = force_from_c(c, grad, q0);
  for (int i = 0; i < g.nx; ++i)
    CHECK(F2[0][i] == doctest::Approx(p.d1 * grad[0][i]));

  // saturation factor <= 1 in general
  p.q1 = 1.5;
  auto F3 = force_from_c(c, grad, p);
  CHECK(max_abs(F3[0].values) <= p.d1 * max_abs(grad[0].values) + 1e-15);

  SpatialField neg = c;
  neg[0] = -0.1;
  CHECK_THROWS_AS(force_from_c(neg, grad, p), std::invalid_argument);
}

TEST_CASE("rho bump: peak, symmetry, recorded sup") {
  ModelParams p;
  RhoSpec r = RhoSpec::defaults(p);
  double v0[3] = {r.center[0], r.center[1], r.center[2]};
  CHECK(rho_eval(v0, 2, r) == doctest::Approx(r.amplitude));
  double a[2] = {r.center[0] + 0.3, r.center[1] - 0.2};
  double b[2] = {r.center[0] - 0.3, r.center[1] + 0.2};
  CHECK(rho_eval(a, 2, r) == doctest::Approx(rho_eval(b, 2, r)));
  CHECK(rho_sup(r) == r.amplitude);
}
