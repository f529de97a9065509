#include "kinefp/verify.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "kinefp/bounds.hpp"
#include "kinefp/gcheck.hpp"
#include "kinefp/linfp.hpp"
#include "kinefp/taf.hpp"
#include "kinefp/vintegrals.hpp"

namespace kinefp {

// ---- gcheck.hpp implementation ----

namespace {

struct Box {
  std::vector<double> lo, hi;
};

// box around the forward Gaussian in (x, v) given a source point
Box forward_box(const PropagatorSpec& spec, double lag, const double* xi,
                const double* nu) {
  const OuMoments m = ou_moments(spec.k, spec.sigma, lag);
  Box b;
  for (int d = 0; d < spec.dim; ++d) {
    const double mx = xi[d] + nu[d] * m.mean_x_coef;
    const double mv = nu[d] * m.decay;
    b.lo.push_back(mx - 8.0 * std::sqrt(m.s_xx));
    b.hi.push_back(mx + 8.0 * std::sqrt(m.s_xx));
    b.lo.push_back(mv - 8.0 * std::sqrt(m.s_vv));
    b.hi.push_back(mv + 8.0 * std::sqrt(m.s_vv));
  }
  return b;
}

// box around the backward Gaussian in (xi, nu) given a target point
Box backward_box(const PropagatorSpec& spec, double lag, const double* x,
                 const double* v) {
  const OuMoments m = ou_moments(spec.k, spec.sigma, lag);
  const double E = m.decay, mxc = m.mean_x_coef;
  const double a = m.s_xx, bb = m.s_xv, c = m.s_vv;
  const double var_xi = a - 2.0 * bb * mxc / E + c * mxc * mxc / (E * E);
  const double var_nu = c / (E * E);
  Box b;
  for (int d = 0; d < spec.dim; ++d) {
    const double nu_star = v[d] / E;
    const double xi_star = x[d] - nu_star * mxc;
    b.lo.push_back(xi_star - 8.0 * std::sqrt(var_xi));
    b.hi.push_back(xi_star + 8.0 * std::sqrt(var_xi));
    b.lo.push_back(nu_star - 8.0 * std::sqrt(var_nu));
    b.hi.push_back(nu_star + 8.0 * std::sqrt(var_nu));
  }
  return b;
}

// midpoint tensor quadrature of f over a 2*dim-dimensional box
template <typename F>
double box_quadrature(const Box& b, int n, int dims, F&& f) {
  std::vector<double> h(dims), pt(dims);
  double cell = 1;
  for (int d = 0; d < dims; ++d) {
    h[d] = (b.hi[d] - b.lo[d]) / n;
    cell *= h[d];
  }
  std::size_t total = 1;
  for (int d = 0; d < dims; ++d) total *= n;
  double acc = 0;
  std::vector<int> idx(dims);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (int d = dims - 1; d >= 0; --d) {
      idx[d] = static_cast<int>(rem % n);
      rem /= n;
    }
    for (int d = 0; d < dims; ++d) pt[d] = b.lo[d] + (idx[d] + 0.5) * h[d];
    acc += f(pt.data());
  }
  return acc * cell;
}

}  // namespace

double g_forward_mass(const PropagatorSpec& spec, double lag, const double* xi,
                      const double* nu, int pts) {
  const Box b = forward_box(spec, lag, xi, nu);
  const int dims = 2 * spec.dim;
  return box_quadrature(b, pts, dims, [&](const double* pt) {
    double x[3], v[3];
    for (int d = 0; d < spec.dim; ++d) {
      x[d] = pt[2 * d];
      v[d] = pt[2 * d + 1];
    }
    return eval_G(lag, x, v, 0.0, xi, nu, spec);
  });
}

double g_backward_mass(const PropagatorSpec& spec, double lag, const double* x,
                       const double* v, int pts) {
  const Box b = backward_box(spec, lag, x, v);
  const int dims = 2 * spec.dim;
  return box_quadrature(b, pts, dims, [&](const double* pt) {
    double xi[3], nu[3];
    for (int d = 0; d < spec.dim; ++d) {
      xi[d] = pt[2 * d];
      nu[d] = pt[2 * d + 1];
    }
    return eval_G(lag, x, v, 0.0, xi, nu, spec);
  });
}

double g_chapman_error(const PropagatorSpec& spec, double lag1, double lag2,
                       const double* x, const double* v, const double* xi,
                       const double* nu, int pts) {
  // middle box: union of the forward box from (xi, nu) over lag1 and the
  // backward box from (x, v) over lag2
  const Box fb = forward_box(spec, lag1, xi, nu);
  const Box bb = backward_box(spec, lag2, x, v);
  Box b;
  for (std::size_t d = 0; d < fb.lo.size(); ++d) {
    b.lo.push_back(std::min(fb.lo[d], bb.lo[d]));
    b.hi.push_back(std::max(fb.hi[d], bb.hi[d]));
  }
  const int dims = 2 * spec.dim;
  const double composed = box_quadrature(b, pts, dims, [&](const double* pt) {
    double xm[3], vm[3];
    for (int d = 0; d < spec.dim; ++d) {
      xm[d] = pt[2 * d];
      vm[d] = pt[2 * d + 1];
    }
    return eval_G(lag1 + lag2, x, v, lag1, xm, vm, spec) *
           eval_G(lag1, xm, vm, 0.0, xi, nu, spec);
  });
  const double direct = eval_G(lag1 + lag2, x, v, 0.0, xi, nu, spec);
  return std::abs(composed - direct) / direct;
}

double g_pde_residual(const PropagatorSpec& spec, double lag, double h) {
  // sample points in the bulk of the kernel started from (xi, nu)
  const double xi[3] = {0.1, -0.2, 0.05};
  const double nu[3] = {0.4, 0.1, -0.3};
  const OuMoments m = ou_moments(spec.k, spec.sigma, lag);

  double acc = 0;
  int count = 0;
  const int N = spec.dim;
  const double offs[5] = {-1.2, -0.5, 0.0, 0.6, 1.3};
  for (double ox : offs)
    for (double ov : offs) {
      double x[3], v[3];
      for (int d = 0; d < N; ++d) {
        x[d] = xi[d] + nu[d] * m.mean_x_coef + ox * std::sqrt(m.s_xx);
        v[d] = nu[d] * m.decay + ov * std::sqrt(m.s_vv);
      }
      auto G = [&](double tt, const double* xx, const double* vv) {
        return eval_G(tt, xx, vv, 0.0, xi, nu, spec);
      };
      const double g0 = G(lag, x, v);
      double res = 0;
      {
        const double gp = G(lag + h, x, v), gm = G(lag - h, x, v);
        res += (gp - gm) / (2.0 * h);
      }
      for (int d = 0; d < N; ++d) {
        double xp[3], xm2[3];
        std::copy(x, x + N, xp);
        std::copy(x, x + N, xm2);
        xp[d] += h;
        xm2[d] -= h;
        res += v[d] * (G(lag, xp, v) - G(lag, xm2, v)) / (2.0 * h);
      }
      // - k div_v(v G) - sigma lap_v G
      res -= spec.k * N * g0;
      for (int d = 0; d < N; ++d) {
        double vp[3], vm2[3];
        std::copy(v, v + N, vp);
        std::copy(v, v + N, vm2);
        vp[d] += h;
        vm2[d] -= h;
        const double gp = G(lag, x, vp), gm = G(lag, x, vm2);
        res -= spec.k * v[d] * (gp - gm) / (2.0 * h);
        res -= spec.sigma * (gp - 2.0 * g0 + gm) / (h * h);
      }
      acc += res * res;
      ++count;
    }
  return std::sqrt(acc / count);
}

double g_strategy_disagreement(double k, double sigma, int dim, double lag) {
  PropagatorSpec ou{k, sigma, dim, GStrategy::ou_covariance};
  PropagatorSpec paper{k, sigma, dim, GStrategy::paper_formula};
  const OuMoments m = ou_moments(k, sigma, lag);
  // sample the kernel bulk: offsets in units of its own standard deviations
  const double pts[6] = {-2.8, -1.5, -0.3, 0.4, 1.6, 2.9};
  double worst = 0;
  for (double a : pts)
    for (double b : pts) {
      double x[3], v[3], xi[3], nu[3];
      for (int d = 0; d < dim; ++d) {
        xi[d] = -0.2 + 0.05 * d;
        nu[d] = 0.3 - 0.1 * d;
        x[d] = xi[d] + nu[d] * m.mean_x_coef +
               (a + 0.2 * d) * std::sqrt(m.s_xx);
        v[d] = nu[d] * m.decay + (b - 0.15 * d) * std::sqrt(m.s_vv);
      }
      const double g1 = log_eval_G(lag, x, v, 0.0, xi, nu, ou);
      const double g2 = log_eval_G(lag, x, v, 0.0, xi, nu, paper);
      // compare densities in relative terms via log difference
      worst = std::max(worst, std::abs(std::expm1(g2 - g1)));
    }
  return worst;
}

// ---- verify suites ----

namespace {

void add_row(std::vector<VerifyRow>& rows, const std::string& suite,
             const std::string& name, double margin, const std::string& detail) {
  VerifyRow r;
  r.suite = suite;
  r.name = name;
  r.margin = margin;
  r.pass = margin >= 0;
  r.detail = detail;
  rows.push_back(r);
}

std::string fmt2(double a, double b) {
  std::ostringstream os;
  os << "measured " << a << " vs tol/bound " << b;
  return os.str();
}

void suite_kernels(std::vector<VerifyRow>& rows) {
  std::mt19937_64 rng(20240811);
  std::uniform_real_distribution<double> uk(0.3, 2.0), us(0.4, 1.5),
      ut(0.2, 1.0), ux(-0.8, 0.8);

  double worst_fwd = 0, worst_bwd = 0;
  for (int i = 0; i < 6; ++i) {
    PropagatorSpec spec{uk(rng), us(rng), 1, GStrategy::ou_covariance};
    const double lag = ut(rng);
    double xi[1] = {ux(rng)}, nu[1] = {ux(rng)};
    worst_fwd = std::max(worst_fwd,
                         std::abs(g_forward_mass(spec, lag, xi, nu, 180) - 1.0));
    double x[1] = {ux(rng)}, v[1] = {ux(rng)};
    const double expect = std::exp(spec.dim * spec.k * lag);
    worst_bwd = std::max(worst_bwd,
                         std::abs(g_backward_mass(spec, lag, x, v, 180) / expect - 1.0));
  }
  add_row(rows, "kernels", "(G1) forward mass = 1", 1e-4 - worst_fwd,
          fmt2(worst_fwd, 1e-4));
  add_row(rows, "kernels", "(G1) backward mass = e^{Nk lag}", 1e-4 - worst_bwd,
          fmt2(worst_bwd, 1e-4));

  PropagatorSpec spec{1.0, 0.8, 1, GStrategy::ou_covariance};
  double x[1] = {0.3}, v[1] = {-0.2}, xi[1] = {-0.1}, nu[1] = {0.25};
  const double ck = g_chapman_error(spec, 0.3, 0.25, x, v, xi, nu, 220);
  add_row(rows, "kernels", "(G2) Chapman-Kolmogorov", 1e-3 - ck, fmt2(ck, 1e-3));

  const double r1 = g_pde_residual(spec, 0.5, 0.02);
  const double r2 = g_pde_residual(spec, 0.5, 0.01);
  const double order = std::log2(r1 / r2);
  add_row(rows, "kernels", "field-free PDE residual order >= 1.8",
          order - 1.8, fmt2(order, 1.8));

  double dis = 0;
  for (double lag : {0.08, 0.3, 1.0, 2.5})
    dis = std::max(dis, g_strategy_disagreement(1.2, 0.7, 1, lag));
  add_row(rows, "kernels", "paper_formula vs ou_covariance", 1e-10 - dis,
          fmt2(dis, 1e-10));

  // heat kernel mass and gradient decay
  {
    const int n = 200;
    const double L = 8.0, hh = 2.0 * L / n;
    double mass = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double xx[2] = {-L + (i + 0.5) * hh, -L + (j + 0.5) * hh};
        mass += eval_heat_kernel(0.3, xx, 1.0, 2) * hh * hh;
      }
    add_row(rows, "kernels", "heat kernel mass = 1 (N=2)",
            1e-8 - std::abs(mass - 1.0), fmt2(std::abs(mass - 1.0), 1e-8));

    double ratio[3];
    int c = 0;
    for (double t : {0.1, 0.2, 0.4}) {
      double l1 = 0;
      for (int i = 0; i < 4000; ++i) {
        const double xx = -L + (i + 0.5) * (2.0 * L / 4000);
        l1 += std::abs(-xx / (2.0 * t) * eval_heat_kernel(t, &xx, 1.0, 1)) *
              (2.0 * L / 4000);
      }
      ratio[c++] = l1 * std::sqrt(t);
    }
    const double spread = std::max({ratio[0], ratio[1], ratio[2]}) /
                              std::min({ratio[0], ratio[1], ratio[2]}) -
                          1.0;
    add_row(rows, "kernels", "||grad K||_1 t^{1/2} constant within 1%",
            0.01 - spread, fmt2(spread, 0.01));
  }
}

void suite_linfp(std::vector<VerifyRow>& rows) {
  GridSpec gs;
  gs.x_extent = 6;
  gs.v_extent = 5;
  gs.nx = 48;
  gs.nv = 48;
  gs.t_final = 0.5;
  gs.nt = 10;
  const Grid g(gs, 1);
  PropagatorSpec spec{1.0, 1.0, 1, GStrategy::ou_covariance};

  PhaseField p0(g);
  const std::size_t nvel = g.vel_size();
  for (std::size_t ix = 0; ix < g.space_size(); ++ix)
    for (std::size_t a = 0; a < nvel; ++a) {
      const double x = g.x(static_cast<int>(ix)), v = g.v(static_cast<int>(a));
      p0[ix * nvel + a] = std::exp(-x * x / 1.2 - v * v / 0.9);
    }

  PhaseField p1 = propagate_free(p0, 0.5, spec);
  const double mass_err =
      std::abs(integrate_phase(p1) / integrate_phase(p0) - 1.0);
  add_row(rows, "linfp", "free propagation conserves mass", 1e-4 - mass_err,
          fmt2(mass_err, 1e-4));
  add_row(rows, "linfp", "free propagation keeps positivity",
          min_value(p1.values) >= 0 ? 1.0 : -1.0,
          fmt2(min_value(p1.values), 0));

  const double b = series_truncation_bound(1.0, 1.0, 3);
  add_row(rows, "linfp", "(telescopicele) bound at l=3 is 1/24",
          1e-12 - std::abs(b - 1.0 / 24.0), fmt2(b, 1.0 / 24.0));

  // comparison principle on ordered data
  LinearProblem prob;
  prob.p0 = p0;
  prob.horizon = 0.5;
  auto run1 = solve_linear(prob, spec, 10);
  LinearProblem prob2 = prob;
  for (double& x : prob2.p0.values) x *= 2.0;
  auto run2 = solve_linear(prob2, spec, 10);
  const auto verdict = compare_solutions(run1, run2, eps_pos(max_abs(run2[0].values)));
  add_row(rows, "linfp", "(comparison) ordered data stay ordered",
          verdict.ordered ? verdict.worst_margin : -1.0, verdict.describe());
}

void suite_taf(std::vector<VerifyRow>& rows) {
  GridSpec gs;
  gs.x_extent = 6;
  gs.nx = 64;
  gs.t_final = 0.5;
  gs.nt = 25;
  const Grid g(gs, 1);

  SpatialField c0(g, FieldKind::taf);
  for (int i = 0; i < g.nx; ++i)
    c0[i] = std::exp(-g.x(i) * g.x(i) / 2.0);
  SpatialField j(g, FieldKind::flux_j);
  for (int i = 0; i < g.nx; ++i)
    j[i] = 0.8 * std::exp(-std::pow(g.x(i) - 0.5, 2));

  TafProblem prob;
  prob.c0 = c0;
  prob.flux = {j};
  prob.d = 0.5;
  prob.eta = 0.7;
  prob.horizon = 0.5;
  TafSolution sol = solve_taf(prob, 25);

  double cmax = 0, cmin = 0;
  for (const auto& c : sol.c) {
    cmax = std::max(cmax, max_abs(c.values));
    cmin = std::min(cmin, min_value(c.values));
  }
  const double c0max = max_abs(c0.values);
  add_row(rows, "taf", "(cminf) 0 <= c <= ||c0||_inf",
          std::min(cmin, c0max * (1.0 + 1e-6) - cmax), fmt2(cmax, c0max));

  // monotone in the sink
  TafProblem prob2 = prob;
  for (double& x : prob2.flux[0].values) x *= 2.0;
  TafSolution sol2 = solve_taf(prob2, 25);
  double worst = 1e300;
  for (std::size_t n = 0; n < sol.c.size(); ++n)
    for (std::size_t i = 0; i < sol.c[n].size(); ++i)
      worst = std::min(worst, sol.c[n][i] - sol2.c[n][i]);
  add_row(rows, "taf", "larger sink gives smaller c",
          worst + eps_pos(c0max), fmt2(worst, 0));

  // (tildecmq): ||ctilde(t)||_2 <= eta t ||c||_inf ||j||_{L^inf_t L^2}
  const double j_l2 = lp_norm(j, 2.0);
  TafProblem heat = prob;
  heat.flux.clear();
  const std::vector<SpatialField> heat_c = solve_taf(heat, 25).c;
  double worst_m = 1e300;
  for (std::size_t n = 1; n < sol.c.size(); ++n) {
    SpatialField diff = sol.c[n];
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= heat_c[n][i];
    const double lhs = lp_norm(diff, 2.0);
    const double rhs =
        prob.eta * sol.c[n].time_stamp * c0max * j_l2 * 1.10;
    worst_m = std::min(worst_m, rhs - lhs);
  }
  add_row(rows, "taf", "(tildecmq) split bound with 10% slack", worst_m,
          fmt2(worst_m, 0));
}

void suite_vintegrals(std::vector<VerifyRow>& rows) {
  GridSpec gs;
  gs.x_extent = 4;
  gs.v_extent = 5;
  gs.nx = 24;
  gs.nv = 48;
  const Grid g(gs, 1);
  ModelParams params;
  params.dim = 1;

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uw(0.5, 2.0), uc(-1.0, 1.0);
  double worst = 1e300;
  std::string worst_name = "none";
  for (int rep = 0; rep < 5; ++rep) {
    PhaseField p(g);
    const double w = uw(rng), cx = uc(rng), cv = uc(rng);
    const std::size_t nvel = g.vel_size();
    for (std::size_t ix = 0; ix < g.space_size(); ++ix)
      for (std::size_t a = 0; a < nvel; ++a)
        p[ix * nvel + a] =
            std::exp(-std::pow(g.x(static_cast<int>(ix)) - cx, 2) -
                     std::pow(g.v(static_cast<int>(a)) - cv, 2) / (w * w));
    for (const auto& row : decay_inequality_suite(p, 4.0)) {
      if (row.skipped) continue;
      if (row.margin < worst) {
        worst = row.margin;
        worst_name = row.name;
      }
    }
    // (j1)/(jinfty)
    SpatialField j = flux_j(p, params, FluxMode::cutoff);
    const double lhs1 = lp_norm(j, 1.0);
    const double rhs1 = weight_vg_sup(g, params) * lp_norm(p, 1.0);
    worst = std::min(worst, rhs1 - lhs1);
    const double lhsi = max_abs(j.values);
    const double rhsi = weight_vg_l1(g, params) * max_abs(p.values);
    worst = std::min(worst, rhsi - lhsi);
  }
  add_row(rows, "vintegrals", "velocity-decay + flux inequality suite", worst,
          "worst margin at " + worst_name);
}

void suite_bounds(std::vector<VerifyRow>& rows) {
  ModelParams params;
  params.dim = 1;
  HorizonNorms norms;
  norms.m_beta0 = 0.8;
  norms.p_l1_sup = 1.2;
  norms.p_sup_sup = 0.9;
  norms.grad_c0_lnb = 0.4;
  norms.c0_sup = 1.0;
  norms.rho_sup = 1.0;
  norms.horizon = 1.0;

  MomentHorizon h = moment_horizon(params, norms, 4.0);
  add_row(rows, "bounds", "(intmoment) envelope(0) = A_beta",
          1e-12 - std::abs(h.envelope(0.0) - h.A_beta),
          fmt2(h.envelope(0.0), h.A_beta));

  HorizonNorms bigger = norms;
  bigger.m_beta0 *= 2.0;
  MomentHorizon h2 = moment_horizon(params, bigger, 4.0);
  add_row(rows, "bounds", "tau_beta decreases when A_beta grows",
          h.tau_beta - h2.tau_beta, fmt2(h2.tau_beta, h.tau_beta));

  HorizonNorms larger_t = norms;
  larger_t.horizon = 2.0;
  MomentHorizon h3 = moment_horizon(params, larger_t, 4.0);
  add_row(rows, "bounds", "A_beta monotone in T", h3.A_beta - h.A_beta,
          fmt2(h3.A_beta, h.A_beta));
}

}  // namespace

std::vector<VerifyRow> run_verify_suite(const std::string& suite) {
  std::vector<VerifyRow> rows;
  bool known = false;
  if (suite == "kernels" || suite == "all") {
    suite_kernels(rows);
    known = true;
  }
  if (suite == "linfp" || suite == "all") {
    suite_linfp(rows);
    known = true;
  }
  if (suite == "taf" || suite == "all") {
    suite_taf(rows);
    known = true;
  }
  if (suite == "vintegrals" || suite == "all") {
    suite_vintegrals(rows);
    known = true;
  }
  if (suite == "bounds" || suite == "all") {
    suite_bounds(rows);
    known = true;
  }
  if (!known) throw std::invalid_argument("unknown verify suite: " + suite);
  return rows;
}

}  // namespace kinefp
