#include "kinefp/picard.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kinefp/bounds.hpp"
#include "kinefp/linfp.hpp"
#include "kinefp/taf.hpp"
#include "kinefp/vintegrals.hpp"

namespace kinefp {

namespace {

// ||grad_v p||_{L^inf_x L^1_v} and the |v|-weighted variant, by central
// differences with zero ghosts.
std::pair<double, double> grad_v_mixed_norms(const PhaseField& p) {
  const Grid& g = p.grid;
  const std::size_t nvel = g.vel_size();
  std::vector<std::size_t> vstr(g.dim);
  for (int d = 0; d < g.dim; ++d) {
    std::size_t s = 1;
    for (int t = g.dim; t-- > d + 1;) s *= g.nv;
    vstr[d] = s;
  }
  std::vector<int> vm(g.dim);
  double best = 0, best_w = 0;
  for (std::size_t ix = 0; ix < g.space_size(); ++ix) {
    const double* blk = p.values.data() + ix * nvel;
    double s = 0, sw = 0;
    for (std::size_t a = 0; a < nvel; ++a) {
      unflatten(a, g.nv, g.dim, vm.data());
      double g2 = 0, speed2 = 0;
      for (int d = 0; d < g.dim; ++d) {
        const double hi = vm[d] + 1 < g.nv ? blk[a + vstr[d]] : 0.0;
        const double lo = vm[d] > 0 ? blk[a - vstr[d]] : 0.0;
        const double dd = (hi - lo) / (2.0 * g.dv);
        g2 += dd * dd;
        const double vd = g.v(vm[d]);
        speed2 += vd * vd;
      }
      const double mag = std::sqrt(g2);
      s += mag;
      sw += std::sqrt(speed2) * mag;
    }
    best = std::max(best, s);
    best_w = std::max(best_w, sw);
  }
  return {best * g.cell_v(), best_w * g.cell_v()};
}

struct IterationOutput {
  std::vector<PhaseField> p;
  std::vector<SpatialField> ptilde, j;
  std::vector<SpatialField> anastomosis;
  double mass_leak = 0;
};

}  // namespace

SchemeState run_scheme(const ModelParams& params, const GridSpec& gspec,
                       const PhaseField& p0, const SpatialField& c0,
                       double c_background, const RhoSpec& rho,
                       const SchemeOptions& opts) {
  validate_params(params, gspec);
  const Grid grid(gspec, params.dim);
  if (p0.grid.phase_size() != grid.phase_size())
    throw std::invalid_argument("run_scheme: p0 grid mismatch");
  const int nt = gspec.nt;
  const double T = gspec.t_final;
  const double dt = T / nt;
  const int N = params.dim;

  // entry hypotheses
  const double p0_sup = max_abs(p0.values);
  if (min_value(p0.values) < -eps_pos(p0_sup))
    throw std::invalid_argument("run_scheme: p0 must be >= 0");
  if (min_value(c0.values) + c_background < -eps_pos(max_abs(c0.values) + c_background))
    throw std::invalid_argument("run_scheme: c0 must be >= 0");
  if (!(opts.beta > N))
    throw std::invalid_argument("run_scheme: weighted-moment order beta must exceed N");
  if (!all_finite(p0.values) || !all_finite(c0.values))
    throw std::invalid_argument("run_scheme: data must be finite");

  const FluxMode mode = opts.raw_flux ? FluxMode::raw : params.flux_mode;
  ModelParams mp = params;
  mp.flux_mode = mode;

  SchemeState st;
  st.grid = grid;
  st.params = mp;
  st.rho = rho;
  st.horizon = T;
  st.dt = dt;
  st.variant = opts.variant;
  st.flux_mode = mode;
  st.beta_order = opts.beta;
  st.p0_l1 = lp_norm(p0, 1.0);
  st.p0_sup = p0_sup;
  {
    const double l2 = lp_norm(p0, 2.0);
    st.p0_l2sq = l2 * l2;
  }
  st.c0_sup = max_abs(c0.values) + c_background;
  st.rho_sup_val = rho_sup(rho);

  const std::vector<double> rho_vals = rho_on_grid(grid, rho);
  FreePropagator prop(grid, params.k, params.sigma, dt);

  // p_1 = 0, j_1 = 0
  std::vector<PhaseField> p_prev(nt + 1, PhaseField(grid));
  std::vector<SpatialField> j_prev(nt + 1, SpatialField(grid, FieldKind::flux_j));
  std::vector<SpatialField> pt_prev(nt + 1, SpatialField(grid, FieldKind::marginal));
  for (int n = 0; n <= nt; ++n) {
    p_prev[n].time_stamp = n * dt;
    j_prev[n].time_stamp = n * dt;
  }

  const double tol_abs = opts.tol_rel * st.p0_l1;
  int consecutive_growth = 0;
  st.min_p_iterates = 0;
  st.min_c_iterates = std::numeric_limits<double>::infinity();
  st.max_c_iterates = 0;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    // (i) TAF from the previous flux
    TafProblem taf;
    taf.c0 = c0;
    taf.background = c_background;
    taf.flux.assign(j_prev.begin(), j_prev.end() - 1);  // left endpoints
    taf.d = params.d;
    taf.eta = params.eta;
    taf.horizon = T;
    TafSolution csol = solve_taf(taf, nt);

    if (iter == 0) {
      double g0 = 0, g0l2 = 0;
      for (std::size_t i = 0; i < c0.size(); ++i) {
        double r2 = 0;
        for (int d = 0; d < N; ++d)
          r2 += csol.grad_c[0][d][i] * csol.grad_c[0][d][i];
        g0 = std::max(g0, r2);
        g0l2 += r2;
      }
      st.grad_c0_sup = std::sqrt(g0);
      st.grad_c0_l2 = std::sqrt(g0l2 * grid.cell_x());
    }

    // (ii) force and branching coefficient per step
    std::vector<std::vector<SpatialField>> force(nt);
    std::vector<SpatialField> alpha_coef(nt);
    for (int n = 0; n < nt; ++n) {
      force[n] = force_from_c(csol.c[n], csol.grad_c[n], params);
      SpatialField al(grid, FieldKind::generic, n * dt);
      for (std::size_t i = 0; i < al.size(); ++i)
        al[i] = alpha_of_c(std::max(csol.c[n][i], 0.0), params);
      alpha_coef[n] = std::move(al);
    }

    // (iii) anastomosis coefficient gamma * int_0^t ptilde_{m-1} ds
    std::vector<SpatialField> acc(nt + 1, SpatialField(grid, FieldKind::anastomosis_a));
    for (int n = 1; n <= nt; ++n) {
      acc[n] = acc[n - 1];
      for (std::size_t i = 0; i < acc[n].size(); ++i)
        acc[n][i] += params.gamma * 0.5 * dt *
                     (pt_prev[n - 1][i] + pt_prev[n][i]);
      acc[n].time_stamp = n * dt;
    }

    // (iv) linear Fokker-Planck solve for p_m
    IterationOutput out;
    out.p.reserve(nt + 1);
    out.p.push_back(p0);
    out.p[0].time_stamp = 0;
    PhaseField p = p0;
    double leak = 0;
    const std::size_t nvel = grid.vel_size();
    for (int n = 0; n < nt; ++n) {
      if (opts.variant == SchemeVariant::B) {
        // source alpha(c) rho(v) p_{m-1}
        const PhaseField& prev = p_prev[n];
        for (std::size_t ix = 0; ix < grid.space_size(); ++ix) {
          const double coef = dt * alpha_coef[n][ix];
          if (coef == 0) continue;
          double* blk = p.values.data() + ix * nvel;
          const double* src = prev.values.data() + ix * nvel;
          for (std::size_t a = 0; a < nvel; ++a)
            blk[a] += coef * rho_vals[a] * src[a];
        }
      }
      apply_drift_central(p, force[n], dt);
      const double mass_before = integrate_phase(p);
      prop.apply(p);
      if (mass_before > 0)
        leak += std::max(0.0, 1.0 - integrate_phase(p) / mass_before);
      if (opts.variant == SchemeVariant::A) {
        SpatialField neg_alpha = alpha_coef[n];
        for (double& x : neg_alpha.values) x = -x;
        apply_potential_factor(p, &acc[n], &neg_alpha, rho_vals, dt);
      } else {
        apply_potential_factor(p, &acc[n], nullptr, rho_vals, dt);
      }
      p.time_stamp = (n + 1) * dt;
      out.p.push_back(p);
    }
    out.mass_leak = leak;

    // (v) velocity reductions
    out.ptilde.reserve(nt + 1);
    out.j.reserve(nt + 1);
    for (int n = 0; n <= nt; ++n) {
      out.ptilde.push_back(marginal(out.p[n]));
      out.j.push_back(flux_j(out.p[n], mp, mode));
    }
    out.anastomosis = std::move(acc);

    // convergence metric
    double dp = 0;
    for (int n = 0; n <= nt; ++n)
      dp = std::max(dp, l1_distance(out.p[n], p_prev[n]));
    double dc = 0;
    if (!st.c.empty())
      for (int n = 0; n <= nt; ++n) {
        double m = 0;
        for (std::size_t i = 0; i < csol.c[n].size(); ++i)
          m = std::max(m, std::abs(csol.c[n][i] - st.c[n][i]));
        dc = std::max(dc, m);
      }
    st.diffs_p.push_back(dp);
    st.diffs_c.push_back(dc);
    st.iterations = iter + 1;
    for (const auto& pf : out.p) {
      st.min_p_iterates = std::min(st.min_p_iterates, min_value(pf.values));
      if (st.p0_l1 > 0) {
        const double grow = std::exp(params.alpha1 * st.rho_sup_val *
                                     pf.time_stamp);
        st.iterate_l1_ratio = std::max(
            st.iterate_l1_ratio, lp_norm(pf, 1.0) / (st.p0_l1 * grow));
        st.iterate_sup_ratio = std::max(
            st.iterate_sup_ratio,
            max_abs(pf.values) /
                (st.p0_sup * std::exp(N * params.k * pf.time_stamp) * grow));
      }
    }
    for (const auto& cf : csol.c) {
      st.min_c_iterates = std::min(st.min_c_iterates, min_value(cf.values));
      st.max_c_iterates = std::max(st.max_c_iterates, max_abs(cf.values));
    }

    // adopt the iterate
    p_prev = std::move(out.p);
    pt_prev = std::move(out.ptilde);
    j_prev = std::move(out.j);
    st.anastomosis = std::move(out.anastomosis);
    st.c = std::move(csol.c);
    st.grad_c = std::move(csol.grad_c);
    st.mass_leak = out.mass_leak;

    if (dp <= tol_abs) {
      st.converged = true;
      break;
    }
    const std::size_t nd = st.diffs_p.size();
    if (nd >= 2 && st.diffs_p[nd - 1] > opts.divergence_slack * st.diffs_p[nd - 2])
      ++consecutive_growth;
    else
      consecutive_growth = 0;
    if (consecutive_growth > opts.max_consecutive_growth) {
      st.diverged = true;
      std::ostringstream os;
      os << "divergence: sup_t L1 diffs grew " << consecutive_growth
         << " consecutive iterations, last " << dp;
      st.warning = os.str();
      break;
    }
  }

  st.p = std::move(p_prev);
  st.ptilde = std::move(pt_prev);
  st.j = std::move(j_prev);

  // diagnostics for the bounds module
  st.moment_history.clear();
  st.weighted_sup_history.clear();
  for (const auto& pf : st.p) {
    st.moment_history.push_back(moment(pf, opts.beta));
    st.weighted_sup_history.push_back(weighted_sup(pf, opts.beta));
  }
  if (opts.store_gradient_norms) {
    double g1 = 0, g2 = 0;
    for (const auto& pf : st.p) {
      auto [a, b] = grad_v_mixed_norms(pf);
      g1 = std::max(g1, a);
      g2 = std::max(g2, b);
    }
    st.grad_v_sup_l1 = g1;
    st.vgrad_v_sup_l1 = g2;
  }
  return st;
}

SchemeState run_scheme_raw_flux(const ModelParams& params,
                                const GridSpec& gspec, const PhaseField& p0,
                                const SpatialField& c0, double c_background,
                                const RhoSpec& rho, double beta2,
                                const SchemeOptions& opts_in) {
  const int N = params.dim;
  const double beta_floor = std::max({double(N + 2), double(N * N - N), 0.0});
  if (!(beta2 > beta_floor))
    throw std::invalid_argument(
        "run_scheme_raw_flux: beta2 must exceed max(N+2, N^2-N)");
  SchemeOptions opts = opts_in;
  opts.raw_flux = true;
  opts.beta = beta2;
  SchemeState st = run_scheme(params, gspec, p0, c0, c_background, rho, opts);

  // Assemble the moment horizon from the measured run norms (larger than
  // the norms on any sub-interval, so the resulting tau is conservative).
  // The zero solution has no moment growth to certify against.
  const HorizonNorms norms = horizon_norms_from_state(st);
  if (!(norms.p_sup_sup > 0)) return st;
  MomentHorizon h = moment_horizon(st.params, norms, beta2);
  st.tau_beta = h.tau_beta;
  if (st.tau_beta < st.horizon) {
    const int keep =
        std::max(0, static_cast<int>(std::floor(st.tau_beta / st.dt)));
    std::ostringstream os;
    os << "requested horizon " << st.horizon
       << " exceeds the tau_beta estimate " << st.tau_beta
       << "; series truncated to t <= " << keep * st.dt;
    st.warning = os.str();
    st.truncated = true;
    auto cut = [&](auto& series) {
      if (static_cast<int>(series.size()) > keep + 1) series.resize(keep + 1);
    };
    cut(st.p);
    cut(st.c);
    cut(st.grad_c);
    cut(st.ptilde);
    cut(st.j);
    cut(st.anastomosis);
    cut(st.moment_history);
    cut(st.weighted_sup_history);
    st.horizon = keep * st.dt;
  }
  return st;
}

FdProblem scheme_coefficients(const SchemeState& st) {
  FdProblem c;
  c.p0 = st.p.front();
  c.horizon = st.horizon;
  const int nt = static_cast<int>(st.p.size()) - 1;
  for (int n = 0; n < nt; ++n) {
    c.force.push_back(force_from_c(st.c[n], st.grad_c[n], st.params));
    c.potential_x.push_back(st.anastomosis[n]);
    SpatialField B(st.grid);
    for (std::size_t i = 0; i < B.size(); ++i)
      B[i] = -alpha_of_c(std::max(st.c[n][i], 0.0), st.params);
    c.potential_rho_coef.push_back(std::move(B));
  }
  c.rho_values = rho_on_grid(st.grid, st.rho);
  return c;
}

StabilityReport stability_probe(const SchemeState& run1,
                                const SchemeState& run2) {
  if (!run1.converged || !run2.converged)
    throw std::invalid_argument("stability_probe: both runs must be converged");
  if (run1.p.size() != run2.p.size())
    throw std::invalid_argument("stability_probe: series length mismatch");

  const double d0 = l1_distance(run1.p[0], run2.p[0]);
  double sup = 0;
  for (std::size_t n = 0; n < run1.p.size(); ++n)
    sup = std::max(sup, l1_distance(run1.p[n], run2.p[n]));

  StabilityReport rep;
  UniquenessReport uq = uniqueness_constants(run1, run2);
  rep.G = uq.G;
  rep.ceiling = std::exp(uq.G * run1.horizon);
  rep.ratio = d0 > 0 ? sup / d0 : 1.0;
  rep.slack = rep.ceiling - rep.ratio;
  rep.pass = rep.ratio <= rep.ceiling * (1.0 + 1e-9);
  return rep;
}

}  // namespace kinefp
