#include "kinefp/oracle.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kinefp/util.hpp"

namespace kinefp {

namespace {

template <typename T>
const T* series_at(const std::vector<T>& s, int n) {
  if (s.empty()) return nullptr;
  if (s.size() == 1) return &s[0];
  return &s[std::min<std::size_t>(n, s.size() - 1)];
}

double force_sup(const FdProblem& prob) {
  double m = 0;
  for (const auto& per_axis : prob.force)
    for (const auto& f : per_axis) m = std::max(m, max_abs(f.values));
  return m;
}

struct PhaseIndexer {
  int dim, nx, nv;
  std::vector<std::size_t> xs, vs;  // strides
  explicit PhaseIndexer(const Grid& g) : dim(g.dim), nx(g.nx), nv(g.nv) {
    xs.resize(dim);
    vs.resize(dim);
    for (int d = 0; d < dim; ++d) {
      std::size_t s = 1;
      for (int t = dim; t-- > d + 1;) s *= nv;
      vs[d] = s;
      s = 1;
      for (int t = dim; t-- > d + 1;) s *= nx;
      for (int t = 0; t < dim; ++t) s *= nv;
      xs[d] = s;
    }
  }
};

}  // namespace

double fd_fp_max_dt(const FdProblem& prob, const ModelParams& params) {
  // Combined explicit-Euler stability: the per-axis Courant numbers of the
  // upwind transport, upwind drift and central diffusion stencils must sum
  // below one; the min over individual limits alone is not sufficient.
  const Grid& g = prob.p0.grid;
  const double vmax = g.Lv - 0.5 * g.dv;
  const double fmax = force_sup(prob);
  const double rate = g.dim * (vmax / g.dx + (fmax + params.k * vmax) / g.dv +
                               2.0 * params.sigma / (g.dv * g.dv));
  return 0.9 / rate;
}

std::vector<PhaseField> fd_solve_fp(const FdProblem& prob,
                                    const ModelParams& params, int nt) {
  const Grid& g = prob.p0.grid;
  const double dt = prob.horizon / nt;
  if (dt > fd_fp_max_dt(prob, params)) {
    const double vmax = g.Lv - 0.5 * g.dv;
    const double fmax = force_sup(prob);
    const double r_x = vmax / g.dx;
    const double r_v = (fmax + params.k * vmax) / g.dv;
    const double r_d = 2.0 * params.sigma / (g.dv * g.dv);
    std::ostringstream bind;
    bind << "fd_solve_fp: CFL violation, dt = " << dt << " > "
         << fd_fp_max_dt(prob, params) << "; dominant term: ";
    if (r_x >= r_v && r_x >= r_d)
      bind << "x-transport (dx/|v|max = " << g.dx / vmax << ")";
    else if (r_v >= r_d)
      bind << "v-drift (dv/(F+k|v|max) = " << g.dv / (fmax + params.k * vmax)
           << ")";
    else
      bind << "v-diffusion (dv^2/(2 sigma N) = "
           << g.dv * g.dv / (2.0 * params.sigma * g.dim) << ")";
    throw std::runtime_error(bind.str());
  }

  const PhaseIndexer ix(g);
  const std::size_t nsp = g.space_size();
  const std::size_t nvel = g.vel_size();
  const double sigma = params.sigma, k = params.k;

  // velocity values per axis index
  std::vector<double> vval(g.nv);
  for (int a = 0; a < g.nv; ++a) vval[a] = g.v(a);

  std::vector<PhaseField> out;
  out.reserve(nt + 1);
  out.push_back(prob.p0);
  PhaseField p = prob.p0;
  PhaseField next(g);

  std::vector<int> xm(g.dim), vm(g.dim);

  for (int n = 0; n < nt; ++n) {
    const auto* F = series_at(prob.force, n);
    const auto* A = series_at(prob.potential_x, n);
    const auto* B = series_at(prob.potential_rho_coef, n);
    const auto* f = series_at(prob.source, n);

    parallel_for(nsp, [&](std::size_t lo, std::size_t hi) {
      std::vector<int> xmi(g.dim), vmi(g.dim);
      for (std::size_t sxi = lo; sxi < hi; ++sxi) {
        unflatten(sxi, g.nx, g.dim, xmi.data());
        const std::size_t xbase = sxi * nvel;
        for (std::size_t svi = 0; svi < nvel; ++svi) {
          unflatten(svi, g.nv, g.dim, vmi.data());
          const std::size_t at = xbase + svi;
          double rhs = 0;

          for (int d = 0; d < g.dim; ++d) {
            const double vd = vval[vmi[d]];
            // upwind x-transport  -v dp/dx
            const double here = p[at];
            if (vd > 0) {
              const double left = xmi[d] > 0 ? p[at - ix.xs[d]] : 0.0;
              rhs -= vd * (here - left) / g.dx;
            } else {
              const double right = xmi[d] + 1 < g.nx ? p[at + ix.xs[d]] : 0.0;
              rhs -= vd * (right - here) / g.dx;
            }

            // conservative upwind v-drift  -d/dv[(F - k v) p]
            const double Fd = F ? (*F)[d][sxi] : 0.0;
            const double b_hi = Fd - k * (vd + 0.5 * g.dv);
            const double b_lo = Fd - k * (vd - 0.5 * g.dv);
            const double p_hi = vmi[d] + 1 < g.nv ? p[at + ix.vs[d]] : 0.0;
            const double p_lo = vmi[d] > 0 ? p[at - ix.vs[d]] : 0.0;
            double flux_hi = 0, flux_lo = 0;
            if (vmi[d] + 1 < g.nv)
              flux_hi = b_hi > 0 ? b_hi * here : b_hi * p_hi;
            if (vmi[d] > 0)
              flux_lo = b_lo > 0 ? b_lo * p_lo : b_lo * here;
            rhs -= (flux_hi - flux_lo) / g.dv;

            // central v-diffusion
            rhs += sigma * (p_hi - 2.0 * here + p_lo) / (g.dv * g.dv);
          }

          if (A || B) {
            const double a = (A ? (*A)[sxi] : 0.0) +
                             (B ? (*B)[sxi] * prob.rho_values[svi] : 0.0);
            rhs -= a * p[at];
          }
          if (f) rhs += (*f)[at];

          next[at] = p[at] + dt * rhs;
        }
      }
    });
    std::swap(p.values, next.values);
    p.time_stamp = (n + 1) * dt;
    out.push_back(p);
  }
  return out;
}

std::vector<SpatialField> fd_solve_heat(const SpatialField& c0,
                                        const std::vector<SpatialField>& sink_j,
                                        double d_coef, double eta,
                                        double horizon, int nt) {
  const Grid& g = c0.grid;
  const double dt = horizon / nt;
  if (dt > 0.9 * g.dx * g.dx / (2.0 * d_coef * g.dim))
    throw std::runtime_error("fd_solve_heat: CFL violation, need dt <= 0.9 dx^2/(2 d N)");

  std::vector<std::size_t> xs(g.dim);
  for (int d = 0; d < g.dim; ++d) {
    std::size_t s = 1;
    for (int t = g.dim; t-- > d + 1;) s *= g.nx;
    xs[d] = s;
  }

  std::vector<SpatialField> out;
  out.push_back(c0);
  SpatialField c = c0;
  SpatialField next(g, FieldKind::taf);
  std::vector<int> xm(g.dim);

  for (int n = 0; n < nt; ++n) {
    const auto* j = series_at(sink_j, n);
    for (std::size_t i = 0; i < c.size(); ++i) {
      unflatten(i, g.nx, g.dim, xm.data());
      double lap = 0;
      for (int d = 0; d < g.dim; ++d) {
        // Neumann edges: ghost = edge value
        const double left = xm[d] > 0 ? c[i - xs[d]] : c[i];
        const double right = xm[d] + 1 < g.nx ? c[i + xs[d]] : c[i];
        lap += (right - 2.0 * c[i] + left) / (g.dx * g.dx);
      }
      double rhs = d_coef * lap;
      if (j) rhs -= eta * c[i] * (*j)[i];
      next[i] = c[i] + dt * rhs;
    }
    std::swap(c.values, next.values);
    c.time_stamp = (n + 1) * dt;
    out.push_back(c);
  }
  return out;
}

namespace {

// integral of |grad_v p|^2 by central differences (zero ghosts)
double grad_v_energy(const PhaseField& p) {
  const Grid& g = p.grid;
  const PhaseIndexer ix(g);
  const std::size_t nvel = g.vel_size();
  double total = 0;
  std::vector<int> vm(g.dim);
  for (std::size_t sxi = 0; sxi < g.space_size(); ++sxi) {
    const std::size_t xbase = sxi * nvel;
    for (std::size_t svi = 0; svi < nvel; ++svi) {
      unflatten(svi, g.nv, g.dim, vm.data());
      const std::size_t at = xbase + svi;
      for (int d = 0; d < g.dim; ++d) {
        const double hi = vm[d] + 1 < g.nv ? p[at + ix.vs[d]] : 0.0;
        const double lo = vm[d] > 0 ? p[at - ix.vs[d]] : 0.0;
        const double dd = (hi - lo) / (2.0 * g.dv);
        total += dd * dd;
      }
    }
  }
  return total * g.cell_phase();
}

double potential_weighted_energy(const PhaseField& p, const SpatialField* A,
                                 const SpatialField* B,
                                 const std::vector<double>& rho) {
  if (!A && !B) return 0;
  const Grid& g = p.grid;
  const std::size_t nvel = g.vel_size();
  double total = 0;
  for (std::size_t sxi = 0; sxi < g.space_size(); ++sxi) {
    const double a0 = A ? (*A)[sxi] : 0.0;
    const double b0 = B ? (*B)[sxi] : 0.0;
    const double* blk = p.values.data() + sxi * nvel;
    for (std::size_t svi = 0; svi < nvel; ++svi) {
      const double a = a0 + (b0 != 0.0 ? b0 * rho[svi] : 0.0);
      total += a * blk[svi] * blk[svi];
    }
  }
  return total * g.cell_phase();
}

double inner(const PhaseField& p, const PhaseField& f) {
  double s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * f[i];
  return s * p.grid.cell_phase();
}

}  // namespace

EnergyReport energy_check(const std::vector<PhaseField>& run,
                          const FdProblem& prob, const ModelParams& params) {
  EnergyReport rep;
  const int nt = static_cast<int>(run.size()) - 1;
  const int N = run[0].grid.dim;

  std::vector<double> E(nt + 1), rate(nt + 1);
  double a_neg_sup = 0, f_sq = 0;
  for (int n = 0; n <= nt; ++n) {
    const auto* A = series_at(prob.potential_x, n);
    const auto* B = series_at(prob.potential_rho_coef, n);
    const auto* f = series_at(prob.source, n);
    const PhaseField& p = run[n];
    E[n] = inner(p, p);
    double r = N * params.k * E[n];
    r -= 2.0 * potential_weighted_energy(p, A, B, prob.rho_values);
    r -= 2.0 * params.sigma * grad_v_energy(p);
    if (f) r += 2.0 * inner(p, *f);
    rate[n] = r;

    if (A || B) {
      double amin = 0;
      for (std::size_t i = 0; i < run[0].grid.space_size(); ++i) {
        const double a0 = A ? (*A)[i] : 0.0;
        const double b0 = B ? (*B)[i] : 0.0;
        if (b0 == 0.0) {
          amin = std::min(amin, a0);
        } else {
          for (double rv : prob.rho_values) amin = std::min(amin, a0 + b0 * rv);
        }
      }
      a_neg_sup = std::max(a_neg_sup, -amin);
    }
    if (f && n < nt) f_sq += inner(*f, *f) * (prob.horizon / nt);
  }

  rep.initial_energy = E[0];
  const double dt = prob.horizon / nt;
  double acc = 0;
  rep.times.push_back(0);
  rep.residual.push_back(0);
  for (int n = 1; n <= nt; ++n) {
    acc += 0.5 * dt * (rate[n - 1] + rate[n]);
    const double res = E[n] - E[0] - acc;
    rep.times.push_back(n * dt);
    rep.residual.push_back(res);
    rep.max_rate = std::max(rep.max_rate, std::abs(res) / (n * dt));
  }

  const double beta = N * params.k + 2.0 * a_neg_sup + 1.0;
  bool l2 = true;
  for (int n = 0; n <= nt; ++n)
    l2 = l2 && E[n] <= (E[0] + f_sq) * std::exp(beta * n * dt) * (1.0 + 1e-9) + 1e-300;
  rep.l2_bound_ok = l2;

  double h1 = 0;
  for (int n = 1; n <= nt; ++n)
    h1 += 0.5 * dt * (grad_v_energy(run[n - 1]) + grad_v_energy(run[n]));
  rep.h1_bound_ok =
      params.sigma * h1 <= (E[0] + f_sq) * std::exp(beta * prob.horizon) * (1.0 + 1e-9) + 1e-300;
  return rep;
}

// ---- test bump ----

namespace {
double bump(double u) {
  const double s = 1.0 - u * u;
  return s > 0 ? s * s * s : 0.0;
}
double bump_d(double u) {
  const double s = 1.0 - u * u;
  return s > 0 ? -6.0 * u * s * s : 0.0;
}
double bump_dd(double u) {
  const double s = 1.0 - u * u;
  return s > 0 ? s * (30.0 * u * u - 6.0) : 0.0;
}
}  // namespace

double TestBump::theta(double t) const { return bump(t / t_cut); }
double TestBump::theta_dt(double t) const { return bump_d(t / t_cut) / t_cut; }

std::vector<TestBump> make_test_bank(const Grid& g, double T) {
  std::vector<TestBump> bank;
  const double spanx = 0.75 * g.Lx, spanv = 0.75 * g.Lv;
  const double offs[5][2] = {{0.0, 0.0}, {0.25, 0.2}, {-0.3, -0.15},
                             {0.15, -0.3}, {-0.2, 0.25}};
  const double radx[5] = {0.9, 0.6, 0.75, 0.5, 0.8};
  for (int i = 0; i < 5; ++i) {
    TestBump b;
    b.t_cut = 0.95 * T;
    for (int d = 0; d < g.dim; ++d) {
      b.cx[d] = offs[i][d % 2] * spanx;
      b.cvv[d] = offs[i][(d + 1) % 2] * spanv;
    }
    b.rx = radx[i] * spanx;
    b.rv = radx[i] * spanv;
    bank.push_back(b);
  }
  return bank;
}

std::vector<double> weak_form_residual(const std::vector<PhaseField>& p_run,
                                       const FdProblem& coeffs,
                                       const ModelParams& params,
                                       const std::vector<TestBump>& bank) {
  const Grid& g = p_run[0].grid;
  const int nt = static_cast<int>(p_run.size()) - 1;
  const double dt = coeffs.horizon / nt;
  const std::size_t nsp = g.space_size();
  const std::size_t nvel = g.vel_size();

  std::vector<double> out;
  for (const TestBump& tb : bank) {
    // spatial profiles cached per grid point
    std::vector<double> bx(nsp, 1.0), bxd(nsp * g.dim, 0.0);
    std::vector<int> xm(g.dim), vm(g.dim);
    for (std::size_t i = 0; i < nsp; ++i) {
      unflatten(i, g.nx, g.dim, xm.data());
      double prod = 1;
      double comp[3], compd[3];
      for (int d = 0; d < g.dim; ++d) {
        const double u = (g.x(xm[d]) - tb.cx[d]) / tb.rx;
        comp[d] = bump(u);
        compd[d] = bump_d(u) / tb.rx;
        prod *= comp[d];
      }
      bx[i] = prod;
      for (int d = 0; d < g.dim; ++d) {
        double dp = compd[d];
        for (int e = 0; e < g.dim; ++e)
          if (e != d) dp *= comp[e];
        bxd[i * g.dim + d] = dp;
      }
    }
    std::vector<double> bv(nvel, 1.0), bvd(nvel * g.dim, 0.0), bvl(nvel, 0.0);
    std::vector<double> vcoord(nvel * g.dim, 0.0);
    for (std::size_t a = 0; a < nvel; ++a) {
      unflatten(a, g.nv, g.dim, vm.data());
      double comp[3], compd[3], compdd[3];
      double prod = 1;
      for (int d = 0; d < g.dim; ++d) {
        const double vd = g.v(vm[d]);
        vcoord[a * g.dim + d] = vd;
        const double u = (vd - tb.cvv[d]) / tb.rv;
        comp[d] = bump(u);
        compd[d] = bump_d(u) / tb.rv;
        compdd[d] = bump_dd(u) / (tb.rv * tb.rv);
        prod *= comp[d];
      }
      bv[a] = prod;
      double lap = 0;
      for (int d = 0; d < g.dim; ++d) {
        double dp = compd[d], ddp = compdd[d];
        for (int e = 0; e < g.dim; ++e)
          if (e != d) {
            dp *= comp[e];
            ddp *= comp[e];
          }
        bvd[a * g.dim + d] = dp;
        lap += ddp;
      }
      bvl[a] = lap;
    }

    double total = 0;
    for (int n = 0; n <= nt; ++n) {
      const double t = n * dt;
      const double th = tb.theta(t), thd = tb.theta_dt(t);
      const auto* F = series_at(coeffs.force, n);
      const auto* A = series_at(coeffs.potential_x, n);
      const auto* B = series_at(coeffs.potential_rho_coef, n);
      const PhaseField& p = p_run[n];

      double term = 0;
      for (std::size_t ixp = 0; ixp < nsp; ++ixp) {
        const double* blk = p.values.data() + ixp * nvel;
        const double a0 = A ? (*A)[ixp] : 0.0;
        const double b0 = B ? (*B)[ixp] : 0.0;
        for (std::size_t a = 0; a < nvel; ++a) {
          const double pv = blk[a];
          if (pv == 0) continue;
          double phi_t = thd * bx[ixp] * bv[a];
          double adv = 0, drift = 0;
          for (int d = 0; d < g.dim; ++d) {
            const double vd = vcoord[a * g.dim + d];
            adv += vd * bxd[ixp * g.dim + d] * bv[a];
            const double Fd = F ? (*F)[d][ixp] : 0.0;
            drift += (Fd - params.k * vd) * bx[ixp] * bvd[a * g.dim + d];
          }
          const double diff = params.sigma * bx[ixp] * bvl[a];
          const double pot = (a0 + b0 * (coeffs.rho_values.empty()
                                             ? 0.0
                                             : coeffs.rho_values[a])) *
                             th * bx[ixp] * bv[a];
          term += pv * (phi_t + th * (adv + drift + diff) - pot);
        }
      }
      term *= g.cell_phase();
      const double w = (n == 0 || n == nt) ? 0.5 : 1.0;
      total += w * dt * term;
    }

    // initial term
    double init = 0;
    {
      const PhaseField& p0 = p_run[0];
      for (std::size_t ixp = 0; ixp < nsp; ++ixp) {
        const double* blk = p0.values.data() + ixp * nvel;
        for (std::size_t a = 0; a < nvel; ++a)
          init += blk[a] * bx[ixp] * bv[a];
      }
      init *= g.cell_phase() * tb.theta(0.0);
    }
    out.push_back(total + init);
  }
  return out;
}

}  // namespace kinefp
