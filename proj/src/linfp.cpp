#include "kinefp/linfp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "kinefp/util.hpp"

namespace kinefp {

namespace {

constexpr double kCullV = 1e-16;  // cull velocity weights below this * dv
constexpr double kCullW = 1e-18;  // cull x-row entries below this

// strides of the [x0..x_{N-1}, v0..v_{N-1}] row-major layout
struct Layout {
  int dim, nx, nv;
  std::size_t xstride(int d) const {
    std::size_t s = 1;
    for (int t = dim; t-- > d + 1;) s *= nx;  // remaining x axes
    for (int t = 0; t < dim; ++t) s *= nv;
    return s;
  }
  std::size_t vstride(int d) const {
    std::size_t s = 1;
    for (int t = dim; t-- > d + 1;) s *= nv;
    return s;
  }
};

}  // namespace

FreePropagator::FreePropagator(const Grid& g, double k, double sigma,
                               double lag, XReconstruction recon)
    : grid_(g), lag_(lag), nx_(g.nx), nv_(g.nv), recon_(recon) {
  if (!(lag > 0)) throw std::invalid_argument("FreePropagator: lag must be > 0");
  const OuMoments m = ou_moments(k, sigma, lag);
  const double inv_norm_v = 1.0 / std::sqrt(2.0 * std::numbers::pi * m.s_vv);
  const double sc = std::sqrt(m.cond_var);  // conditional std of x given v
  const double inv_norm_c = 1.0 / std::sqrt(2.0 * std::numbers::pi);

  cv_.assign(static_cast<std::size_t>(nv_) * nv_, 0.0);
  wlo_.assign(cv_.size(), 0);
  whi_.assign(cv_.size(), -1);
  woff_.assign(cv_.size(), 0);

  for (int a = 0; a < nv_; ++a) {
    const double va = g.v(a);
    for (int b = 0; b < nv_; ++b) {
      const std::size_t pair = static_cast<std::size_t>(a) * nv_ + b;
      const double nub = g.v(b);
      const double mean_v = nub * m.decay;
      const double dvab = va - mean_v;
      const double w =
          g.dv * inv_norm_v * std::exp(-dvab * dvab / (2.0 * m.s_vv));
      if (w < kCullV * g.dv) continue;
      cv_[pair] = w;

      const double shift = nub * m.mean_x_coef + m.cond_slope * dvab;
      // support of the cell-integrated x kernel in units of dx
      const double half_width = 7.0 * sc + g.dx;
      int lo = static_cast<int>(std::floor((shift - half_width) / g.dx));
      int hi = static_cast<int>(std::ceil((shift + half_width) / g.dx));
      lo = std::max(lo, -(nx_ - 1));
      hi = std::min(hi, nx_ - 1);
      if (lo > hi) {  // shift carried the mass outside the box entirely
        cv_[pair] = 0.0;
        continue;
      }
      woff_[pair] = wval_.size();
      wlo_[pair] = lo;
      whi_[pair] = hi;
      // cell weight: Phi(zb) - Phi(za); cell moment about the cell center:
      // u w + sc (phi(za) - phi(zb)), with u = off dx - shift the kernel
      // mean in cell coordinates
      for (int off = lo; off <= hi; ++off) {
        const double u = off * g.dx - shift;
        const double za = (-0.5 * g.dx - u) / sc;
        const double zb = (0.5 * g.dx - u) / sc;
        const double wcell =
            0.5 * (std::erf(zb / std::numbers::sqrt2) -
                   std::erf(za / std::numbers::sqrt2));
        const double pa = inv_norm_c * std::exp(-0.5 * za * za);
        const double pb = inv_norm_c * std::exp(-0.5 * zb * zb);
        const double mcell = u * wcell + sc * (pa - pb);
        wval_.push_back(wcell < kCullW ? 0.0 : wcell);
        mval_.push_back(wcell < kCullW ? 0.0 : mcell);
      }
    }
  }
}

void FreePropagator::apply_axis(PhaseField& p, int axis) const {
  const Layout lay{grid_.dim, nx_, nv_};
  const std::size_t sx = lay.xstride(axis);
  const std::size_t sv = lay.vstride(axis);

  // enumerate all slices over the remaining axes
  std::vector<std::size_t> osz, ost;
  for (int d = 0; d < grid_.dim; ++d) {
    if (d != axis) {
      osz.push_back(nx_);
      ost.push_back(lay.xstride(d));
    }
  }
  for (int d = 0; d < grid_.dim; ++d) {
    if (d != axis) {
      osz.push_back(nv_);
      ost.push_back(lay.vstride(d));
    }
  }
  std::size_t total = 1;
  for (std::size_t s : osz) total *= s;

  double* data = p.values.data();
  const int nx = nx_, nv = nv_;

  const bool linear = recon_ == XReconstruction::linear;
  parallel_for(total, [&](std::size_t lo, std::size_t hi) {
    std::vector<double> q(static_cast<std::size_t>(nx) * nv);
    std::vector<double> slope(linear ? q.size() : 0);
    std::vector<double> o(q.size());
    for (std::size_t s = lo; s < hi; ++s) {
      std::size_t rem = s, base = 0;
      for (std::size_t d = osz.size(); d-- > 0;) {
        base += (rem % osz[d]) * ost[d];
        rem /= osz[d];
      }
      for (int b = 0; b < nv; ++b)
        for (int j = 0; j < nx; ++j)
          q[static_cast<std::size_t>(b) * nx + j] = data[base + j * sx + b * sv];
      if (linear) {
        for (int b = 0; b < nv; ++b) {
          const double* qb = q.data() + static_cast<std::size_t>(b) * nx;
          double* sb = slope.data() + static_cast<std::size_t>(b) * nx;
          sb[0] = (qb[1] - qb[0]) / grid_.dx;
          for (int j = 1; j + 1 < nx; ++j)
            sb[j] = (qb[j + 1] - qb[j - 1]) / (2.0 * grid_.dx);
          sb[nx - 1] = (qb[nx - 1] - qb[nx - 2]) / grid_.dx;
          // keep the cell reconstruction sign-safe: |s| <= 2|q|/dx. Inactive
          // wherever the log-slope is below 2/dx, i.e. everywhere but steep
          // tails; homogeneous of degree one, so linear-in-data checks hold.
          for (int j = 0; j < nx; ++j) {
            const double lim = 2.0 * std::abs(qb[j]) / grid_.dx;
            sb[j] = std::clamp(sb[j], -lim, lim);
          }
        }
      }
      std::fill(o.begin(), o.end(), 0.0);

      for (int b = 0; b < nv; ++b) {
        const double* qb = q.data() + static_cast<std::size_t>(b) * nx;
        const double* sb =
            linear ? slope.data() + static_cast<std::size_t>(b) * nx : nullptr;
        for (int a = 0; a < nv; ++a) {
          const std::size_t pair = static_cast<std::size_t>(a) * nv + b;
          const double w = cv_[pair];
          if (w == 0.0) continue;
          const double* row = wval_.data() + woff_[pair];
          const double* mrow = mval_.data() + woff_[pair];
          const int mlo = wlo_[pair], mhi = whi_[pair];
          double* oa = o.data() + static_cast<std::size_t>(a) * nx;
          if (linear) {
            for (int i = 0; i < nx; ++i) {
              const int jlo = std::max(0, i - mhi);
              const int jhi = std::min(nx - 1, i - mlo);
              double acc = 0;
              for (int j = jlo; j <= jhi; ++j) {
                const int off = i - j - mlo;
                acc += row[off] * qb[j] + mrow[off] * sb[j];
              }
              oa[i] += w * acc;
            }
          } else {
            for (int i = 0; i < nx; ++i) {
              const int jlo = std::max(0, i - mhi);
              const int jhi = std::min(nx - 1, i - mlo);
              double acc = 0;
              for (int j = jlo; j <= jhi; ++j) acc += row[i - j - mlo] * qb[j];
              oa[i] += w * acc;
            }
          }
        }
      }
      for (int a = 0; a < nv; ++a)
        for (int i = 0; i < nx; ++i)
          data[base + i * sx + a * sv] = o[static_cast<std::size_t>(a) * nx + i];
    }
  });
}

void FreePropagator::apply(PhaseField& p) const {
  if (p.grid.phase_size() != grid_.phase_size())
    throw std::invalid_argument("FreePropagator: grid mismatch");
  for (int d = 0; d < grid_.dim; ++d) apply_axis(p, d);
  p.time_stamp += lag_;
}

PhaseField propagate_free(const PhaseField& p0, double t,
                          const PropagatorSpec& spec) {
  if (!(t > 0)) throw std::invalid_argument("propagate_free: t must be > 0");
  FreePropagator prop(p0.grid, spec.k, spec.sigma, t);
  PhaseField out = p0;
  prop.apply(out);
  return out;
}

double series_truncation_bound(double a_sup, double T, int l) {
  if (a_sup < 0 || !(T > 0) || l < 0)
    throw std::invalid_argument("series_truncation_bound: need a_sup >= 0, T > 0, l >= 0");
  // ||a||^{l+1} T^{l+1} / (l+1)! in log space to dodge overflow
  if (a_sup == 0) return 0;
  double lg = 0;
  for (int i = 1; i <= l + 1; ++i) lg += std::log(a_sup * T / i);
  return std::exp(lg);
}

namespace {

template <typename T>
const T* series_at(const std::vector<T>& s, int n) {
  if (s.empty()) return nullptr;
  if (s.size() == 1) return &s[0];
  return &s[std::min<std::size_t>(n, s.size() - 1)];
}

}  // namespace

double potential_sup(const LinearProblem& prob, const Grid& g) {
  const std::size_t steps =
      std::max(prob.potential_x.size(), prob.potential_rho_coef.size());
  if (steps == 0) return 0;
  double rho_max = 0, rho_min = 0;
  for (double r : prob.rho_values) {
    rho_max = std::max(rho_max, r);
    rho_min = std::min(rho_min, r);
  }
  double sup = 0;
  for (std::size_t n = 0; n < steps; ++n) {
    const SpatialField* A = series_at(prob.potential_x, static_cast<int>(n));
    const SpatialField* B = series_at(prob.potential_rho_coef, static_cast<int>(n));
    for (std::size_t i = 0; i < g.space_size(); ++i) {
      const double a = A ? (*A)[i] : 0.0;
      const double b = B ? (*B)[i] : 0.0;
      sup = std::max(sup, std::abs(a + b * rho_max));
      sup = std::max(sup, std::abs(a + b * rho_min));
    }
  }
  return sup;
}

void add_scaled(PhaseField& p, const PhaseField& f, double scale) {
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += scale * f[i];
}

void apply_drift_central(PhaseField& p, const std::vector<SpatialField>& force,
                         double dt) {
  const Grid& g = p.grid;
  const Layout lay{g.dim, g.nx, g.nv};
  const std::size_t nsp = g.space_size();
  const std::size_t nvel = g.vel_size();
  const int nv = g.nv;

  for (int d = 0; d < g.dim; ++d) {
    const SpatialField& F = force[d];
    const std::size_t sv = lay.vstride(d);
    const std::size_t nlines_v = nvel / nv;  // velocity combos with v_d removed
    parallel_for(nsp, [&](std::size_t lo, std::size_t hi) {
      std::vector<double> line(nv), flux(nv + 1);
      for (std::size_t ix = lo; ix < hi; ++ix) {
        const double f = F[ix];
        if (f == 0.0) continue;
        const std::size_t xbase = ix * nvel;
        for (std::size_t vl = 0; vl < nlines_v; ++vl) {
          // distribute vl over the v axes other than d
          std::size_t rem = vl, vbase = 0;
          for (int t = g.dim; t-- > 0;) {
            if (t == d) continue;
            vbase += (rem % nv) * lay.vstride(t);
            rem /= nv;
          }
          double* base = p.values.data() + xbase + vbase;
          for (int a = 0; a < nv; ++a) line[a] = base[a * sv];
          flux[0] = flux[nv] = 0.0;  // no flux through the box faces
          for (int a = 0; a + 1 < nv; ++a)
            flux[a + 1] = f * 0.5 * (line[a] + line[a + 1]);
          const double r = dt / g.dv;
          for (int a = 0; a < nv; ++a)
            base[a * sv] = line[a] - r * (flux[a + 1] - flux[a]);
        }
      }
    });
  }
}

void apply_potential_factor(PhaseField& p, const SpatialField* A,
                            const SpatialField* B,
                            const std::vector<double>& rho_values, double dt) {
  if (!A && !B) return;
  const std::size_t nsp = p.grid.space_size();
  const std::size_t nvel = p.grid.vel_size();
  parallel_for(nsp, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t ix = lo; ix < hi; ++ix) {
      double* block = p.values.data() + ix * nvel;
      const double a = A ? (*A)[ix] : 0.0;
      const double b = B ? (*B)[ix] : 0.0;
      if (b == 0.0) {
        const double fac = std::exp(-dt * a);
        for (std::size_t v = 0; v < nvel; ++v) block[v] *= fac;
      } else {
        for (std::size_t v = 0; v < nvel; ++v)
          block[v] *= std::exp(-dt * (a + b * rho_values[v]));
      }
    }
  });
}

std::vector<PhaseField> solve_linear(const LinearProblem& prob,
                                     const PropagatorSpec& spec, int nt) {
  const Grid& g = prob.p0.grid;
  if (!all_finite(prob.p0.values))
    throw std::invalid_argument("solve_linear: p0 must be finite");
  for (const auto& per_step : prob.force)
    for (const auto& f : per_step)
      if (!all_finite(f.values))
        throw std::invalid_argument("solve_linear: force must be finite");
  for (const auto& a : prob.potential_x)
    if (!all_finite(a.values))
      throw std::invalid_argument("solve_linear: potential must be finite");
  const double a_sup = potential_sup(prob, g);
  const double bound =
      series_truncation_bound(a_sup, prob.horizon, prob.series_lmax);
  if (bound > prob.series_tol) {
    std::ostringstream os;
    os << "solve_linear: Volterra truncation bound " << bound
       << " at level " << prob.series_lmax << " exceeds series_tol "
       << prob.series_tol;
    throw std::runtime_error(os.str());
  }

  const double dt = prob.horizon / nt;
  FreePropagator prop(g, spec.k, spec.sigma, dt, prob.x_reconstruction);

  std::vector<PhaseField> out;
  out.reserve(nt + 1);
  out.push_back(prob.p0);
  out.back().time_stamp = 0;

  PhaseField p = prob.p0;
  for (int n = 0; n < nt; ++n) {
    if (const PhaseField* f = series_at(prob.source, n)) add_scaled(p, *f, dt);
    if (const auto* F = series_at(prob.force, n))
      apply_drift_central(p, *F, dt);
    prop.apply(p);
    apply_potential_factor(p, series_at(prob.potential_x, n),
                           series_at(prob.potential_rho_coef, n),
                           prob.rho_values, dt);
    p.time_stamp = (n + 1) * dt;
    out.push_back(p);
  }
  return out;
}

std::vector<std::vector<PhaseField>> volterra_levels(
    const LinearProblem& prob, const PropagatorSpec& spec, int nt, int lmax) {
  const Grid& g = prob.p0.grid;
  const double dt = prob.horizon / nt;
  FreePropagator prop(g, spec.k, spec.sigma, dt, prob.x_reconstruction);

  auto sweep = [&](const std::vector<PhaseField>* prev) {
    std::vector<PhaseField> out;
    out.reserve(nt + 1);
    out.push_back(prob.p0);
    PhaseField p = prob.p0;
    for (int n = 0; n < nt; ++n) {
      if (const PhaseField* f = series_at(prob.source, n)) add_scaled(p, *f, dt);
      if (prev) {
        // move the potential to the source: -(A + B rho) p^{(l)}(t_n)
        const SpatialField* A = series_at(prob.potential_x, n);
        const SpatialField* B = series_at(prob.potential_rho_coef, n);
        if (A || B) {
          const PhaseField& pl = (*prev)[n];
          const std::size_t nvel = g.vel_size();
          for (std::size_t ix = 0; ix < g.space_size(); ++ix) {
            const double a = A ? (*A)[ix] : 0.0;
            const double b = B ? (*B)[ix] : 0.0;
            double* blk = p.values.data() + ix * nvel;
            const double* src = pl.values.data() + ix * nvel;
            if (b == 0.0) {
              for (std::size_t v = 0; v < nvel; ++v)
                blk[v] -= dt * a * src[v];
            } else {
              for (std::size_t v = 0; v < nvel; ++v)
                blk[v] -= dt * (a + b * prob.rho_values[v]) * src[v];
            }
          }
        }
      }
      if (const auto* F = series_at(prob.force, n))
        apply_drift_central(p, *F, dt);
      prop.apply(p);
      p.time_stamp = (n + 1) * dt;
      out.push_back(p);
    }
    return out;
  };

  std::vector<std::vector<PhaseField>> levels;
  levels.push_back(sweep(nullptr));
  for (int l = 0; l < lmax; ++l) levels.push_back(sweep(&levels.back()));
  return levels;
}

std::string CompareVerdict::describe() const {
  std::ostringstream os;
  if (equal)
    os << "equal";
  else if (ordered)
    os << "ordered (worst margin " << worst_margin << ")";
  else
    os << "violated at step " << worst_step << ", index " << worst_index
       << ", margin " << worst_margin;
  return os.str();
}

CompareVerdict compare_solutions(const std::vector<PhaseField>& run1,
                                 const std::vector<PhaseField>& run2,
                                 double eps) {
  if (run1.size() != run2.size())
    throw std::invalid_argument("compare_solutions: run length mismatch");
  CompareVerdict v;
  v.worst_margin = std::numeric_limits<double>::infinity();
  bool exactly_equal = true;
  for (std::size_t n = 0; n < run1.size(); ++n) {
    for (std::size_t i = 0; i < run1[n].size(); ++i) {
      const double margin = run2[n][i] - run1[n][i];
      if (margin != 0) exactly_equal = false;
      if (margin < v.worst_margin) {
        v.worst_margin = margin;
        v.worst_step = static_cast<int>(n);
        v.worst_index = i;
      }
    }
  }
  v.equal = exactly_equal;
  v.ordered = v.worst_margin >= -eps;
  return v;
}

PhaseField upper_solution(const PhaseField& p0, const ModelParams& params,
                          double rho_sup_value, double t, double M_T) {
  PropagatorSpec spec{params.k, 4.0 * params.sigma, params.dim,
                      GStrategy::ou_covariance};
  PhaseField scaled = p0;
  const double amp = std::ldexp(M_T, 2 * params.dim);  // 2^{2N} M_T
  for (double& x : scaled.values) x *= amp;
  PhaseField out = propagate_free(scaled, t, spec);
  const double growth = std::exp(params.alpha1 * rho_sup_value * t);
  for (double& x : out.values) x *= growth;
  return out;
}

}  // namespace kinefp
