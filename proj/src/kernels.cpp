#include "kinefp/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kinefp {

namespace {

constexpr double kPi = std::numbers::pi;

// phi(z) = z - 3/2 + 2 e^{-z} - e^{-2z}/2, the dimensionless position
// variance integral. Direct evaluation cancels to O(z^3); series below the
// switch point keeps full relative accuracy.
double phi_stable(double z) {
  if (z < 0.25) {
    // phi(z) = sum_{n>=3} (-1)^n (2 - 2^{n-1}) z^n / n!
    double term = z * z * z / 6.0;  // z^n / n!
    double sum = 0;
    double sign = -1.0;  // (-1)^n
    for (int n = 3; n <= 14; ++n) {
      const double coef = 2.0 - std::ldexp(1.0, n - 1);
      sum += sign * coef * term;
      term *= z / (n + 1);
      sign = -sign;
    }
    return sum;
  }
  return z - 1.5 + 2.0 * std::exp(-z) - 0.5 * std::exp(-2.0 * z);
}

double log_G_axis_ou(double x, double v, double xi, double nu,
                     const OuMoments& m) {
  const double det = m.s_xx * m.s_vv - m.s_xv * m.s_xv;
  const double dx = x - (xi + nu * m.mean_x_coef);
  const double dv = v - nu * m.decay;
  const double quad =
      (m.s_vv * dx * dx - 2.0 * m.s_xv * dx * dv + m.s_xx * dv * dv) / det;
  return -std::log(2.0 * kPi) - 0.5 * std::log(det) - 0.5 * quad;
}

// psi(z) = z (e^{2z} - 1)/2 - (e^z - 1)^2, the variance bracket of the
// printed closed form with both k factors pulled out. The two leading terms
// cancel to O(z^4), so a series carries small z.
double psi_stable(double z) {
  if (z < 0.35) {
    // z^4/12 + z^5/12 + 17 z^6/360 + 7 z^7/360 + ...
    double term = z * z * z * z;  // z^n
    double sum = 0;
    // c_n = 2^{n-2}/(n-1)! - sum_{i=1}^{n-1} 1/(i! (n-i)!)
    for (int n = 4; n <= 16; ++n) {
      double fact = 1;
      for (int i = 2; i <= n - 1; ++i) fact *= i;
      const double lead = std::ldexp(1.0, n - 2) / fact;
      double sq = 0;  // coefficient of z^n in (e^z - 1)^2
      double fi = 1;  // i!
      for (int i = 1; i <= n - 1; ++i) {
        fi *= i;
        double fj = 1;
        for (int j = 2; j <= n - i; ++j) fj *= j;
        sq += 1.0 / (fi * fj);
      }
      sum += (lead - sq) * term;
      term *= z;
    }
    return sum;
  }
  return z * std::expm1(2.0 * z) / 2.0 - std::expm1(z) * std::expm1(z);
}

// Literal transcription of the printed closed form for G. The variance
// bracket is evaluated through psi_stable and exp(ks) overflow is handled
// in log space; the expression itself is unchanged.
double log_G_axis_paper(double x, double v, double xi, double nu, double k,
                        double sigma, double s) {
  const double ks = k * s;
  const double em1 = std::expm1(ks);  // e^{ks} - 1
  const double F = em1 + 1.0;         // e^{ks}

  // prefactor: k e^{ks} / (4 pi sigma sqrt(D)),
  // D = (e^{2ks}-1) s/(2k) - (e^{ks}-1)^2/k^2 = psi(ks)/k^2
  double logD;
  if (ks < 20) {
    logD = std::log(psi_stable(ks)) - 2.0 * std::log(k);
  } else {
    const double Em = std::exp(-ks);
    const double bracket = (1.0 - Em * Em) * s / (2.0 * k)
                         - (1.0 - Em) * (1.0 - Em) / (k * k);
    logD = 2.0 * ks + std::log(bracket);
  }
  const double log_pref = std::log(k) + ks - std::log(4.0 * kPi * sigma) - 0.5 * logD;

  const double u1 = k * (x - xi) + (v - nu);
  const double term1 = u1 * u1 / (4.0 * sigma * s);

  const double u2 = em1 / s * ((x - xi) + (v - nu) / k) + (nu - v * F);
  // (e^{2ks}-1)/(2k) - (e^{ks}-1)^2/(k^2 s) = psi(ks)/(k^2 s)
  const double denom2 = 4.0 * sigma * psi_stable(ks) / (k * k * s);
  const double term2 = u2 * u2 / denom2;

  return log_pref - term1 - term2;
}

}  // namespace

OuMoments ou_moments(double k, double sigma, double lag) {
  if (!(k > 0) || !(sigma > 0))
    throw std::invalid_argument("ou_moments: k and sigma must be > 0");
  if (!(lag > 0)) throw std::invalid_argument("ou_moments: lag must be > 0");
  OuMoments m;
  m.lag = lag;
  const double z = k * lag;
  const double em = -std::expm1(-z);   // 1 - e^{-kz}
  const double em2 = -std::expm1(-2.0 * z);
  m.decay = 1.0 - em;
  m.mean_x_coef = em / k;
  m.s_vv = sigma * em2 / k;
  m.s_xv = sigma * em * em / (k * k);
  m.s_xx = 2.0 * sigma / (k * k * k) * phi_stable(z);
  m.cond_slope = m.s_xv / m.s_vv;
  m.cond_var = m.s_xx - m.s_xv * m.cond_slope;
  return m;
}

double log_eval_G(double t, const double* x, const double* v, double tau,
                  const double* xi, const double* nu,
                  const PropagatorSpec& spec) {
  if (!(t > tau)) throw std::invalid_argument("eval_G: requires t > tau");
  const double s = t - tau;
  double lg = 0;
  if (spec.strategy == GStrategy::ou_covariance) {
    const OuMoments m = ou_moments(spec.k, spec.sigma, s);
    for (int d = 0; d < spec.dim; ++d)
      lg += log_G_axis_ou(x[d], v[d], xi[d], nu[d], m);
  } else {
    for (int d = 0; d < spec.dim; ++d)
      lg += log_G_axis_paper(x[d], v[d], xi[d], nu[d], spec.k, spec.sigma, s);
  }
  return lg;
}

double eval_G(double t, const double* x, const double* v, double tau,
              const double* xi, const double* nu, const PropagatorSpec& spec) {
  return std::exp(log_eval_G(t, x, v, tau, xi, nu, spec));
}

double eval_G1(double t, double x, double v, double tau, double xi, double nu,
               const PropagatorSpec& spec) {
  return eval_G(t, &x, &v, tau, &xi, &nu, spec);
}

double eval_heat_kernel(double t, const double* x, double d_coef, int dim) {
  if (!(t > 0)) throw std::invalid_argument("eval_heat_kernel: requires t > 0");
  double r2 = 0;
  for (int i = 0; i < dim; ++i) r2 += x[i] * x[i];
  const double denom = 4.0 * d_coef * t;
  return std::exp(-r2 / denom - 0.5 * dim * std::log(kPi * denom));
}

double grad_heat_l1_constant(double d_coef) {
  return 1.0 / std::sqrt(kPi * d_coef);
}

double grad_heat_lq_constant(double d_coef, int dim, double q) {
  // ||d_1 K(1)||_q over R^dim by tensor quadrature; the t-scaling
  // t^{-N/2 (1 - 1/q) - 1/2} is applied by callers.
  if (std::isinf(q)) {
    // max of |x1|/(2d) K(1, x): attained at |x1| = sqrt(2 d), x_perp = 0.
    const double x1 = std::sqrt(2.0 * d_coef);
    std::array<double, 3> x{x1, 0, 0};
    return x1 / (2.0 * d_coef) * eval_heat_kernel(1.0, x.data(), d_coef, dim);
  }
  const int n = 400;
  const double L = 10.0 * std::sqrt(2.0 * d_coef);
  const double h = 2.0 * L / n;
  double s1 = 0;  // integral over x1 of |x1/(2d) K1(x1)|^q
  double s2 = 0;  // integral over one perpendicular axis of K1^q
  for (int i = 0; i < n; ++i) {
    const double xx = -L + (i + 0.5) * h;
    const double k1 = std::exp(-xx * xx / (4.0 * d_coef)) /
                      std::sqrt(4.0 * kPi * d_coef);
    s1 += std::pow(std::abs(xx) / (2.0 * d_coef) * k1, q) * h;
    s2 += std::pow(k1, q) * h;
  }
  double total = s1;
  for (int d = 1; d < dim; ++d) total *= s2;
  return std::pow(total, 1.0 / q);
}

double alpha_of_c(double c, const ModelParams& p) {
  if (c < 0) throw std::invalid_argument("alpha_of_c: c must be >= 0");
  return p.alpha1 * c / (p.c_R + c);
}

double fermi_weight(double speed, const ModelParams& p) {
  const double z = p.delta * (speed * speed - p.v_max * p.v_max);
  if (z > 0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

std::vector<SpatialField> force_from_c(const SpatialField& c,
                                       const std::vector<SpatialField>& grad_c,
                                       const ModelParams& p) {
  if (static_cast<int>(grad_c.size()) != p.dim)
    throw std::invalid_argument("force_from_c: need one gradient component per axis");
  std::vector<SpatialField> F;
  F.reserve(p.dim);
  for (int ax = 0; ax < p.dim; ++ax) {
    SpatialField f(c.grid, FieldKind::force_component, c.time_stamp);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] < 0) throw std::invalid_argument("force_from_c: c must be >= 0");
      f[i] = p.d1 * std::pow(1.0 + p.gamma1 * c[i], -p.q1) * grad_c[ax][i];
    }
    F.push_back(std::move(f));
  }
  return F;
}

double rho_eval(const double* v, int dim, const RhoSpec& spec) {
  double r2 = 0;
  for (int i = 0; i < dim; ++i) {
    const double d = v[i] - spec.center[i];
    r2 += d * d;
  }
  return spec.amplitude * std::exp(-r2 / (2.0 * spec.width * spec.width));
}

std::vector<double> rho_on_grid(const Grid& g, const RhoSpec& spec) {
  std::vector<double> out(g.vel_size());
  const std::size_t nvel = g.vel_size();
  int idx[3];
  double v[3];
  for (std::size_t a = 0; a < nvel; ++a) {
    unflatten(a, g.nv, g.dim, idx);
    for (int d = 0; d < g.dim; ++d) v[d] = g.v(idx[d]);
    out[a] = rho_eval(v, g.dim, spec);
  }
  return out;
}

namespace {
template <typename F>
void for_each_velocity(const Grid& g, F&& f) {
  const std::size_t nvel = g.vel_size();
  int idx[3];
  double v[3];
  for (std::size_t a = 0; a < nvel; ++a) {
    unflatten(a, g.nv, g.dim, idx);
    double r2 = 0;
    for (int d = 0; d < g.dim; ++d) {
      v[d] = g.v(idx[d]);
      r2 += v[d] * v[d];
    }
    f(std::sqrt(r2));
  }
}
}  // namespace

double weight_vg_sup(const Grid& g, const ModelParams& p) {
  double best = 0;
  for_each_velocity(g, [&](double speed) {
    const double w = p.flux_mode == FluxMode::raw ? speed
                                                  : speed * fermi_weight(speed, p);
    best = std::max(best, w);
  });
  return best;
}

double weight_vg_l1(const Grid& g, const ModelParams& p) {
  double s = 0;
  for_each_velocity(g, [&](double speed) {
    s += p.flux_mode == FluxMode::raw ? speed : speed * fermi_weight(speed, p);
  });
  return s * g.cell_v();
}

}  // namespace kinefp
