#include "kinefp/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

#include "kinefp/util.hpp"

namespace kinefp {

namespace {

double checked_sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("field has non-finite entries");
    s += x;
  }
  return s;
}

double lq_sum(const std::vector<double>& v, double q) {
  double s = 0;
  for (double x : v) {
    if (!std::isfinite(x)) throw std::invalid_argument("field has non-finite entries");
    s += std::pow(std::abs(x), q);
  }
  return s;
}

}  // namespace

double integrate_phase(const PhaseField& f) {
  return checked_sum(f.values) * f.grid.cell_phase();
}

double integrate_space(const SpatialField& f) {
  return checked_sum(f.values) * f.grid.cell_x();
}

double lp_norm(const PhaseField& f, double q) {
  if (std::isinf(q)) return max_abs(f.values);
  if (q < 1) throw std::invalid_argument("lp_norm: q must be >= 1 or infinity");
  return std::pow(lq_sum(f.values, q) * f.grid.cell_phase(), 1.0 / q);
}

double lp_norm(const SpatialField& f, double q) {
  if (std::isinf(q)) return max_abs(f.values);
  if (q < 1) throw std::invalid_argument("lp_norm: q must be >= 1 or infinity");
  return std::pow(lq_sum(f.values, q) * f.grid.cell_x(), 1.0 / q);
}

double max_abs(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double min_value(const std::vector<double>& v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v) m = std::min(m, x);
  return m;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double sup_x_l1_v(const PhaseField& f) {
  const std::size_t nvel = f.grid.vel_size();
  const std::size_t nsp = f.grid.space_size();
  double best = 0;
  for (std::size_t ix = 0; ix < nsp; ++ix) {
    double s = 0;
    const double* p = f.values.data() + ix * nvel;
    for (std::size_t a = 0; a < nvel; ++a) s += std::abs(p[a]);
    best = std::max(best, s);
  }
  return best * f.grid.cell_v();
}

double l1_distance(const PhaseField& a, const PhaseField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("l1_distance: size mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * a.grid.cell_phase();
}

void unflatten(std::size_t flat, int n, int dim, int* out) {
  for (int d = dim - 1; d >= 0; --d) {
    out[d] = static_cast<int>(flat % n);
    flat /= n;
  }
}

// ---- util.hpp implementations ----

namespace {
int g_threads = 0;
}

int thread_count() {
  if (g_threads > 0) return g_threads;
  if (const char* env = std::getenv("KINEFP_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 2;
}

void set_thread_count(int n) { g_threads = n; }

void parallel_for(std::size_t n,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  const int nthreads = std::min<std::size_t>(thread_count(), n == 0 ? 1 : n);
  if (nthreads <= 1 || n < 2) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + nthreads - 1) / nthreads;
  for (int t = 0; t < nthreads; ++t) {
    std::size_t lo = t * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::pair<double, double> linear_fit(const std::vector<double>& x,
                                     const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  const double b = (n * sxy - sx * sy) / denom;
  const double a = (sy - b * sx) / n;
  return {a, b};
}

}  // namespace kinefp
