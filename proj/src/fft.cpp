#include "kinefp/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kinefp {

struct HeatConvolver::Impl {
  Grid grid;
  int m = 0;        // padded points per axis
  int pad = 0;      // cells of padding on each side
  std::size_t total = 0, ncplx = 0;
  std::vector<double> heat_mult;            // at complex index
  std::vector<std::vector<double>> omega;   // per axis, at complex index
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_complex* work = nullptr;
  fftw_plan fwd = nullptr, bwd = nullptr;

  ~Impl() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (real) fftw_free(real);
    if ( cplx) fftw_free(cplx);
    if (work) fftw_free(work);
  }

  std::size_t window_flat(const int* idx) const {
    std::size_t f = 0;
    for (int d = 0; d < grid.dim; ++d)
      f = f * m + (idx[d] + pad);
    return f;
  }
};

HeatConvolver::HeatConvolver(const Grid& g, double d_coef, double dt,
                             double pad_len)
    : impl_(std::make_unique<Impl>()) {
  Impl& im = *impl_;
  im.grid = g;
  im.pad = static_cast<int>(std::ceil(pad_len / g.dx)) + 2;
  im.m = g.nx + 2 * im.pad;

  const int dim = g.dim;
  const int mh = im.m / 2 + 1;
  im.total = 1;
  for (int d = 0; d < dim; ++d) im.total *= im.m;
  im.ncplx = im.total / im.m * mh;

  im.real = fftw_alloc_real(im.total);
  im.cplx = fftw_alloc_complex(im.ncplx);
  im.work = fftw_alloc_complex(im.ncplx);

  std::vector<int> dims(dim, im.m);
  im.fwd = fftw_plan_dft_r2c(dim, dims.data(), im.real, im.cplx, FFTW_ESTIMATE);
  im.bwd = fftw_plan_dft_c2r(dim, dims.data(), im.work, im.real, FFTW_ESTIMATE);
  if (!im.fwd || !im.bwd) throw std::runtime_error("HeatConvolver: fftw plan failed");

  const double P = im.m * g.dx;  // padded period
  im.heat_mult.assign(im.ncplx, 0.0);
  im.omega.assign(dim, std::vector<double>(im.ncplx, 0.0));
  for (std::size_t ci = 0; ci < im.ncplx; ++ci) {
    std::size_t rem = ci;
    double w2 = 0;
    for (int d = dim - 1; d >= 0; --d) {
      const int n = (d == dim - 1) ? mh : im.m;
      int j = static_cast<int>(rem % n);
      rem /= n;
      if (d != dim - 1 && j > im.m / 2) j -= im.m;
      const double w = 2.0 * std::numbers::pi * j / P;
      im.omega[d][ci] = w;
      w2 += w * w;
    }
    im.heat_mult[ci] = std::exp(-d_coef * w2 * dt) / im.total;
  }
}

HeatConvolver::~HeatConvolver() = default;

int HeatConvolver::padded_n() const { return impl_->m; }

void HeatConvolver::load(const SpatialField& f) {
  Impl& im = *impl_;
  std::fill(im.real, im.real + im.total, 0.0);
  int idx[3] = {0, 0, 0};
  for (std::size_t i = 0; i < f.size(); ++i) {
    unflatten(i, im.grid.nx, im.grid.dim, idx);
    im.real[im.window_flat(idx)] = f[i];
  }
}

void HeatConvolver::scale_shift_window(const std::vector<double>& factor,
                                       const std::vector<double>& shift) {
  Impl& im = *impl_;
  int idx[3] = {0, 0, 0};
  const std::size_t n = im.grid.space_size();
  for (std::size_t i = 0; i < n; ++i) {
    unflatten(i, im.grid.nx, im.grid.dim, idx);
    double& x = im.real[im.window_flat(idx)];
    x = x * factor[i] + shift[i];
  }
}

void HeatConvolver::heat_step() {
  Impl& im = *impl_;
  fftw_execute(im.fwd);
  for (std::size_t ci = 0; ci < im.ncplx; ++ci) {
    im.work[ci][0] = im.cplx[ci][0] * im.heat_mult[ci];
    im.work[ci][1] = im.cplx[ci][1] * im.heat_mult[ci];
  }
  fftw_execute(im.bwd);
}

SpatialField HeatConvolver::window(FieldKind kind, double t) const {
  const Impl& im = *impl_;
  SpatialField out(im.grid, kind, t);
  int idx[3] = {0, 0, 0};
  for (std::size_t i = 0; i < out.size(); ++i) {
    unflatten(i, im.grid.nx, im.grid.dim, idx);
    out[i] = im.real[im.window_flat(idx)];
  }
  return out;
}

std::vector<SpatialField> HeatConvolver::gradient(double t) const {
  Impl& im = *impl_;
  fftw_execute(im.fwd);
  std::vector<SpatialField> grads;
  for (int d = 0; d < im.grid.dim; ++d) {
    for (std::size_t ci = 0; ci < im.ncplx; ++ci) {
      // i * omega * c_hat, with the 1/total normalization folded in
      const double re = im.cplx[ci][0] / im.total;
      const double ims = im.cplx[ci][1] / im.total;
      im.work[ci][0] = -im.omega[d][ci] * ims;
      im.work[ci][1] = im.omega[d][ci] * re;
    }
    // save state, run inverse, restore
    std::vector<double> saved(im.real, im.real + im.total);
    fftw_execute(im.bwd);
    grads.push_back(window(FieldKind::grad_taf_component, t));
    std::copy(saved.begin(), saved.end(), im.real);
  }
  return grads;
}

}  // namespace kinefp
