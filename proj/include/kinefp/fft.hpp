#pragma once

#include <memory>
#include <vector>

#include "kinefp/field.hpp"

namespace kinefp {

/// Heat-kernel convolution on the zero-padded periodic extension of the
/// spatial box. The padded field is kept as internal state across steps so
/// mass that diffuses past the box edge is retained until it leaves the
/// padded region. Spectral multipliers keep the step exact in space for
/// any dt (the discrete kernel is the periodized heat kernel: positive,
/// mass exactly one), so the discrete maximum principle holds exactly.
class HeatConvolver {
 public:
  HeatConvolver(const Grid& g, double d_coef, double dt, double pad_len);
  ~HeatConvolver();
  HeatConvolver(const HeatConvolver&) = delete;
  HeatConvolver& operator=(const HeatConvolver&) = delete;

  /// Embed f into the padded state (padding zeroed).
  void load(const SpatialField& f);

  /// state[window]state <- state * factor + shift, windowed pointwise.
  void scale_shift_window(const std::vector<double>& factor,
                          const std::vector<double>& shift);

  /// state <- K_dt convolved with state.
  void heat_step();

  /// Box part of the current state.
  SpatialField window(FieldKind kind, double t) const;

  /// Spectral gradient of the current state, box part, one field per axis.
  std::vector<SpatialField> gradient(double t) const;

  int padded_n() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kinefp
