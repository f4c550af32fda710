#pragma once

#include <cmath>

#include "magframe/grid.hpp"

namespace magframe {

// Standard smooth step: s(u) = sig(u) / (sig(u) + sig(1-u)), sig(u) = e^{-1/u}.
inline double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  double a = std::exp(-1.0 / u);
  double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

// 1D window profile: chi0(t) = cos((pi/2) s(|t|)), supported in (-1, 1); the
// step argument 2|t|-1 rescaled from [-1,1] back to s's unit domain is |t|.
// Even gluing plus s(u) + s(1-u) = 1 give sum_g chi0(t-g)^2 = 1 exactly.
inline double window_profile(double t) {
  t = std::abs(t);
  if (t >= 1.0) return 0.0;
  return std::cos(0.5 * pi * smooth_step(t));
}

struct Window {
  int dim = 1;

  explicit Window(int d = 1) : dim(d) {}

  double profile(double t) const { return window_profile(t); }

  double eval(const RVec& x) const {
    double w = 1.0;
    for (int i = 0; i < dim; ++i) w *= window_profile(x[i]);
    return w;
  }
};

inline Window build_window(int dim = 1) { return Window(dim); }

}  // namespace magframe
