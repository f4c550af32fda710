#pragma once

#include <random>

#include "magframe/weyl.hpp"
#include "magframe/window.hpp"

namespace magframe {

// Smooth plateau cutoff: 1 for |u| <= inner, 0 for |u| >= outer.
inline double plateau_taper(double u, double inner = 3.0, double outer = 6.0) {
  return 1.0 - smooth_step((std::abs(u) - inner) / (outer - inner));
}

// Isotropic Gaussian bump centered at a phase point.
inline Symbol gaussian_symbol(const PhasePoint& center, double width) {
  return Symbol::from_function(0.0, [center, width](const PhasePoint& X) -> cplx {
    double s = dot(X.x - center.x, X.x - center.x) + dot(X.xi - center.xi, X.xi - center.xi);
    return std::exp(-s / (2 * width * width));
  });
}

// Random Schwartz-like symbol: a few modulated Gaussian bumps with random
// centers, widths and phases. Centers stay well inside the grid so the
// truncation error sits far below the test tolerances.
// Widths are anisotropic on purpose: the position width controls the decay at
// the x-boundary, while the momentum width controls the decay of the operator
// kernel at the |x - y| band edge (wide in xi = narrow in z), and both tails
// must sit below the round-trip tolerances.
inline Symbol random_schwartz_symbol(int dim, std::uint64_t seed, double xbox = 1.3,
                                     double xibox = 2.0, int n_bumps = 5) {
  std::mt19937_64 rng(seed);
  // the xi-modulation shifts the kernel along x - y, so it stays narrower
  // than the x-modulation to keep the band-edge tail below the tolerances
  std::uniform_real_distribution<double> ux(-xbox, xbox), uxi(-xibox, xibox),
      uwx(0.7, 0.95), uwxi(1.1, 1.4), uph(0, 2 * pi), um(-2.0, 2.0),
      umxi(-1.5, 1.5);
  struct Bump {
    PhasePoint c;
    double wx, wxi;
    cplx amp;
    RVec px, pxi;
  };
  std::vector<Bump> bumps(n_bumps);
  for (auto& b : bumps) {
    b.c.x.dim = b.c.xi.dim = b.px.dim = b.pxi.dim = dim;
    for (int i = 0; i < dim; ++i) {
      b.c.x.v[i] = ux(rng);
      b.c.xi.v[i] = uxi(rng);
      b.px.v[i] = um(rng);
      b.pxi.v[i] = umxi(rng);
    }
    b.wx = uwx(rng);
    b.wxi = uwxi(rng);
    b.amp = std::polar(1.0, uph(rng));
  }
  return Symbol::from_function(0.0, [bumps](const PhasePoint& X) -> cplx {
    cplx s = 0.0;
    for (const auto& b : bumps) {
      RVec dx = X.x - b.c.x, dxi = X.xi - b.c.xi;
      double q = dot(dx, dx) / (2 * b.wx * b.wx) + dot(dxi, dxi) / (2 * b.wxi * b.wxi);
      s += b.amp * std::exp(-q) * std::polar(1.0, dot(b.px, X.x) + dot(b.pxi, X.xi));
    }
    return s;
  });
}

// Real-valued variant (self-adjoint quantization).
inline Symbol random_real_schwartz_symbol(int dim, std::uint64_t seed, double xbox = 1.5,
                                          double xibox = 2.0) {
  Symbol c = random_schwartz_symbol(dim, seed, xbox, xibox);
  auto f = c.fn;
  return Symbol::from_function(0.0, [f](const PhasePoint& X) -> cplx {
    return std::real(f(X));
  });
}

// Tapered trigonometric polynomial: a bounded symbol of order 0 whose
// derivatives all decay like the taper (an S^0_{0,0}-type sample family).
inline Symbol tapered_trig_symbol(int dim, std::uint64_t seed, double inner = 3.0,
                                  double outer = 6.0, int n_modes = 4) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uf(-1.5, 1.5), uph(0, 2 * pi), ua(-1.0, 1.0);
  struct Mode {
    RVec kx, kxi;
    double amp, ph;
  };
  std::vector<Mode> modes(n_modes);
  for (auto& m : modes) {
    m.kx.dim = m.kxi.dim = dim;
    for (int i = 0; i < dim; ++i) {
      m.kx.v[i] = uf(rng);
      m.kxi.v[i] = uf(rng);
    }
    m.amp = ua(rng);
    m.ph = uph(rng);
  }
  return Symbol::from_function(
      0.0, [modes, dim, inner, outer](const PhasePoint& X) -> cplx {
        double t = 1.0;
        for (int i = 0; i < dim; ++i)
          t *= plateau_taper(X.x[i], inner, outer) * plateau_taper(X.xi[i], inner, outer);
        double s = 0.0;
        for (const auto& m : modes)
          s += m.amp * std::cos(dot(m.kx, X.x) + dot(m.kxi, X.xi) + m.ph);
        return t * s;
      });
}

// Random smooth L^2 field: a few modulated Gaussian bumps with centers well
// inside the box, so boundary mass stays below the frame tolerances.
inline SampledField random_smooth_field(const UniformGrid& g, std::uint64_t seed,
                                        double box = 2.0, double mom_max = 3.0,
                                        double wmin = 0.5, double wmax = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uc(-box, box), uph(0, 2 * pi), uw(wmin, wmax),
      um(-mom_max, mom_max);
  SampledField psi(g);
  for (int b = 0; b < 4; ++b) {
    RVec c;
    c.dim = g.dim;
    for (int i = 0; i < g.dim; ++i) c.v[i] = uc(rng);
    double wdt = uw(rng), mom = um(rng);
    cplx amp = std::polar(1.0, uph(rng));
    for (std::int64_t j = 0; j < g.size(); ++j) {
      RVec x = g.point(j);
      RVec dx = x - c;
      double ph = 0;
      for (int i = 0; i < g.dim; ++i) ph += mom * x[i];
      psi.v[j] += amp * std::exp(-dot(dx, dx) / (2 * wdt * wdt)) * std::polar(1.0, ph);
    }
  }
  return psi;
}

// Random Hilbert-Schmidt operator: kernel built from a few separable Gaussian
// wave packets with random phases; decays inside the grid box.
inline OperatorMatrix random_hs_operator(const UniformGrid& g, std::uint64_t seed,
                                         int n_terms = 5, double cbox = 2.0,
                                         double wlo = 0.6, double whi = 1.2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uc(-cbox, cbox), uw(wlo, whi), uph(0, 2 * pi),
      um(-2.0, 2.0);
  OperatorMatrix op(g);
  for (int t = 0; t < n_terms; ++t) {
    SampledField a(g), b(g);
    RVec ca, cb, ma, mb;
    ca.dim = cb.dim = ma.dim = mb.dim = g.dim;
    for (int i = 0; i < g.dim; ++i) {
      ca.v[i] = uc(rng);
      cb.v[i] = uc(rng);
      ma.v[i] = um(rng);
      mb.v[i] = um(rng);
    }
    double wa = uw(rng), wb = uw(rng);
    cplx amp = std::polar(1.0, uph(rng));
    for (std::int64_t j = 0; j < g.size(); ++j) {
      RVec x = g.point(j);
      RVec da = x - ca, db = x - cb;
      a.v[j] = amp * std::exp(-dot(da, da) / (2 * wa * wa)) * std::polar(1.0, dot(ma, x));
      b.v[j] = std::exp(-dot(db, db) / (2 * wb * wb)) * std::polar(1.0, dot(mb, x));
    }
    op.k += a.v * b.v.adjoint();
  }
  return op;
}

}  // namespace magframe
