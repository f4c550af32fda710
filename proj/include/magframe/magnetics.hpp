#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "magframe/grid.hpp"

namespace magframe {

// Real polynomial in d <= 2 variables, stored as a monomial list.
struct Poly {
  int dim = 1;
  struct Term {
    std::array<int, 2> pow{0, 0};
    double coef = 0.0;
  };
  std::vector<Term> terms;

  Poly() = default;
  explicit Poly(int d) : dim(d) {}

  static Poly constant(int d, double c) {
    Poly p(d);
    if (c != 0.0) p.terms.push_back({{0, 0}, c});
    return p;
  }

  void add_term(std::array<int, 2> pow, double coef) {
    if (coef == 0.0) return;
    for (size_t i = 0; i < terms.size(); ++i)
      if (terms[i].pow == pow) {
        terms[i].coef += coef;
        if (terms[i].coef == 0.0) terms.erase(terms.begin() + i);
        return;
      }
    terms.push_back({pow, coef});
  }

  double eval(const RVec& x) const {
    double s = 0;
    for (const auto& t : terms) {
      double m = t.coef;
      for (int i = 0; i < dim; ++i)
        for (int p = 0; p < t.pow[i]; ++p) m *= x[i];
      s += m;
    }
    return s;
  }

  Poly partial(int axis) const {
    Poly q(dim);
    for (const auto& t : terms)
      if (t.pow[axis] > 0) {
        auto pw = t.pow;
        pw[axis] -= 1;
        q.add_term(pw, t.coef * t.pow[axis]);
      }
    return q;
  }

  int degree() const {
    int d = 0;
    for (const auto& t : terms) d = std::max(d, t.pow[0] + t.pow[1]);
    return d;
  }

  Poly operator+(const Poly& o) const {
    Poly r = *this;
    for (const auto& t : o.terms) r.add_term(t.pow, t.coef);
    return r;
  }
  Poly operator-(const Poly& o) const {
    Poly r = *this;
    for (const auto& t : o.terms) r.add_term(t.pow, -t.coef);
    return r;
  }

  // Coefficients listed in graded lexicographic monomial order:
  // degree 0, then degree 1 (x1, x2), then degree 2 (x1^2, x1 x2, x2^2), ...
  static Poly from_graded_lex(int dim, const std::vector<double>& coeffs) {
    Poly p(dim);
    size_t idx = 0;
    for (int deg = 0; idx < coeffs.size(); ++deg) {
      if (deg > 16) throw std::invalid_argument("polynomial degree too high");
      if (dim == 1) {
        p.add_term({deg, 0}, coeffs[idx++]);
      } else {
        for (int p1 = deg; p1 >= 0 && idx < coeffs.size(); --p1)
          p.add_term({p1, deg - p1}, coeffs[idx++]);
      }
    }
    return p;
  }
};

struct GaugeFunction {
  Poly phi;
};

struct VectorPotential {
  int dim = 1;
  std::vector<Poly> comp;  // d component polynomials

  VectorPotential() = default;
  explicit VectorPotential(int d) : dim(d), comp(d, Poly(d)) {}

  static VectorPotential zero(int d) { return VectorPotential(d); }

  static VectorPotential constant(int d, const RVec& a) {
    VectorPotential A(d);
    for (int i = 0; i < d; ++i) A.comp[i] = Poly::constant(d, a[i]);
    return A;
  }

  // d=2 symmetric gauge for a constant field b: A = (-b x2 / 2, b x1 / 2).
  static VectorPotential symmetric_gauge(double b) {
    VectorPotential A(2);
    A.comp[0].add_term({0, 1}, -b / 2);
    A.comp[1].add_term({1, 0}, b / 2);
    return A;
  }

  int degree() const {
    int d = 0;
    for (const auto& p : comp) d = std::max(d, p.degree());
    return d;
  }
  bool is_zero() const {
    for (const auto& p : comp)
      if (!p.terms.empty()) return false;
    return true;
  }
};

struct MagneticField {
  int dim = 1;
  // B[j][k] = d_j A_k - d_k A_j
  std::array<std::array<Poly, 2>, 2> b;
};

inline MagneticField field_from_potential(const VectorPotential& A) {
  MagneticField B;
  B.dim = A.dim;
  for (int j = 0; j < A.dim; ++j)
    for (int k = 0; k < A.dim; ++k)
      B.b[j][k] = A.comp[k].partial(j) - A.comp[j].partial(k);
  return B;
}

inline VectorPotential gauge_shift(const VectorPotential& A, const GaugeFunction& phi) {
  VectorPotential r = A;
  for (int i = 0; i < A.dim; ++i) r.comp[i] = r.comp[i] + phi.phi.partial(i);
  return r;
}

namespace detail {

// Gauss-Legendre nodes/weights on [0, 1], exact for degree <= 2n-1.
inline void gauss_legendre_unit(int n, std::vector<double>& x, std::vector<double>& w) {
  // Nodes on [-1,1] by Newton iteration on Legendre polynomials.
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      if (n == 1) p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[i] = 0.5 * (t + 1.0);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);  // = 2/((1-t^2) P_n'(t)^2) / 2
  }
}

}  // namespace detail

// Line integral \int_0^1 A(x + s(y-x)) . (y-x) ds, exact for polynomial A.
inline double line_integral(const VectorPotential& A, const RVec& x, const RVec& y) {
  if (A.is_zero()) return 0.0;
  int n = (A.degree() + 2) / 2 + 1;  // ceil((D+1)/2) + 1, exact for degree D
  thread_local std::vector<std::pair<std::vector<double>, std::vector<double>>> cache;
  if (static_cast<int>(cache.size()) <= n) cache.resize(n + 1);
  if (cache[n].first.empty())
    detail::gauss_legendre_unit(n, cache[n].first, cache[n].second);
  const std::vector<double>&gs = cache[n].first, &gw = cache[n].second;
  RVec dxy = y - x;
  double s = 0;
  for (int q = 0; q < n; ++q) {
    RVec p = x + gs[q] * dxy;
    double integrand = 0;
    for (int i = 0; i < A.dim; ++i) integrand += A.comp[i].eval(p) * dxy[i];
    s += gw[q] * integrand;
  }
  return s;
}

// Lambda^A(x, y) = exp(-i \int_{[x,y]} A); unit modulus by construction.
inline cplx circulation(const VectorPotential& A, const RVec& x, const RVec& y) {
  return std::polar(1.0, -line_integral(A, x, y));
}

}  // namespace magframe
