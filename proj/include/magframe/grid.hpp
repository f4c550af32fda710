#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace magframe {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// Small dimension-generic vectors (d = 1 or 2).
struct RVec {
  int dim = 1;
  std::array<double, 2> v{0.0, 0.0};

  RVec() = default;
  explicit RVec(double x) : dim(1), v{x, 0.0} {}
  RVec(double x, double y) : dim(2), v{x, y} {}
  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }
};

struct MultiIndex {
  int dim = 1;
  std::array<int, 2> v{0, 0};

  MultiIndex() = default;
  explicit MultiIndex(int a) : dim(1), v{a, 0} {}
  MultiIndex(int a, int b) : dim(2), v{a, b} {}
  int& operator[](int i) { return v[i]; }
  int operator[](int i) const { return v[i]; }
  int abs_max() const {
    int m = 0;
    for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(v[i]));
    return m;
  }
  int order() const {  // |a| = sum of entries (for derivative multi-indices)
    int s = 0;
    for (int i = 0; i < dim; ++i) s += v[i];
    return s;
  }
  bool operator==(const MultiIndex& o) const {
    return dim == o.dim && v == o.v;
  }
};

inline double dot(const RVec& a, const RVec& b) {
  if (a.dim != b.dim) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0;
  for (int i = 0; i < a.dim; ++i) s += a.v[i] * b.v[i];
  return s;
}

inline RVec operator+(const RVec& a, const RVec& b) {
  RVec r = a;
  for (int i = 0; i < a.dim; ++i) r.v[i] += b.v[i];
  return r;
}
inline RVec operator-(const RVec& a, const RVec& b) {
  RVec r = a;
  for (int i = 0; i < a.dim; ++i) r.v[i] -= b.v[i];
  return r;
}
inline RVec operator*(double c, const RVec& a) {
  RVec r = a;
  for (int i = 0; i < a.dim; ++i) r.v[i] *= c;
  return r;
}

inline double japanese_bracket(const RVec& v) {
  return std::sqrt(1.0 + dot(v, v));
}

struct PhasePoint {
  RVec x;   // position
  RVec xi;  // momentum
};

inline double symplectic_form(const PhasePoint& X, const PhasePoint& Y) {
  // sigma(X,Y) = xi.y - x.eta
  return dot(X.xi, Y.x) - dot(X.x, Y.xi);
}

inline double double_symplectic_form(const PhasePoint& XL, const PhasePoint& XR,
                                     const PhasePoint& YL, const PhasePoint& YR) {
  return symplectic_form(XL, YL) + symplectic_form(XR, YR);
}

// Uniform centered grid: x_j = -L + j*h, j = 0..M-1, h = 2L/M.
struct UniformGrid {
  int dim = 1;
  double half_width = 1.0;  // L
  int points = 2;           // M per axis, even

  UniformGrid() = default;
  UniformGrid(int d, double L, int M) : dim(d), half_width(L), points(M) {
    if (d < 1 || d > 2) throw std::invalid_argument("grid: dim must be 1 or 2");
    if (M < 2 || M % 2 != 0) throw std::invalid_argument("grid: M must be even and >= 2");
    if (L <= 0) throw std::invalid_argument("grid: half-width must be positive");
  }

  double step() const { return 2.0 * half_width / points; }
  double coord(int j) const { return -half_width + j * step(); }
  std::int64_t size() const {
    std::int64_t s = 1;
    for (int i = 0; i < dim; ++i) s *= points;
    return s;
  }
  double weight() const { return std::pow(step(), dim); }  // quadrature weight h^d

  RVec point(std::int64_t flat) const {
    RVec r;
    r.dim = dim;
    for (int i = dim - 1; i >= 0; --i) {
      r.v[i] = coord(static_cast<int>(flat % points));
      flat /= points;
    }
    return r;
  }
  std::int64_t flatten(const MultiIndex& j) const {
    std::int64_t f = 0;
    for (int i = 0; i < dim; ++i) f = f * points + j[i];
    return f;
  }
  bool operator==(const UniformGrid& o) const {
    return dim == o.dim && half_width == o.half_width && points == o.points;
  }
};

// Position grid plus its exact FFT-dual momentum grid:
// xi_k = (k - M/2) * hxi with hxi = 2*pi/(M*h), so h*hxi*M = 2*pi exactly.
struct PhaseSpaceGrid {
  UniformGrid pos;
  UniformGrid mom;

  PhaseSpaceGrid() = default;
  explicit PhaseSpaceGrid(const UniformGrid& p)
      : pos(p), mom(p.dim, pi / p.step() * 1.0, p.points) {
    // mom half-width = (M/2)*hxi = pi/h
  }

  double mom_step() const { return mom.step(); }
  std::int64_t size() const { return pos.size() * mom.size(); }
  double weight() const { return pos.weight() * mom.weight(); }  // (h*hxi)^d

  // flat index = pos-flat * mom.size() + mom-flat (position-major)
  PhasePoint point(std::int64_t flat) const {
    PhasePoint X;
    X.xi = mom.point(flat % mom.size());
    X.x = pos.point(flat / mom.size());
    return X;
  }
  bool operator==(const PhaseSpaceGrid& o) const { return pos == o.pos; }
};

// Complex samples on a configuration-space grid.
struct SampledField {
  UniformGrid grid;
  Eigen::VectorXcd v;

  SampledField() = default;
  explicit SampledField(const UniformGrid& g) : grid(g), v(Eigen::VectorXcd::Zero(g.size())) {}

  double norm() const { return v.norm() * std::sqrt(grid.weight()); }
  cplx inner(const SampledField& o) const {  // conjugate-linear in *this*
    if (!(grid == o.grid)) throw std::invalid_argument("inner: grid mismatch");
    return v.dot(o.v) * grid.weight();
  }
};

// Complex samples on a phase-space grid (position-major flattening).
struct PhaseField {
  PhaseSpaceGrid grid;
  Eigen::VectorXcd v;

  PhaseField() = default;
  explicit PhaseField(const PhaseSpaceGrid& g) : grid(g), v(Eigen::VectorXcd::Zero(g.size())) {}

  double norm() const { return v.norm() * std::sqrt(grid.weight()); }
  cplx inner(const PhaseField& o) const {
    if (!(grid == o.grid)) throw std::invalid_argument("inner: grid mismatch");
    return v.dot(o.v) * grid.weight();
  }
};

// Samples of F(X_L, X_R) on grid x grid; flat index = XL-flat * N + XR-flat.
struct DoublePhaseField {
  PhaseSpaceGrid grid;
  Eigen::VectorXcd v;

  DoublePhaseField() = default;
  explicit DoublePhaseField(const PhaseSpaceGrid& g)
      : grid(g), v(Eigen::VectorXcd::Zero(g.size() * g.size())) {}

  double norm() const { return v.norm() * grid.weight(); }  // weight^2 under sqrt
};

}  // namespace magframe
