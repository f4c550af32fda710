#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "magframe/fourier.hpp"
#include "magframe/magnetics.hpp"
#include "magframe/parallel.hpp"

namespace magframe {

// Kernel circulation phase e^{+i \int_{[x,y]} A}. The sign is pinned by the
// gauge-covariance property quantize(A + grad phi) = U_phi op U_phi^dagger
// with (U_phi psi)(x) = e^{-i phi(x)} psi(x), which is test-enforced.
inline cplx kernel_phase(const VectorPotential& A, const RVec& x, const RVec& y) {
  return circulation(A, y, x);
}

// Phase-space symbol: declared order m and type (rho, 0), plus either a point
// evaluator or fine-grid samples (the latter arise from dequantization and
// product recompression).
struct Symbol {
  double order = 0.0;
  double rho = 1.0;
  std::function<cplx(const PhasePoint&)> fn;
  std::shared_ptr<PhaseField> samples;

  Symbol() = default;

  static Symbol from_function(double m, std::function<cplx(const PhasePoint&)> f,
                              double rho = 1.0) {
    Symbol s;
    s.order = m;
    s.rho = rho;
    s.fn = std::move(f);
    return s;
  }
  static Symbol from_samples(double m, PhaseField s, double rho = 1.0) {
    Symbol r;
    r.order = m;
    r.rho = rho;
    r.samples = std::make_shared<PhaseField>(std::move(s));
    return r;
  }

  bool sampled() const { return samples != nullptr; }

  cplx eval(const PhasePoint& X) const {
    if (!fn) throw std::logic_error("symbol: no point evaluator");
    return fn(X);
  }
};

// Samples of a symbol on a phase-space grid (grid lookup for sampled symbols).
inline PhaseField sample_symbol(const Symbol& f, const PhaseSpaceGrid& grid) {
  if (f.sampled()) {
    if (!(f.samples->grid == grid))
      throw std::invalid_argument("sample_symbol: grid mismatch");
    return *f.samples;
  }
  PhaseField out(grid);
  for (std::int64_t i = 0; i < grid.size(); ++i) out.v[i] = f.fn(grid.point(i));
  return out;
}

// Dense integral kernel K(x, y) on grid^2 with quadrature weight h^d:
// (op psi)(x) = h^d sum_y K(x,y) psi(y).
struct OperatorMatrix {
  UniformGrid grid;
  Eigen::MatrixXcd k;

  OperatorMatrix() = default;
  explicit OperatorMatrix(const UniformGrid& g)
      : grid(g), k(Eigen::MatrixXcd::Zero(g.size(), g.size())) {}

  static OperatorMatrix identity(const UniformGrid& g) {
    OperatorMatrix op(g);
    op.k.diagonal().setConstant(1.0 / g.weight());
    return op;
  }

  OperatorMatrix adjoint() const {
    OperatorMatrix r(grid);
    r.k = k.adjoint();
    return r;
  }

  SampledField apply(const SampledField& psi) const {
    if (!(psi.grid == grid)) throw std::invalid_argument("apply: grid mismatch");
    SampledField out(grid);
    out.v = grid.weight() * (k * psi.v);
    return out;
  }
};

// |phi><psi|: K(x,y) = phi(x) conj(psi(y)).
inline OperatorMatrix rank_one(const SampledField& phi, const SampledField& psi) {
  if (!(phi.grid == psi.grid)) throw std::invalid_argument("rank_one: grid mismatch");
  OperatorMatrix op(phi.grid);
  op.k = phi.v * psi.v.adjoint();
  return op;
}

inline double hs_norm(const OperatorMatrix& op) {
  return op.k.norm() * op.grid.weight();
}

inline cplx hs_inner(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("hs_inner: grid mismatch");
  double w = a.grid.weight();
  return (a.k.conjugate().cwiseProduct(b.k)).sum() * w * w;
}

inline OperatorMatrix op_compose(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("op_compose: grid mismatch");
  OperatorMatrix r(a.grid);
  r.k.noalias() = a.grid.weight() * (a.k * b.k);
  return r;
}

// (w^A(x0, xi0) psi)(y) = e^{+i int_{[y, y+x0]} A} e^{-i xi0.(y + x0/2)} psi(y + x0),
// with the off-grid translation realized by Fourier interpolation.
inline SampledField weyl_system_apply(const VectorPotential& A, const PhasePoint& X,
                                      const SampledField& psi) {
  const UniformGrid& g = psi.grid;
  if (X.x.dim != g.dim || X.xi.dim != g.dim)
    throw std::invalid_argument("weyl_system_apply: dimension mismatch");
  for (int i = 0; i < g.dim; ++i)
    if (std::abs(X.x[i]) > g.half_width)
      throw std::invalid_argument("weyl_system_apply: translation exceeds grid support");
  SampledField out = psi;
  std::vector<int> dims(g.dim, g.points);
  for (int ax = 0; ax < g.dim; ++ax)
    if (X.x[ax] != 0.0)
      spectral_shift_axis(out.v.data(), dims, ax, g.step(), X.x[ax]);
  RVec half = 0.5 * X.x;
  for (std::int64_t j = 0; j < g.size(); ++j) {
    RVec y = g.point(j);
    double ang = line_integral(A, y, y + X.x) - dot(X.xi, y + half);
    out.v[j] *= std::polar(1.0, ang);
  }
  return out;
}

// op^A(f): midpoint kernel K(x,y) = (2pi)^{-d} e^{+i int_{[x,y]} A}
// \int dxi e^{i xi.(x-y)} f((x+y)/2, xi), one FFT per midpoint line.
inline OperatorMatrix quantize(const VectorPotential& A, const Symbol& f,
                               const UniformGrid& grid) {
  const int d = grid.dim, M = grid.points;
  if (A.dim != d) throw std::invalid_argument("quantize: potential dimension mismatch");
  PhaseSpaceGrid pg(grid);
  const double h = grid.step();
  const std::int64_t Q = pg.mom.size();
  OperatorMatrix op(grid);

  // Sampled symbols: f at the 2^d half-step-shifted position lattices by
  // spectral interpolation (parity p bit i <-> position axis i shifted +h/2).
  const int npar = 1 << d;
  std::vector<Eigen::VectorXcd> par;
  if (f.sampled()) {
    if (!(f.samples->grid.pos == grid))
      throw std::invalid_argument("quantize: sampled symbol grid mismatch");
    par.assign(npar, f.samples->v);
    std::vector<int> dims(2 * d, M);
    for (int p = 1; p < npar; ++p)
      for (int ax = 0; ax < d; ++ax)
        if (p & (1 << ax)) spectral_shift_axis(par[p].data(), dims, ax, h, 0.5 * h);
  }

  const double pref = std::pow(2 * pi, -d);
  const double hxid = std::pow(pg.mom_step(), d);
  std::vector<int> mom_dims(d, M);
  std::vector<cplx> G(Q);
  const int S = 2 * M - 1;
  const std::int64_t n_s = (d == 1) ? S : static_cast<std::int64_t>(S) * S;

  for (std::int64_t sf = 0; sf < n_s; ++sf) {
    const int s1 = (d == 1) ? static_cast<int>(sf) : static_cast<int>(sf / S);
    const int s2 = (d == 1) ? 0 : static_cast<int>(sf % S);

    // momentum line f(u_s, xi_.) at the midpoint u_s = -L + s h/2
    if (f.sampled()) {
      int p = (s1 & 1) | ((d == 2 && (s2 & 1)) ? 2 : 0);
      std::int64_t j = (d == 1) ? (s1 >> 1)
                                : static_cast<std::int64_t>(s1 >> 1) * M + (s2 >> 1);
      for (std::int64_t q = 0; q < Q; ++q) G[q] = par[p][j * Q + q];
    } else {
      RVec u;
      u.dim = d;
      u.v[0] = -grid.half_width + s1 * 0.5 * h;
      if (d == 2) u.v[1] = -grid.half_width + s2 * 0.5 * h;
      for (std::int64_t q = 0; q < Q; ++q) G[q] = f.fn(PhasePoint{u, pg.mom.point(q)});
    }

    // xi_k = (k - M/2) hxi makes e^{i xi_k m h} = (-1)^m e^{2 pi i k m / M}:
    // an unnormalized backward FFT plus the alternating-sign factor.
    for (int ax = 0; ax < d; ++ax) fft_axis(G.data(), mom_dims, ax, FFTW_BACKWARD);
    for (std::int64_t q = 0; q < Q; ++q) {
      int parsum = (d == 1) ? static_cast<int>(q)
                            : static_cast<int>(q / M) + static_cast<int>(q % M);
      G[q] *= (parsum & 1) ? -hxid : hxid;
    }

    // scatter onto the anti-diagonal i + j = s (per axis), keeping only the
    // principal period |i - j| < M/2: beyond it the FFT construction wraps in
    // periodic images of the near-diagonal, which do not belong to the
    // (decaying) operator kernel and would distort HS norms.
    int i1lo = std::max(0, s1 - M + 1), i1hi = std::min(M - 1, s1);
    int i2lo = std::max(0, s2 - M + 1), i2hi = std::min(M - 1, s2);
    if (d == 1) i2lo = i2hi = 0;
    for (int i1 = i1lo; i1 <= i1hi; ++i1) {
      if (std::abs(2 * i1 - s1) * 2 >= M) continue;
      for (int i2 = i2lo; i2 <= i2hi; ++i2) {
        if (d == 2 && std::abs(2 * i2 - s2) * 2 >= M) continue;
        int j1 = s1 - i1, j2 = s2 - i2;
        std::int64_t ifl = (d == 1) ? i1 : static_cast<std::int64_t>(i1) * M + i2;
        std::int64_t jfl = (d == 1) ? j1 : static_cast<std::int64_t>(j1) * M + j2;
        int r1 = ((i1 - j1) % M + M) % M, r2 = ((i2 - j2) % M + M) % M;
        std::int64_t r = (d == 1) ? r1 : static_cast<std::int64_t>(r1) * M + r2;
        op.k(ifl, jfl) =
            pref * kernel_phase(A, grid.point(ifl), grid.point(jfl)) * G[r];
      }
    }
  }
  return op;
}

// Magnetic Wigner transform f(u, xi) = \int dz e^{-i xi.z}
// conj(Lambda_ker(u+z/2, u-z/2)) K(u+z/2, u-z/2), evaluated on the phase grid.
// The z-lattice per output point has step 2h, so each of the 2^d midpoint
// parity sectors sees the alias f(xi) + f(xi + pi/h); the sectors are shifted
// back to the grid spectrally and averaged, which cancels the alias exactly.
inline PhaseField dequantize(const VectorPotential& A, const OperatorMatrix& op) {
  const int d = op.grid.dim, M = op.grid.points;
  if (A.dim != d) throw std::invalid_argument("dequantize: potential dimension mismatch");
  const UniformGrid& g = op.grid;
  PhaseSpaceGrid pg(g);
  const double h = g.step();
  const std::int64_t P = g.size(), Q = pg.mom.size();
  std::vector<int> mom_dims(d, M);
  std::vector<int> full_dims(2 * d, M);

  PhaseField out(pg);
  Eigen::VectorXcd W(P * Q);
  std::vector<cplx> D(Q);
  const int npar = 1 << d;
  for (int p = 0; p < npar; ++p) {
    const int p1 = p & 1, p2 = (p >> 1) & 1;
    double scale = std::pow(2.0 * h, d) * (((p1 + p2 * (d == 2)) & 1) ? -1.0 : 1.0);
    for (std::int64_t ifl = 0; ifl < P; ++ifl) {
      const int i1 = (d == 1) ? static_cast<int>(ifl) : static_cast<int>(ifl / M);
      const int i2 = (d == 1) ? 0 : static_cast<int>(ifl % M);
      std::fill(D.begin(), D.end(), cplx(0.0, 0.0));
      int s1 = 2 * i1 + p1, s2 = 2 * i2 + (d == 2 ? p2 : 0);
      int a1lo = std::max(0, s1 - M + 1), a1hi = std::min(M - 1, s1);
      int a2lo = std::max(0, s2 - M + 1), a2hi = std::min(M - 1, s2);
      if (d == 1) a2lo = a2hi = 0;
      // one z-period per axis, |m| < M/2, matching the band kept by quantize
      for (int a1 = a1lo; a1 <= a1hi; ++a1) {
        int m1 = 2 * a1 - s1;
        if (std::abs(m1) * 2 >= M) continue;
        for (int a2 = a2lo; a2 <= a2hi; ++a2) {
          int m2 = 2 * a2 - s2;
          if (d == 2 && std::abs(m2) * 2 >= M) continue;
          int b1 = s1 - a1, b2 = s2 - a2;
          std::int64_t afl = (d == 1) ? a1 : static_cast<std::int64_t>(a1) * M + a2;
          std::int64_t bfl = (d == 1) ? b1 : static_cast<std::int64_t>(b1) * M + b2;
          int r1 = (m1 + M) % M, r2 = ((d == 1) ? 0 : (m2 + M)) % M;
          std::int64_t r = (d == 1) ? r1 : static_cast<std::int64_t>(r1) * M + r2;
          D[r] += std::conj(kernel_phase(A, g.point(afl), g.point(bfl))) * op.k(afl, bfl);
        }
      }
      for (int ax = 0; ax < d; ++ax) fft_axis(D.data(), mom_dims, ax, FFTW_FORWARD);
      for (std::int64_t q = 0; q < Q; ++q) W[ifl * Q + q] = scale * D[q];
    }
    // odd sectors live at u = x + h/2; move them back onto the grid
    for (int ax = 0; ax < d; ++ax)
      if (p & (1 << ax)) spectral_shift_axis(W.data(), full_dims, ax, h, -0.5 * h);
    out.v += W;
  }
  out.v *= std::pow(2.0, -d);
  return out;
}

// --- Hörmander seminorm estimation (4th-order centered finite differences) ---

namespace detail {

struct FdStencil {
  int halfw;
  std::array<double, 7> c;
};

inline FdStencil fd_stencil(int n) {
  switch (n) {
    case 0: return {0, {1.0}};
    case 1: return {2, {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12}};
    case 2: return {2, {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12}};
    case 3: return {3, {1.0 / 8, -8.0 / 8, 13.0 / 8, 0.0, -13.0 / 8, 8.0 / 8, -1.0 / 8}};
    case 4: return {3, {-1.0 / 6, 12.0 / 6, -39.0 / 6, 56.0 / 6, -39.0 / 6, 12.0 / 6, -1.0 / 6}};
    default: throw std::invalid_argument("finite-difference order above 4");
  }
}

}  // namespace detail

// Estimated seminorm sup_X <xi>^{-m + rho|alpha|} |d_x^a d_xi^alpha f(X)|,
// derivatives by centered 4th-order finite differences on the grid scale.
inline double seminorm_estimate(const Symbol& f, const PhaseSpaceGrid& grid,
                                const MultiIndex& a, const MultiIndex& alpha) {
  const int d = grid.pos.dim;
  if (a.dim != d || alpha.dim != d)
    throw std::invalid_argument("seminorm_estimate: multi-index dimension mismatch");
  if (a.order() + alpha.order() > 4)
    throw std::invalid_argument("seminorm_estimate: derivative order above 4");
  const double h = grid.pos.step(), hxi = grid.mom_step();

  struct Axis {
    detail::FdStencil st;
    double step;
    bool is_pos;
    int axis;
    double denom;
  };
  std::vector<Axis> axes;
  for (int i = 0; i < d; ++i)
    if (a[i] > 0)
      axes.push_back({detail::fd_stencil(a[i]), h, true, i, std::pow(h, a[i])});
  for (int i = 0; i < d; ++i)
    if (alpha[i] > 0)
      axes.push_back({detail::fd_stencil(alpha[i]), hxi, false, i, std::pow(hxi, alpha[i])});

  const double expo = f.rho * alpha.order() - f.order;
  const int stride = (d == 1) ? 1 : 2;
  const int M = grid.pos.points;
  const int margin = f.sampled() ? 3 : 0;

  double denom = 1.0;
  for (const auto& ax : axes) denom *= ax.denom;

  // weighted |FD derivative| at a continuous phase point (evaluator path)
  auto weighted_fd_at = [&](const PhasePoint& X0) -> double {
    std::array<double, 4> off{0, 0, 0, 0};
    std::function<cplx(size_t)> contract = [&](size_t t) -> cplx {
      if (t == axes.size()) {
        PhasePoint X = X0;
        for (size_t u = 0; u < axes.size(); ++u) {
          if (axes[u].is_pos)
            X.x.v[axes[u].axis] += off[u];
          else
            X.xi.v[axes[u].axis] += off[u];
        }
        return f.fn(X);
      }
      cplx s = 0.0;
      for (int o = -axes[t].st.halfw; o <= axes[t].st.halfw; ++o) {
        double c = axes[t].st.c[o + axes[t].st.halfw];
        if (c == 0.0) continue;
        off[t] = o * axes[t].step;
        s += c * contract(t + 1);
      }
      off[t] = 0;
      return s;
    };
    return std::abs(contract(0)) / denom * std::pow(japanese_bracket(X0.xi), expo);
  };

  // lattice-index FD value for sampled symbols
  auto lattice_fd_at = [&](const std::array<int, 2>& pj,
                           const std::array<int, 2>& mj) -> double {
    std::array<int, 4> off{0, 0, 0, 0};
    std::function<cplx(size_t)> contract = [&](size_t t) -> cplx {
      if (t == axes.size()) {
        std::array<int, 2> pi = pj, mi = mj;
        for (size_t u = 0; u < axes.size(); ++u) {
          if (axes[u].is_pos)
            pi[axes[u].axis] += off[u];
          else
            mi[axes[u].axis] += off[u];
        }
        std::int64_t pf = 0, mf = 0;
        for (int i = 0; i < d; ++i) {
          pf = pf * M + pi[i];
          mf = mf * M + mi[i];
        }
        return f.samples->v[pf * grid.mom.size() + mf];
      }
      cplx s = 0.0;
      for (int o = -axes[t].st.halfw; o <= axes[t].st.halfw; ++o) {
        double c = axes[t].st.c[o + axes[t].st.halfw];
        if (c == 0.0) continue;
        off[t] = o;
        s += c * contract(t + 1);
      }
      off[t] = 0;
      return s;
    };
    RVec xi;
    xi.dim = d;
    for (int i = 0; i < d; ++i) xi.v[i] = grid.mom.coord(mj[i]);
    return std::abs(contract(0)) / denom * std::pow(japanese_bracket(xi), expo);
  };

  double sup = 0.0;
  std::array<int, 2> pj{0, 0}, mj{0, 0};
  PhasePoint best;
  best.x.dim = best.xi.dim = d;
  auto scan = [&](auto&& self, int axis_i) -> void {
    if (axis_i == 2 * d) {
      double v;
      if (f.sampled()) {
        v = lattice_fd_at(pj, mj);
      } else {
        PhasePoint X;
        X.x.dim = X.xi.dim = d;
        for (int i = 0; i < d; ++i) {
          X.x.v[i] = grid.pos.coord(pj[i]);
          X.xi.v[i] = grid.mom.coord(mj[i]);
        }
        v = weighted_fd_at(X);
        if (v > sup) best = X;
      }
      if (v > sup) sup = v;
      return;
    }
    bool pos = axis_i < d;
    int idx = pos ? axis_i : axis_i - d;
    for (int j = margin; j < M - margin; j += stride) {
      (pos ? pj : mj)[idx] = j;
      self(self, axis_i + 1);
    }
  };
  scan(scan, 0);

  // The grid sup undershoots by O(step^2) when the max falls between points;
  // for evaluator symbols, refine locally by coordinate-wise parabola ascent.
  if (!f.sampled() && sup > 0.0) {
    double dx = grid.pos.step(), dxi = grid.mom_step();
    PhasePoint X = best;
    for (int round = 0; round < 6; ++round) {
      for (int c = 0; c < 2 * d; ++c) {
        bool pos = c < d;
        int idx = pos ? c : c - d;
        double& coord = pos ? X.x.v[idx] : X.xi.v[idx];
        double delta = (pos ? dx : dxi) / (2 << round);
        double v0 = weighted_fd_at(X);
        double save = coord;
        coord = save - delta;
        double vm = weighted_fd_at(X);
        coord = save + delta;
        double vp = weighted_fd_at(X);
        double curv = vm - 2 * v0 + vp;
        double t = (curv < 0.0) ? 0.5 * (vm - vp) / curv : 0.0;
        if (t < -1.0) t = -1.0;
        if (t > 1.0) t = 1.0;
        coord = save + t * delta;
        double vr = weighted_fd_at(X);
        if (vr < v0) coord = save;
        if (vr > sup) sup = vr;
      }
    }
  }
  return sup;
}

struct HoermanderReport {
  double order = 0.0;
  struct Entry {
    MultiIndex a, alpha;
    double value;
  };
  std::vector<Entry> entries;
};

inline HoermanderReport hoermander_report(const Symbol& f, const PhaseSpaceGrid& grid,
                                          int max_total_order) {
  HoermanderReport rep;
  rep.order = f.order;
  const int d = grid.pos.dim;
  auto each = [&](const MultiIndex& a, const MultiIndex& alpha) {
    rep.entries.push_back({a, alpha, seminorm_estimate(f, grid, a, alpha)});
  };
  if (d == 1) {
    for (int a = 0; a <= max_total_order; ++a)
      for (int al = 0; a + al <= max_total_order; ++al)
        each(MultiIndex(a), MultiIndex(al));
  } else {
    for (int a1 = 0; a1 <= max_total_order; ++a1)
      for (int a2 = 0; a1 + a2 <= max_total_order; ++a2)
        for (int l1 = 0; a1 + a2 + l1 <= max_total_order; ++l1)
          for (int l2 = 0; a1 + a2 + l1 + l2 <= max_total_order; ++l2)
            each(MultiIndex(a1, a2), MultiIndex(l1, l2));
  }
  return rep;
}

}  // namespace magframe
