#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "magframe/grid.hpp"
#include "magframe/magnetics.hpp"
#include "magframe/window.hpp"

namespace magframe {

// Frame label: lattice point alpha in Z^d and integer modulation k
// (the dual-lattice point is 2*pi*k).
struct FrameId {
  MultiIndex alpha;
  MultiIndex k;
};

struct FrameCoefficients;

// Truncated magnetic Gabor frame: |alpha|_inf <= N, |k|_inf <= K.
struct FrameSpec {
  UniformGrid grid;
  Window window;
  int N = 7;
  int K = 16;
  VectorPotential A;

  FrameSpec() = default;
  FrameSpec(const UniformGrid& g, int N_, int K_, const VectorPotential& A_)
      : grid(g), window(g.dim), N(N_), K(K_), A(A_), cache_(std::make_shared<Cache>()) {
    if (A.dim != g.dim) throw std::invalid_argument("frame: potential dimension mismatch");
    if (g.half_width < N + 1)
      throw std::invalid_argument("frame: grid half-width must be >= N + 1");
    if (2.0 * K >= g.points * pi / g.half_width)
      throw std::invalid_argument("frame: modulations not resolvable (2K >= M pi / L)");
  }

  int per_axis_alpha() const { return 2 * N + 1; }
  int per_axis_k() const { return 2 * K + 1; }
  std::int64_t n_alpha() const {
    std::int64_t n = 1;
    for (int i = 0; i < grid.dim; ++i) n *= per_axis_alpha();
    return n;
  }
  std::int64_t n_k() const {
    std::int64_t n = 1;
    for (int i = 0; i < grid.dim; ++i) n *= per_axis_k();
    return n;
  }
  std::int64_t n_ids() const { return n_alpha() * n_k(); }

  bool contains(const FrameId& id) const {
    return id.alpha.dim == grid.dim && id.k.dim == grid.dim &&
           id.alpha.abs_max() <= N && id.k.abs_max() <= K;
  }

  // Flat ordering: alpha row-major (each axis -N..N), then k row-major.
  std::int64_t flat(const FrameId& id) const {
    if (!contains(id)) throw std::out_of_range("frame id outside truncation box");
    std::int64_t a = 0, kk = 0;
    for (int i = 0; i < grid.dim; ++i) {
      a = a * per_axis_alpha() + (id.alpha[i] + N);
      kk = kk * per_axis_k() + (id.k[i] + K);
    }
    return a * n_k() + kk;
  }
  FrameId id_from_flat(std::int64_t f) const {
    std::int64_t kk = f % n_k(), a = f / n_k();
    FrameId id;
    id.alpha.dim = id.k.dim = grid.dim;
    for (int i = grid.dim - 1; i >= 0; --i) {
      id.k[i] = static_cast<int>(kk % per_axis_k()) - K;
      kk /= per_axis_k();
      id.alpha[i] = static_cast<int>(a % per_axis_alpha()) - N;
      a /= per_axis_alpha();
    }
    return id;
  }

  // Full frame matrix (grid size x n_ids), column id = frame vector samples.
  // Built lazily; shared between copies of the spec.
  const Eigen::MatrixXcd& frame_matrix() const;

 private:
  struct Cache {
    std::mutex mu;
    Eigen::MatrixXcd G;
    bool built = false;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

struct FrameCoefficients {
  std::shared_ptr<const FrameSpec> spec;
  Eigen::VectorXcd c;          // indexed by FrameSpec::flat
  bool truncation_warning = false;
  double outside_mass = 0.0;   // relative mass of the input outside the safe box

  double norm() const { return c.norm(); }
};

inline SampledField frame_vector(const FrameSpec& spec, const FrameId& id) {
  if (!spec.contains(id)) throw std::out_of_range("frame id outside truncation box");
  const UniformGrid& g = spec.grid;
  SampledField out(g);
  RVec alpha;
  alpha.dim = g.dim;
  for (int i = 0; i < g.dim; ++i) alpha.v[i] = id.alpha[i];
  double amp = std::pow(2.0 * pi, -0.5 * g.dim);
  for (std::int64_t j = 0; j < g.size(); ++j) {
    RVec x = g.point(j);
    double chi = spec.window.eval(x - alpha);
    if (chi == 0.0) continue;
    double phase = 0;
    for (int i = 0; i < g.dim; ++i) phase += id.k[i] * (x[i] - alpha[i]);
    out.v[j] = amp * chi * circulation(spec.A, x, alpha) * std::polar(1.0, phase);
  }
  return out;
}

inline const Eigen::MatrixXcd& FrameSpec::frame_matrix() const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  if (!cache_->built) {
    cache_->G.resize(grid.size(), n_ids());
    for (std::int64_t f = 0; f < n_ids(); ++f)
      cache_->G.col(f) = frame_vector(*this, id_from_flat(f)).v;
    cache_->built = true;
  }
  return cache_->G;
}

namespace detail {

// Per-alpha window support data shared by analyze/synthesize: the list of grid
// indices per axis where chi(x - alpha) != 0, with the window and phase values.
struct WindowPatch {
  std::array<std::vector<int>, 2> idx;        // grid indices per axis
  std::array<std::vector<double>, 2> chi1d;   // profile values per axis
  std::array<std::vector<double>, 2> rel;     // x - alpha per axis
};

inline WindowPatch window_patch(const FrameSpec& spec, const MultiIndex& alpha) {
  WindowPatch p;
  const UniformGrid& g = spec.grid;
  for (int ax = 0; ax < g.dim; ++ax) {
    double a = alpha[ax];
    int lo = static_cast<int>(std::ceil((a - 1.0 + g.half_width) / g.step()));
    int hi = static_cast<int>(std::floor((a + 1.0 + g.half_width) / g.step()));
    lo = std::max(lo, 0);
    hi = std::min(hi, g.points - 1);
    for (int j = lo; j <= hi; ++j) {
      double t = g.coord(j) - a;
      double w = spec.window.profile(t);
      if (w == 0.0) continue;
      p.idx[ax].push_back(j);
      p.chi1d[ax].push_back(w);
      p.rel[ax].push_back(t);
    }
  }
  return p;
}

}  // namespace detail

// Coefficients <G_id, psi> over the truncation box, by windowed quadrature.
inline FrameCoefficients analyze(const FrameSpec& spec, const SampledField& psi,
                                 double trunc_tol = 1e-10) {
  const UniformGrid& g = spec.grid;
  if (!(psi.grid == g)) throw std::invalid_argument("analyze: grid mismatch");
  FrameCoefficients out;
  out.spec = std::make_shared<FrameSpec>(spec);
  out.c = Eigen::VectorXcd::Zero(spec.n_ids());

  // truncation check: psi mass outside [-(N-1), N-1]^d
  double total = 0, outside = 0;
  for (std::int64_t j = 0; j < g.size(); ++j) {
    double m = std::norm(psi.v[j]);
    total += m;
    RVec x = g.point(j);
    for (int i = 0; i < g.dim; ++i)
      if (std::abs(x[i]) > spec.N - 1) {
        outside += m;
        break;
      }
  }
  out.outside_mass = total > 0 ? outside / total : 0.0;
  out.truncation_warning = out.outside_mass > trunc_tol;

  double amp = std::pow(2.0 * pi, -0.5 * g.dim) * g.weight();
  int Kk = spec.per_axis_k();
  std::int64_t a_flat = 0;
  for (std::int64_t a_flat_iter = 0; a_flat_iter < spec.n_alpha(); ++a_flat_iter) {
    a_flat = a_flat_iter;
    MultiIndex alpha;
    alpha.dim = g.dim;
    std::int64_t t = a_flat;
    for (int i = g.dim - 1; i >= 0; --i) {
      alpha[i] = static_cast<int>(t % spec.per_axis_alpha()) - spec.N;
      t /= spec.per_axis_alpha();
    }
    RVec av;
    av.dim = g.dim;
    for (int i = 0; i < g.dim; ++i) av.v[i] = alpha[i];

    auto patch = detail::window_patch(spec, alpha);
    // per-axis modulation tables e^{-i k rel}
    std::array<std::vector<cplx>, 2> mod;
    for (int ax = 0; ax < g.dim; ++ax) {
      mod[ax].resize(Kk * patch.idx[ax].size());
      for (int kk = 0; kk < Kk; ++kk)
        for (size_t j = 0; j < patch.idx[ax].size(); ++j)
          mod[ax][kk * patch.idx[ax].size() + j] =
              std::polar(1.0, -(kk - spec.K) * patch.rel[ax][j]);
    }

    if (g.dim == 1) {
      size_t n0 = patch.idx[0].size();
      std::vector<cplx> w(n0);
      for (size_t j = 0; j < n0; ++j) {
        RVec x(g.coord(patch.idx[0][j]));
        w[j] = patch.chi1d[0][j] * std::conj(circulation(spec.A, x, av)) *
               psi.v[patch.idx[0][j]];
      }
      for (int kk = 0; kk < Kk; ++kk) {
        cplx s = 0;
        for (size_t j = 0; j < n0; ++j) s += mod[0][kk * n0 + j] * w[j];
        out.c[a_flat * spec.n_k() + kk] = amp * s;
      }
    } else {
      size_t n0 = patch.idx[0].size(), n1 = patch.idx[1].size();
      std::vector<cplx> w(n0 * n1);
      for (size_t j0 = 0; j0 < n0; ++j0)
        for (size_t j1 = 0; j1 < n1; ++j1) {
          RVec x(g.coord(patch.idx[0][j0]), g.coord(patch.idx[1][j1]));
          std::int64_t gi = static_cast<std::int64_t>(patch.idx[0][j0]) * g.points +
                            patch.idx[1][j1];
          w[j0 * n1 + j1] = patch.chi1d[0][j0] * patch.chi1d[1][j1] *
                            std::conj(circulation(spec.A, x, av)) * psi.v[gi];
        }
      // contract axis 1 first for each k1, then axis 0 for each k0
      std::vector<cplx> half(n0 * Kk);
      for (int k1 = 0; k1 < Kk; ++k1)
        for (size_t j0 = 0; j0 < n0; ++j0) {
          cplx s = 0;
          for (size_t j1 = 0; j1 < n1; ++j1)
            s += mod[1][k1 * n1 + j1] * w[j0 * n1 + j1];
          half[j0 * Kk + k1] = s;
        }
      for (int k0 = 0; k0 < Kk; ++k0)
        for (int k1 = 0; k1 < Kk; ++k1) {
          cplx s = 0;
          for (size_t j0 = 0; j0 < n0; ++j0)
            s += mod[0][k0 * n0 + j0] * half[j0 * Kk + k1];
          out.c[a_flat * spec.n_k() + k0 * Kk + k1] = amp * s;
        }
    }
  }
  return out;
}

inline SampledField synthesize(const FrameSpec& spec, const FrameCoefficients& coeff) {
  const UniformGrid& g = spec.grid;
  SampledField out(g);
  double amp = std::pow(2.0 * pi, -0.5 * g.dim);
  for (std::int64_t f = 0; f < spec.n_ids(); ++f) {
    cplx c = coeff.c[f];
    if (c == 0.0) continue;
    FrameId id = spec.id_from_flat(f);
    RVec av;
    av.dim = g.dim;
    for (int i = 0; i < g.dim; ++i) av.v[i] = id.alpha[i];
    auto patch = detail::window_patch(spec, id.alpha);
    if (g.dim == 1) {
      for (size_t j = 0; j < patch.idx[0].size(); ++j) {
        RVec x(g.coord(patch.idx[0][j]));
        out.v[patch.idx[0][j]] += c * amp * patch.chi1d[0][j] *
                                  circulation(spec.A, x, av) *
                                  std::polar(1.0, id.k[0] * patch.rel[0][j]);
      }
    } else {
      for (size_t j0 = 0; j0 < patch.idx[0].size(); ++j0)
        for (size_t j1 = 0; j1 < patch.idx[1].size(); ++j1) {
          RVec x(g.coord(patch.idx[0][j0]), g.coord(patch.idx[1][j1]));
          std::int64_t gi = static_cast<std::int64_t>(patch.idx[0][j0]) * g.points +
                            patch.idx[1][j1];
          out.v[gi] += c * amp * patch.chi1d[0][j0] * patch.chi1d[1][j1] *
                       circulation(spec.A, x, av) *
                       std::polar(1.0, id.k[0] * patch.rel[0][j0] +
                                           id.k[1] * patch.rel[1][j1]);
        }
    }
  }
  return out;
}

// This synthesize-by-coefficient loop is quadratic in the number of nonzero
// coefficients' windows but each window is tiny; fine at the default sizes.

inline double parseval_defect(const FrameSpec& spec, const SampledField& psi) {
  double n2 = psi.norm();
  n2 *= n2;
  if (n2 == 0.0) throw std::invalid_argument("parseval_defect: zero input");
  FrameCoefficients c = analyze(spec, psi);
  double s = c.c.squaredNorm();
  return std::abs(s - n2) / n2;
}

inline cplx gramian(const FrameSpec& spec, const FrameId& id1, const FrameId& id2) {
  if (!spec.contains(id1) || !spec.contains(id2))
    throw std::out_of_range("gramian: id outside truncation box");
  if (std::abs(id1.alpha[0] - id2.alpha[0]) >= 2 ||
      (spec.grid.dim == 2 && std::abs(id1.alpha[1] - id2.alpha[1]) >= 2))
    return 0.0;  // disjoint windows
  SampledField a = frame_vector(spec, id1), b = frame_vector(spec, id2);
  return a.inner(b);
}

}  // namespace magframe
