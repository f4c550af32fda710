#include <catch2/catch_amalgamated.hpp>

#include "magframe/symbols.hpp"
#include "magframe/weyl.hpp"

using namespace magframe;

namespace {

UniformGrid g1() { return UniformGrid(1, 8.0, 512); }

SampledField gauss_packet(const UniformGrid& g, double c, double w, double mom) {
  SampledField psi(g);
  for (std::int64_t j = 0; j < g.size(); ++j) {
    double x = g.point(j)[0];
    psi.v[j] = std::exp(-(x - c) * (x - c) / (2 * w * w)) * std::polar(1.0, mom * x);
  }
  return psi;
}

VectorPotential poly_potential_1d() {
  VectorPotential A(1);
  A.comp[0] = Poly::from_graded_lex(1, {0.1, 0.3, -0.05});
  return A;
}

Symbol conj_symbol(const Symbol& f) {
  auto fn = f.fn;
  return Symbol::from_function(f.order, [fn](const PhasePoint& X) { return std::conj(fn(X)); });
}

double rel_hs_err(const OperatorMatrix& a, const OperatorMatrix& b) {
  return (a.k - b.k).norm() / b.k.norm();
}

}  // namespace

TEST_CASE("weyl system basics") {
  auto g = g1();
  SampledField psi = gauss_packet(g, 0.4, 0.9, 1.3);
  auto A = poly_potential_1d();

  PhasePoint zero{RVec(0.0), RVec(0.0)};
  SampledField same = weyl_system_apply(A, zero, psi);
  CHECK((same.v - psi.v).norm() / psi.v.norm() < 1e-14);

  // unitarity, including off-grid translations
  for (double x0 : {0.37, -1.2, 2.0}) {
    PhasePoint X{RVec(x0), RVec(0.8)};
    SampledField w = weyl_system_apply(A, X, psi);
    CHECK(std::abs(w.norm() - psi.norm()) < 1e-10);
  }

  // A = 0, xi0 = 0, grid-aligned x0: pure translation
  auto A0 = VectorPotential::zero(1);
  double h = g.step();
  PhasePoint tr{RVec(5 * h), RVec(0.0)};
  SampledField shifted = weyl_system_apply(A0, tr, psi);
  double err = 0;
  for (int j = 0; j < g.points - 5; ++j)
    err = std::max(err, std::abs(shifted.v[j] - psi.v[j + 5]));
  CHECK(err < 1e-10);

  CHECK_THROWS(weyl_system_apply(A, PhasePoint{RVec(9.0), RVec(0.0)}, psi));
}

TEST_CASE("quantize constants and structure") {
  auto g = g1();
  auto A = poly_potential_1d();
  double hinv = 1.0 / g.weight();

  // f = 1 -> identity kernel, exactly (magnetic phase drops on the diagonal)
  Symbol one = Symbol::from_function(0.0, [](const PhasePoint&) { return cplx(1.0); });
  OperatorMatrix id = quantize(A, one, g);
  CHECK((id.k - OperatorMatrix::identity(g).k).norm() / hinv < 1e-10);

  // same through the sampled-symbol path
  PhaseSpaceGrid pg(g);
  PhaseField ones(pg);
  ones.v.setConstant(1.0);
  OperatorMatrix id2 = quantize(A, Symbol::from_samples(0.0, ones), g);
  CHECK((id2.k - id.k).norm() / hinv < 1e-10);

  // real symbol -> self-adjoint operator
  Symbol fr = random_real_schwartz_symbol(1, 101);
  OperatorMatrix op = quantize(A, fr, g);
  CHECK((op.k - op.k.adjoint().eval()).norm() / op.k.norm() < 1e-10);

  // linearity and the adjoint relation op^A(conj f) = op^A(f)^dagger
  Symbol fa = random_schwartz_symbol(1, 7), fb = random_schwartz_symbol(1, 8);
  Symbol fsum = Symbol::from_function(0.0, [fa, fb](const PhasePoint& X) {
    return fa.fn(X) + fb.fn(X);
  });
  OperatorMatrix oa = quantize(A, fa, g), ob = quantize(A, fb, g);
  OperatorMatrix osum = quantize(A, fsum, g);
  CHECK((osum.k - oa.k - ob.k).norm() / osum.k.norm() < 1e-12);
  OperatorMatrix oconj = quantize(A, conj_symbol(fa), g);
  CHECK((oconj.k - oa.k.adjoint().eval()).norm() / oa.k.norm() < 1e-12);
}

TEST_CASE("momentum symbol acts as derivative") {
  auto g = g1();
  Symbol mom = Symbol::from_function(1.0, [](const PhasePoint& X) { return cplx(X.xi[0]); });
  OperatorMatrix op = quantize(VectorPotential::zero(1), mom, g);
  SampledField psi = gauss_packet(g, 0.0, 1.0, 0.0);
  SampledField out = op.apply(psi);
  // -i d/dx e^{-x^2/2} = i x e^{-x^2/2}; compared on the interior: the kernel
  // of an unbounded symbol decays only like 1/|x-y|, so the band truncation
  // at |x-y| = L leaves a boundary layer near the grid edge
  SampledField ref(g);
  for (std::int64_t j = 0; j < g.size(); ++j) {
    double x = g.point(j)[0];
    ref.v[j] = cplx(0.0, x) * std::exp(-x * x / 2);
  }
  double num = 0, den = 0;
  for (std::int64_t j = 0; j < g.size(); ++j) {
    if (std::abs(g.point(j)[0]) > 2.0) continue;
    num += std::norm(out.v[j] - ref.v[j]);
    den += std::norm(ref.v[j]);
  }
  CHECK(std::sqrt(num / den) < 1e-8);
}

TEST_CASE("dequantize inverts quantize") {
  auto g = g1();
  auto A = poly_potential_1d();

  // identity kernel -> constant symbol 1
  PhaseField one = dequantize(A, OperatorMatrix::identity(g));
  CHECK((one.v.array() - 1.0).abs().maxCoeff() < 1e-12);

  for (std::uint64_t seed : {11u, 12u, 13u}) {
    Symbol f = random_schwartz_symbol(1, seed);
    for (int pot = 0; pot < 2; ++pot) {
      VectorPotential Ap = pot ? A : VectorPotential::zero(1);
      OperatorMatrix op = quantize(Ap, f, g);
      PhaseField back = dequantize(Ap, op);
      PhaseField ref = sample_symbol(f, back.grid);
      CHECK((back.v - ref.v).norm() / ref.v.norm() < 1e-8);

      // adjoint kernel dequantizes to the conjugate symbol
      PhaseField adj = dequantize(Ap, op.adjoint());
      CHECK((adj.v - ref.v.conjugate()).norm() / ref.v.norm() < 1e-8);
    }
  }
}

TEST_CASE("composition and the first Moyal correction") {
  auto g = g1();
  auto A = poly_potential_1d();
  Symbol f = random_schwartz_symbol(1, 21);
  OperatorMatrix of = quantize(A, f, g);
  OperatorMatrix id = OperatorMatrix::identity(g);
  CHECK(rel_hs_err(op_compose(of, id), of) < 1e-12);
  CHECK(rel_hs_err(op_compose(id, of), of) < 1e-12);

  Symbol gsym = random_schwartz_symbol(1, 22);
  OperatorMatrix og = quantize(A, gsym, g);
  OperatorMatrix lhs = op_compose(of, og).adjoint();
  OperatorMatrix rhs = op_compose(og.adjoint(), of.adjoint());
  CHECK(rel_hs_err(lhs, rhs) < 1e-12);

  // A=0 star product of tapered linear symbols: x * xi -> x xi + i/2 inside
  // the taper plateau (the derivative expansion terminates for linear symbols)
  auto A0 = VectorPotential::zero(1);
  Symbol fx = Symbol::from_function(0.0, [](const PhasePoint& X) {
    return cplx(X.x[0] * plateau_taper(X.x[0]) * plateau_taper(X.xi[0]));
  });
  Symbol fxi = Symbol::from_function(0.0, [](const PhasePoint& X) {
    return cplx(X.xi[0] * plateau_taper(X.x[0]) * plateau_taper(X.xi[0]));
  });
  OperatorMatrix prod = op_compose(quantize(A0, fx, g), quantize(A0, fxi, g));
  PhaseField star = dequantize(A0, prod);
  double sup = 0;
  for (std::int64_t i = 0; i < star.grid.size(); ++i) {
    PhasePoint X = star.grid.point(i);
    if (std::abs(X.x[0]) > 1.5 || std::abs(X.xi[0]) > 1.5) continue;
    cplx expect = cplx(X.x[0] * X.xi[0], 0.5);
    sup = std::max(sup, std::abs(star.v[i] - expect));
  }
  // the residual is the taper's transform tail at the kernel band edge, not a
  // discretization error; it shrinks with wider tapers but never below ~1e-3
  CHECK(sup < 2e-2);

  // exact closed-form star product: the ground-state projector symbol
  // f0 = 2 e^{-x^2 - xi^2} is idempotent, f0 * f0 = f0
  Symbol f0 = Symbol::from_function(0.0, [](const PhasePoint& X) {
    return cplx(2.0 * std::exp(-X.x[0] * X.x[0] - X.xi[0] * X.xi[0]));
  });
  OperatorMatrix p0 = quantize(A0, f0, g);
  PhaseField sq = dequantize(A0, op_compose(p0, p0));
  PhaseField f0s = sample_symbol(f0, sq.grid);
  // floor ~5e-8: the f0 kernel tail e^{-z^2/4} at the band edge z = L
  CHECK((sq.v - f0s.v).norm() / f0s.v.norm() < 1e-6);

  // and op(f0) is the rank-one projector onto the unit Gaussian
  SampledField psi0(g);
  for (std::int64_t j = 0; j < g.size(); ++j) {
    double x = g.point(j)[0];
    psi0.v[j] = std::pow(pi, -0.25) * std::exp(-x * x / 2);
  }
  OperatorMatrix proj = rank_one(psi0, psi0);
  CHECK((p0.k - proj.k).norm() / proj.k.norm() < 1e-6);
}

TEST_CASE("gauge covariance") {
  auto g = g1();
  auto A = poly_potential_1d();
  GaugeFunction phi;
  phi.phi = Poly::from_graded_lex(1, {0.2, -0.7, 0.15});
  Symbol f = random_schwartz_symbol(1, 31);

  OperatorMatrix shifted = quantize(gauge_shift(A, phi), f, g);
  OperatorMatrix base = quantize(A, f, g);
  Eigen::VectorXcd u(g.size());
  for (std::int64_t j = 0; j < g.size(); ++j)
    u[j] = std::polar(1.0, -phi.phi.eval(g.point(j)));
  Eigen::MatrixXcd conj_k = u.asDiagonal() * base.k * u.conjugate().asDiagonal();
  CHECK((shifted.k - conj_k).norm() / base.k.norm() < 1e-8);
}

TEST_CASE("hs norm and the unitarity constant") {
  auto g = g1();
  SampledField phi = gauss_packet(g, 0.5, 0.8, 1.0);
  SampledField psi = gauss_packet(g, -0.7, 1.1, -0.4);
  OperatorMatrix r1 = rank_one(phi, psi);
  CHECK(std::abs(hs_norm(r1) - phi.norm() * psi.norm()) < 1e-12);
  CHECK(hs_norm(OperatorMatrix(g)) == 0.0);

  // hs_norm(op^A(f)) = (2 pi)^{-d/2} ||f||_{L^2}, independent of f and A
  double target = std::pow(2 * pi, -0.5);
  auto A = poly_potential_1d();
  for (std::uint64_t seed : {41u, 42u, 43u, 44u, 45u}) {
    Symbol f = random_schwartz_symbol(1, seed);
    PhaseField fs = sample_symbol(f, PhaseSpaceGrid(g));
    for (int pot = 0; pot < 2; ++pot) {
      VectorPotential Ap = pot ? A : VectorPotential::zero(1);
      double ratio = hs_norm(quantize(Ap, f, g)) / fs.norm();
      CHECK(std::abs(ratio - target) / target < 1e-6);
    }
  }
}

TEST_CASE("quantization route consistency") {
  // op^A(f) rebuilt from the Weyl-system superposition
  // (2pi)^{-d} sum_X w (F_sigma f)(X) w^A(X) on the full phase grid.
  UniformGrid g(1, 8.0, 256);
  auto A = VectorPotential::constant(1, RVec(0.6));
  PhaseSpaceGrid pg(g);
  int M = g.points;
  double h = g.step(), w = pg.weight();

  for (std::uint64_t seed : {51u, 52u}) {
    Symbol f = random_schwartz_symbol(1, seed);
    PhaseField fs = sample_symbol(f, pg);
    PhaseField F = symplectic_fourier(fs);

    OperatorMatrix oracle(g);
    // translations over the principal band |x0| < L, matching quantize
    for (int sh = -(M / 2 - 1); sh <= M / 2 - 1; ++sh) {
      int zi = sh + M / 2;
      RVec x0(sh * h);
      for (int q = 0; q < M; ++q) {
        cplx Fv = F.v[static_cast<std::int64_t>(zi) * M + q];
        if (std::abs(Fv) < 1e-13) continue;
        double xi0 = pg.mom.coord(q);
        for (int a = 0; a < M; ++a) {
          int b = a + sh;
          if (b < 0 || b >= M) continue;
          RVec y = g.point(a);
          double ang = line_integral(A, y, y + x0) - xi0 * (y[0] + 0.5 * x0[0]);
          oracle.k(a, b) += Fv * std::polar(w / (2 * pi * g.weight()), ang);
        }
      }
    }
    OperatorMatrix direct = quantize(A, f, g);
    CHECK(rel_hs_err(oracle, direct) < 1e-3);
  }
}

TEST_CASE("seminorm estimates") {
  auto g = g1();
  PhaseSpaceGrid pg(g);

  Symbol one = Symbol::from_function(0.0, [](const PhasePoint&) { return cplx(1.0); });
  CHECK(seminorm_estimate(one, pg, MultiIndex(1), MultiIndex(0)) < 1e-8);
  CHECK(seminorm_estimate(one, pg, MultiIndex(0), MultiIndex(2)) < 1e-8);
  CHECK(seminorm_estimate(one, pg, MultiIndex(0), MultiIndex(0)) == 1.0);

  Symbol ss = Symbol::from_function(0.0, [](const PhasePoint& X) {
    return cplx(std::sin(X.x[0]) * std::sin(X.xi[0]));
  });
  CHECK(std::abs(seminorm_estimate(ss, pg, MultiIndex(0), MultiIndex(0)) - 1.0) < 1e-6);

  // stability under grid refinement
  Symbol gsym = gaussian_symbol(PhasePoint{RVec(0.3), RVec(-0.5)}, 1.1);
  double c1 = seminorm_estimate(gsym, PhaseSpaceGrid(UniformGrid(1, 8.0, 256)),
                                MultiIndex(1), MultiIndex(1));
  double c2 = seminorm_estimate(gsym, pg, MultiIndex(1), MultiIndex(1));
  CHECK(std::abs(c1 - c2) < 1e-4);

  CHECK_THROWS(seminorm_estimate(one, pg, MultiIndex(3), MultiIndex(2)));

  HoermanderReport rep = hoermander_report(gsym, PhaseSpaceGrid(UniformGrid(1, 8.0, 256)), 2);
  CHECK(rep.entries.size() == 6);
  for (const auto& e : rep.entries) CHECK(e.value >= 0.0);
}
