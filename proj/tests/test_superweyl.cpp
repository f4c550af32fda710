#include <catch2/catch_amalgamated.hpp>

#include "magframe/superweyl.hpp"
#include "magframe/symbols.hpp"

using namespace magframe;

namespace {

UniformGrid g1() { return UniformGrid(1, 8.0, 512); }

VectorPotential poly_potential_1d() {
  VectorPotential A(1);
  A.comp[0] = Poly::from_graded_lex(1, {0.1, 0.3, -0.05});
  return A;
}

Symbol one_symbol() {
  return Symbol::from_function(0.0, [](const PhasePoint&) { return cplx(1.0); });
}

DoubleSymbol product_double(const Symbol& fL, const Symbol& fR) {
  return DoubleSymbol::from_terms(fL.order, fR.order, {{cplx(1.0), fL, fR}});
}

double coarse_norm(const Symbol& f, const PhaseSpaceGrid& cg) {
  double s = 0;
  auto ev = symbol_evaluator(f);
  for (std::int64_t i = 0; i < cg.size(); ++i) s += std::norm(ev(cg.point(i)));
  return std::sqrt(s * cg.weight());
}

double rel_hs(const OperatorMatrix& a, const OperatorMatrix& b) {
  return (a.k - b.k).norm() / b.k.norm();
}

}  // namespace

TEST_CASE("schmidt decomposition") {
  PhaseSpaceGrid cg = schmidt_coarse_grid(1);

  SECTION("rank-1 input") {
    Symbol fL = random_schwartz_symbol(1, 201), fR = random_schwartz_symbol(1, 202);
    auto dec = schmidt_decompose(product_double(fL, fR), cg);
    REQUIRE(dec.terms.size() == 1);
    CHECK(std::abs(dec.terms[0].sigma - coarse_norm(fL, cg) * coarse_norm(fR, cg)) <
          1e-10 * dec.terms[0].sigma);
    // exact reconstruction of the separable input off the coarse grid
    PhasePoint XL{RVec(0.37), RVec(-1.21)}, XR{RVec(-0.83), RVec(0.44)};
    cplx want = fL.eval(XL) * fR.eval(XR);
    CHECK(std::abs(dec.eval(XL, XR) - want) < 1e-10);
  }

  SECTION("zero symbol") {
    auto dec = schmidt_decompose(
        DoubleSymbol::from_function(0, 0, [](const PhasePoint&, const PhasePoint&) {
          return cplx(0.0);
        }),
        cg);
    CHECK(dec.terms.empty());
  }

  SECTION("liouville symbol has rank two") {
    Symbol h = gaussian_symbol(PhasePoint{RVec(0.5), RVec(-0.3)}, 1.1);
    auto dec = schmidt_decompose(liouville_symbol(h), cg);
    CHECK(dec.terms.size() == 2);
    CHECK(dec.terms[0].sigma >= dec.terms[1].sigma);
  }

  SECTION("entangled symbol: grid reconstruction and truncation") {
    auto F = DoubleSymbol::from_function(0, 0, [](const PhasePoint& XL, const PhasePoint& XR) {
      double nL = dot(XL.x, XL.x) + dot(XL.xi, XL.xi);
      double nR = dot(XR.x, XR.x) + dot(XR.xi, XR.xi);
      double c = dot(XL.x, XR.x) + dot(XL.xi, XR.xi);
      return cplx(std::exp(-0.5 * (nL + nR) - 0.3 * c));
    });
    auto dec = schmidt_decompose(F, cg, 1e-10);
    CHECK(dec.terms.size() > 2);
    double worst = 0;
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::int64_t> pick(0, cg.size() - 1);
    for (int t = 0; t < 100; ++t) {
      PhasePoint XL = cg.point(pick(rng)), XR = cg.point(pick(rng));
      worst = std::max(worst, std::abs(dec.eval(XL, XR) - F.eval(XL, XR)));
    }
    CHECK(worst < 1e-8);
    // off-grid points go through the quadrature-based extension
    PhasePoint XL{RVec(0.11), RVec(0.53)}, XR{RVec(-0.61), RVec(-0.27)};
    CHECK(std::abs(dec.eval(XL, XR) - F.eval(XL, XR)) < 1e-4);
    CHECK_THROWS_AS(schmidt_decompose(F, cg, 1e-12, 2), std::runtime_error);
  }
}

TEST_CASE("super apply") {
  auto g = g1();
  VectorPotential A = poly_potential_1d();
  OperatorMatrix rho = random_hs_operator(g, 211);

  SECTION("constant double symbol acts as the identity") {
    DoubleSymbol one2 = product_double(one_symbol(), one_symbol());
    OperatorMatrix out = super_apply(A, one2, rho);
    CHECK(rel_hs(out, rho) < 1e-12);
  }

  SECTION("left-sided symbol multiplies from the left") {
    Symbol fL = random_schwartz_symbol(1, 212);
    OperatorMatrix out = super_apply(A, product_double(fL, one_symbol()), rho);
    OperatorMatrix ref = op_compose(quantize(A, fL, g), rho);
    CHECK(rel_hs(out, ref) < 1e-10);
  }

  SECTION("liouville of a constant annihilates") {
    Symbol c = Symbol::from_function(0.0, [](const PhasePoint&) { return cplx(2.7); });
    OperatorMatrix out = super_apply(A, liouville_symbol(c), rho);
    CHECK(out.k.norm() < 1e-10 * rho.k.norm());
  }
}

TEST_CASE("liouville identity") {
  auto g = g1();
  for (int which = 0; which < 2; ++which) {
    VectorPotential A = which == 0 ? VectorPotential(1) : poly_potential_1d();
    Symbol h = random_real_schwartz_symbol(1, 221 + which);
    OperatorMatrix rho = random_hs_operator(g, 223 + which);
    OperatorMatrix oph = quantize(A, h, g);
    OperatorMatrix lhs = super_apply(A, liouville_symbol(h), rho);
    OperatorMatrix comm(g);
    comm.k = op_compose(oph, rho).k - op_compose(rho, oph).k;
    // lhs = -i [op(h), rho]
    CHECK((lhs.k + cplx(0, 1) * comm.k).norm() <= 1e-8 * rho.k.norm());
  }
}

TEST_CASE("semi super product") {
  auto g = g1();
  VectorPotential A0(1);
  Symbol gs = random_schwartz_symbol(1, 231);

  SECTION("constant super symbol returns the symbol") {
    DoubleSymbol one2 = product_double(one_symbol(), one_symbol());
    PhaseField out = semi_super_product(A0, one2, gs, g);
    PhaseField ref = sample_symbol(gs, out.grid);
    CHECK((out.v - ref.v).norm() / ref.v.norm() < 1e-7);
  }

  SECTION("left factor gives the composition product") {
    Symbol fL = random_schwartz_symbol(1, 232);
    PhaseField out = semi_super_product(A0, product_double(fL, one_symbol()), gs, g);
    PhaseField ref =
        dequantize(A0, op_compose(quantize(A0, fL, g), quantize(A0, gs, g)));
    CHECK((out.v - ref.v).norm() / ref.v.norm() < 1e-10);
  }

  SECTION("zero symbol") {
    Symbol z = Symbol::from_function(0.0, [](const PhasePoint&) { return cplx(0.0); });
    PhaseField out = semi_super_product(A0, product_double(one_symbol(), one_symbol()), z, g);
    CHECK(out.v.norm() == 0.0);
  }
}

TEST_CASE("super product") {
  auto g = g1();
  VectorPotential A = poly_potential_1d();
  DoubleSymbol F = product_double(random_schwartz_symbol(1, 241),
                                  random_schwartz_symbol(1, 242));
  DoubleSymbol G = product_double(random_schwartz_symbol(1, 243),
                                  random_schwartz_symbol(1, 244));

  SECTION("unit right factor reproduces the symbol") {
    DoubleSymbol one2 = product_double(one_symbol(), one_symbol());
    DoubleSymbol P = super_product(A, F, one2, g);
    PhaseSpaceGrid pg(g);
    double worst = 0, scale = 0;
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::int64_t> pick(0, pg.size() - 1);
    for (int t = 0; t < 300; ++t) {
      std::int64_t i = pick(rng), j = pick(rng);
      PhasePoint XL = pg.point(i), XR = pg.point(j);
      cplx want = F.eval(XL, XR);
      worst = std::max(worst, std::abs(P.eval(XL, XR) - want));
      scale = std::max(scale, std::abs(want));
    }
    CHECK(worst < 1e-7 * std::max(scale, 1.0));
  }

  SECTION("composition matches on random operators") {
    DoubleSymbol P = super_product(A, F, G, g);
    for (std::uint64_t seed : {245, 246, 247}) {
      OperatorMatrix rho = random_hs_operator(g, seed);
      OperatorMatrix lhs = super_apply(A, P, rho);
      OperatorMatrix rhs = super_apply(A, F, super_apply(A, G, rho));
      // floor ~3e-6: each star-product factor carries one quantization round
      // trip whose kernel-band tail enters here at full weight
      CHECK(rel_hs(lhs, rhs) < 1e-5);
    }
  }

  SECTION("associativity spot check") {
    DoubleSymbol H = product_double(random_schwartz_symbol(1, 248),
                                    random_schwartz_symbol(1, 249));
    DoubleSymbol l = super_product(A, super_product(A, F, G, g), H, g);
    DoubleSymbol r = super_product(A, F, super_product(A, G, H, g), g);
    PhaseSpaceGrid pg(g);
    std::mt19937_64 rng(6);
    // sample where the bump symbols carry their mass (|x| <= 3, |xi| <= 6)
    std::uniform_int_distribution<std::int64_t> ppos(160, 352), pmom(240, 272);
    auto pick = [&]() { return ppos(rng) * pg.mom.size() + pmom(rng); };
    double worst = 0, scale = 0;
    for (int t = 0; t < 200; ++t) {
      PhasePoint XL = pg.point(pick()), XR = pg.point(pick());
      cplx a = l.eval(XL, XR), b = r.eval(XL, XR);
      worst = std::max(worst, std::abs(a - b));
      scale = std::max(scale, std::abs(b));
    }
    CHECK(worst < 1e-5 * std::max(scale, 1e-6));
  }
}

TEST_CASE("direct super matrix elements") {
  auto g = g1();
  VectorPotential A = poly_potential_1d();
  FrameSpec spec(g, 7, 12, A);
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> ua(-3, 3), uk(-4, 4);
  auto pick_id = [&]() {
    FrameId id;
    id.alpha.dim = id.k.dim = 1;
    id.alpha[0] = ua(rng);
    id.k[0] = uk(rng);
    return spec.flat(id);
  };

  SECTION("constant symbol gives gramian products") {
    DoubleSymbol one2 = product_double(one_symbol(), one_symbol());
    auto dec = schmidt_decompose(one2, schmidt_coarse_grid(1));
    Eigen::MatrixXcd gram = gram_matrix(spec);
    for (int t = 0; t < 4; ++t) {
      std::int64_t aL = pick_id(), bL = pick_id(), aR = pick_id(), bR = pick_id();
      cplx direct = superop_matrix_element_direct(A, dec, spec, aL, bL, aR, bR);
      cplx want = gram(aL, bL) * gram(aR, bR);
      CHECK(std::abs(direct - want) < 1e-6);
    }
  }

  SECTION("product symbol factorizes and matches the schmidt route") {
    DoubleSymbol F = product_double(random_schwartz_symbol(1, 251),
                                    random_schwartz_symbol(1, 252));
    auto dec = schmidt_decompose(F, schmidt_coarse_grid(1));
    SuperMatrixElements el = super_elements_from_schmidt(spec, A, dec);
    double scale = 0;
    std::vector<std::array<std::int64_t, 4>> octs;
    std::vector<cplx> want;
    for (int t = 0; t < 10; ++t) {
      std::array<std::int64_t, 4> o{pick_id(), pick_id(), pick_id(), pick_id()};
      cplx v = el.eval(o[0], o[1], o[2], o[3]);
      octs.push_back(o);
      want.push_back(v);
      scale = std::max(scale, std::abs(v));
    }
    for (int t = 0; t < 10; ++t) {
      cplx direct = superop_matrix_element_direct(A, dec, spec, octs[t][0], octs[t][1],
                                                  octs[t][2], octs[t][3]);
      CHECK(std::abs(direct - want[t]) < 1e-3 * scale);
    }
  }
}

TEST_CASE("expansion through matrix elements") {
  auto g = g1();
  VectorPotential A0(1);
  FrameSpec spec(g, 7, 32, A0);
  DoubleSymbol F = product_double(random_schwartz_symbol(1, 261),
                                  random_schwartz_symbol(1, 262));
  auto dec = schmidt_decompose(F, schmidt_coarse_grid(1));
  OperatorMatrix ghat = random_hs_operator(g, 263, 5, 1.0, 0.6, 0.9);
  OperatorMatrix dense = super_apply(A0, F, ghat);

  SuperMatrixElements Fel = super_elements_from_schmidt(spec, A0, dec);
  OperatorMatrixElements gel = op_matrix_elements(spec, ghat);
  OperatorMatrixElements out = apply_super_via_elements(Fel, gel);

  SECTION("reconstructing the expansion reproduces the dense action") {
    OperatorMatrix rec = reconstruct_operator(spec, out);
    // floor: representing the output in the truncated frame costs
    // sqrt(coefficient tail mass), like every reconstruction
    CHECK(rel_hs(rec, dense) < 5e-4);
  }

  SECTION("inner sums converge absolutely") {
    // l1 partial sums of the element contraction saturate well inside the box
    std::int64_t alpha = spec.flat([&] {
      FrameId id;
      id.alpha.dim = id.k.dim = 1;
      id.alpha[0] = 1;
      id.k[0] = 2;
      return id;
    }());
    auto partial = [&](int kmax) {
      double s = 0;
      for (std::int64_t bp = 0; bp < spec.n_ids(); ++bp) {
        if (std::abs(spec.id_from_flat(bp).k[0]) > kmax) continue;
        for (std::int64_t ap = 0; ap < spec.n_ids(); ++ap) {
          if (std::abs(spec.id_from_flat(ap).k[0]) > kmax) continue;
          cplx f = 0.0;
          for (const auto& t : Fel.terms) f += t.sigma * t.el(alpha, bp) * t.er(ap, alpha);
          s += std::abs(f * gel.e(bp, ap));
        }
      }
      return s;
    };
    double s16 = partial(16), s32 = partial(32);
    CHECK(s32 - s16 < 0.01 * s32);
  }
}
