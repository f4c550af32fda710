#pragma once

#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "magframe/frame.hpp"
#include "magframe/weyl.hpp"

namespace magframe {

// Matrix elements e(i, j) = <G_i, op G_j> of an operator against the frame,
// over the flat FrameSpec id ordering. For the Parseval frame the family of
// rank-one operators |G_i><G_j| is itself Parseval on the Hilbert-Schmidt
// space, so op = sum_ij e(i,j) |G_i><G_j| and ||e||_F = ||op||_HS up to the
// truncation tails.
struct OperatorMatrixElements {
  std::shared_ptr<const FrameSpec> spec;
  Eigen::MatrixXcd e;
  bool truncation_warning = false;
};

inline OperatorMatrixElements op_matrix_elements(const FrameSpec& spec,
                                                 const OperatorMatrix& op) {
  const UniformGrid& g = spec.grid;
  if (!(op.grid == g)) throw std::invalid_argument("op_matrix_elements: grid mismatch");
  const Eigen::MatrixXcd& G = spec.frame_matrix();
  OperatorMatrixElements out;
  out.spec = std::make_shared<FrameSpec>(spec);
  Eigen::MatrixXcd Y = op.k * G;
  double w = g.weight() * g.weight();
  out.e.noalias() = w * (G.adjoint() * Y);

  // warn when the kernel carries mass outside the box where the lattice
  // partition of unity is complete (reconstruction degrades there)
  double total = 0, outside = 0;
  double safe = spec.N - 1.0;
  for (std::int64_t j = 0; j < g.size(); ++j)
    for (std::int64_t i = 0; i < g.size(); ++i) {
      double m = std::norm(op.k(i, j));
      if (m == 0.0) continue;
      total += m;
      RVec x = g.point(i), y = g.point(j);
      for (int ax = 0; ax < g.dim; ++ax)
        if (std::abs(x[ax]) > safe || std::abs(y[ax]) > safe) {
          outside += m;
          break;
        }
    }
  out.truncation_warning = total > 0 && outside / total > 1e-10;
  return out;
}

inline OperatorMatrix reconstruct_operator(const FrameSpec& spec,
                                           const OperatorMatrixElements& elems) {
  const Eigen::MatrixXcd& G = spec.frame_matrix();
  OperatorMatrix op(spec.grid);
  Eigen::MatrixXcd Y = elems.e * G.adjoint();
  op.k.noalias() = G * Y;
  return op;
}

// |  ||op||_HS - ||e||_F  | / ||op||_HS
inline double hs_isometry_check(const FrameSpec& spec, const OperatorMatrix& op) {
  double hs = hs_norm(op);
  if (hs == 0.0) throw std::invalid_argument("hs_isometry_check: zero operator");
  return std::abs(hs - op_matrix_elements(spec, op).e.norm()) / hs;
}

// Gram matrix <G_i, G_j> over flat ids.
inline Eigen::MatrixXcd gram_matrix(const FrameSpec& spec) {
  const Eigen::MatrixXcd& G = spec.frame_matrix();
  return spec.grid.weight() * (G.adjoint() * G).eval();
}

// Matrix elements of a super operator: an evaluator over index octuples
// (idL_out, idL_in, idR_in, idR_out), canonical order (alpha_L, beta_L,
// alpha_R, beta_R). Stored as a sum of product terms sigma * EL (x) ER with
//   F(aL, bL, aR, bR) = sum_t sigma_t EL_t(aL, bL) ER_t(aR, bR),
// which covers product super operators exactly and general ones through a
// Schmidt decomposition. Compositions are kept lazy (factor pair held by
// reference) because materializing them costs one dense product per term
// pair; eval contracts single rows/columns instead. Full 8-index storage is
// never formed. A small magnitude threshold flushes entries to exact zero so
// downstream windowed contractions can skip them.
struct SuperMatrixElements {
  struct Term {
    cplx sigma;
    Eigen::MatrixXcd el, er;
  };

  std::shared_ptr<const FrameSpec> spec;
  std::vector<Term> terms;
  // set when this object is a lazy composition: this = first after second
  std::shared_ptr<const SuperMatrixElements> comp_f, comp_g;
  double threshold = 1e-14;

  std::int64_t n_ids() const { return spec->n_ids(); }

  cplx eval(std::int64_t aL, std::int64_t bL, std::int64_t aR, std::int64_t bR) const {
    std::int64_t n = n_ids();
    std::int64_t key = ((aL * n + bL) * n + aR) * n + bR;
    {
      std::lock_guard<std::mutex> lock(cache_->mu);
      auto it = cache_->map.find(key);
      if (it != cache_->map.end()) return it->second;
    }
    cplx v = evaluate(aL, bL, aR, bR);
    if (std::abs(v) < threshold) v = 0.0;
    std::lock_guard<std::mutex> lock(cache_->mu);
    cache_->map.emplace(key, v);
    return v;
  }

 private:
  cplx evaluate(std::int64_t aL, std::int64_t bL, std::int64_t aR,
                std::int64_t bR) const {
    cplx s = 0.0;
    for (const Term& t : terms) s += t.sigma * t.el(aL, bL) * t.er(aR, bR);
    if (comp_f && comp_g) {
      // (F G)(aL,bL,aR,bR) = sum_{a,b} F(aL,a,b,bR) G(a,bL,aR,b); for product
      // terms the inner sums collapse to row-by-column contractions
      for (const Term& tf : comp_f->terms)
        for (const Term& tg : comp_g->terms) {
          cplx left = (tf.el.row(aL) * tg.el.col(bL))(0, 0);
          cplx right = (tg.er.row(aR) * tf.er.col(bR))(0, 0);
          s += tf.sigma * tg.sigma * left * right;
        }
      if (comp_f->comp_f || comp_g->comp_f)
        throw std::logic_error("super elements: nested lazy compositions unsupported");
    }
    return s;
  }

  struct Cache {
    std::mutex mu;
    std::unordered_map<std::int64_t, cplx> map;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

// F(g) = op_L g op_R, from the single-operator elements of the two factors.
inline SuperMatrixElements super_elements_product(const OperatorMatrixElements& left,
                                                  const OperatorMatrixElements& right,
                                                  cplx sigma = 1.0) {
  SuperMatrixElements F;
  F.spec = left.spec;
  F.terms.push_back({sigma, left.e, right.e});
  return F;
}

inline SuperMatrixElements super_elements_sum(std::vector<SuperMatrixElements::Term> terms,
                                              std::shared_ptr<const FrameSpec> spec) {
  SuperMatrixElements F;
  F.spec = std::move(spec);
  F.terms = std::move(terms);
  return F;
}

// Elements of the identity super operator F(g) = g: gramian products.
inline SuperMatrixElements identity_super_elements(const FrameSpec& spec) {
  SuperMatrixElements F;
  F.spec = std::make_shared<FrameSpec>(spec);
  Eigen::MatrixXcd gram = gram_matrix(spec);
  F.terms.push_back({1.0, gram, gram});
  return F;
}

// (F g)(a, b) = sum_{a', b'} F(a, b', a', b) g(b', a')  -- for product terms
// this is sigma * EL g ER.
inline OperatorMatrixElements apply_super_via_elements(const SuperMatrixElements& F,
                                                       const OperatorMatrixElements& g) {
  if (F.n_ids() != g.e.rows())
    throw std::invalid_argument("apply_super_via_elements: spec mismatch");
  OperatorMatrixElements out;
  out.spec = g.spec;
  out.e = Eigen::MatrixXcd::Zero(g.e.rows(), g.e.cols());
  auto add_terms = [&](const std::vector<SuperMatrixElements::Term>& terms, cplx scale) {
    for (const auto& t : terms) {
      Eigen::MatrixXcd Y = g.e * t.er;
      out.e.noalias() += (scale * t.sigma) * (t.el * Y);
    }
  };
  add_terms(F.terms, 1.0);
  if (F.comp_f && F.comp_g)
    for (const auto& tf : F.comp_f->terms)
      for (const auto& tg : F.comp_g->terms) {
        Eigen::MatrixXcd el = tf.el * tg.el, er = tg.er * tf.er;
        Eigen::MatrixXcd Y = g.e * er;
        out.e.noalias() += (tf.sigma * tg.sigma) * (el * Y);
      }
  return out;
}

// (F G)(aL, bL, aR, bR) = sum_{a, b} F(aL, a, b, bR) G(a, bL, aR, b),
// returned as a lazy evaluator holding the two factors.
inline SuperMatrixElements compose_super_elements(const SuperMatrixElements& F,
                                                  const SuperMatrixElements& G) {
  if (F.n_ids() != G.n_ids())
    throw std::invalid_argument("compose_super_elements: spec mismatch");
  if (F.comp_f || G.comp_f)
    throw std::invalid_argument(
        "compose_super_elements: materialize nested compositions first");
  SuperMatrixElements out;
  out.spec = F.spec;
  out.comp_f = std::make_shared<SuperMatrixElements>(F);
  out.comp_g = std::make_shared<SuperMatrixElements>(G);
  return out;
}

// Expand a lazy composition into explicit product terms (one dense product
// per term pair); no-op for already-explicit elements.
inline SuperMatrixElements materialize_super_elements(const SuperMatrixElements& F) {
  SuperMatrixElements out;
  out.spec = F.spec;
  out.threshold = F.threshold;
  out.terms = F.terms;
  if (F.comp_f && F.comp_g)
    for (const auto& tf : F.comp_f->terms)
      for (const auto& tg : F.comp_g->terms)
        out.terms.push_back(
            {tf.sigma * tg.sigma, tf.el * tg.el, tg.er * tf.er});
  return out;
}

}  // namespace magframe
