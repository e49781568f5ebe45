#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "sqpulse/operators.hpp"

namespace sqpulse {

struct LieClosureResult {
  int dimension = 0;
  int required = 0; // N^2 - 1
  std::vector<Matrix> basis; // orthonormal under Re tr(A^dagger B)
  bool fully_controllable = false;
  int bracket_depth = 0;
  bool trace_removed = false; // some generator had an identity component
};

/// Re tr(A^dagger B).
inline double real_inner(const Matrix &a, const Matrix &b) {
  return (a.conjugate().cwiseProduct(b)).sum().real();
}

inline Matrix commutator(const Matrix &a, const Matrix &b) {
  return a * b - b * a;
}

namespace detail {

/// Orthonormal real span with twice-applied modified Gram-Schmidt.
class RealSpan {
public:
  const std::vector<Matrix> &basis() const { return basis_; }

  /// Component of m orthogonal to the current span.
  Matrix residual(const Matrix &m) const {
    Matrix r = m;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto &b : basis_)
        r -= real_inner(b, r) * b;
    return r;
  }

  /// Appends m if its residual exceeds tol * ||m||.
  bool try_add(const Matrix &m, double tol) {
    const double norm = m.norm();
    if (norm == 0.0)
      return false;
    Matrix r = residual(m);
    const double rn = r.norm();
    if (!(rn > tol * norm))
      return false;
    basis_.push_back(r / rn);
    return true;
  }

private:
  std::vector<Matrix> basis_;
};

} // namespace detail

/// Real Lie algebra generated by skew-Hermitian `generators`, modulo the
/// identity direction.
///
/// Each new basis element is bracketed against every earlier element, in
/// insertion order; a commutator joins the basis when its residual after
/// projection exceeds tol times its norm. `max_iter` bounds the number of
/// basis elements processed.
inline LieClosureResult lie_closure(const std::vector<Matrix> &generators,
                                    double tol = 1e-9, int max_iter = 10000) {
  if (generators.empty())
    throw Error(ErrorCode::InvalidInput, "no generators");
  const Eigen::Index n = generators.front().rows();
  LieClosureResult res;
  res.required = static_cast<int>(n * n - 1);

  detail::RealSpan span;
  std::vector<int> depth;
  const Matrix id = Matrix::Identity(n, n);
  for (const auto &g : generators) {
    if (g.rows() != n || g.cols() != n)
      throw Error(ErrorCode::DimensionMismatch, "generators differ in size");
    const double scale = std::max(1.0, max_abs(g));
    if (!is_skew_hermitian(g, 1e-12 * scale))
      throw Error(ErrorCode::NotSkewHermitian, "generator is not skew-Hermitian");
    const cplx tr = g.trace();
    Matrix g0 = g;
    if (std::abs(tr) > 1e-12 * scale * static_cast<double>(n)) {
      res.trace_removed = true;
      g0 -= (tr / static_cast<double>(n)) * id;
    }
    if (span.try_add(g0, tol))
      depth.push_back(0);
  }

  int processed = 0;
  for (std::size_t i = 0; i < span.basis().size(); ++i) {
    if (static_cast<int>(span.basis().size()) >= res.required)
      break;
    if (++processed > max_iter)
      throw Error(ErrorCode::MaxIterExceeded,
                  "closure did not terminate within max_iter");
    for (std::size_t j = 0; j < i; ++j) {
      // Copies: try_add may reallocate the basis storage.
      const Matrix a = span.basis()[j];
      const Matrix b = span.basis()[i];
      Matrix c = commutator(a, b);
      if (c.norm() <= 1e-12)
        continue;
      if (span.try_add(c, tol)) {
        depth.push_back(std::max(depth[i], depth[j]) + 1);
        if (static_cast<int>(span.basis().size()) >= res.required)
          break;
      }
    }
  }

  res.basis = span.basis();
  res.dimension = static_cast<int>(res.basis.size());
  res.bracket_depth = depth.empty() ? 0 : *std::max_element(depth.begin(), depth.end());
  res.fully_controllable = res.dimension == res.required;
  return res;
}

/// i H_0 (recentered) followed by i H_m, m = 1..N-1.
inline std::vector<Matrix> control_generators(const SystemSpec &spec) {
  const cplx i{0.0, 1.0};
  std::vector<Matrix> gens{i * drift_hamiltonian(spec.recentered())};
  for (int m = 1; m <= spec.cycles(); ++m)
    gens.push_back(i * coupling_operator(spec, m));
  return gens;
}

inline bool is_completely_controllable(const SystemSpec &spec) {
  return lie_closure(control_generators(spec)).fully_controllable;
}

/// Nested-bracket expression over the control generators
/// (index 0 = iH_0, index m = iH_m).
class BracketRecipe {
public:
  static BracketRecipe generator(int index) {
    auto node = std::make_shared<Node>();
    node->index = index;
    return BracketRecipe(std::move(node));
  }

  static BracketRecipe bracket(const BracketRecipe &lhs,
                               const BracketRecipe &rhs, double scale = 1.0) {
    auto node = std::make_shared<Node>();
    node->lhs = lhs.node_;
    node->rhs = rhs.node_;
    node->scale = scale;
    return BracketRecipe(std::move(node));
  }

  Matrix evaluate(const std::vector<Matrix> &gens) const {
    return eval(*node_, gens);
  }

  int depth() const { return depth_of(*node_); }

  std::string str() const {
    std::ostringstream os;
    print(os, *node_);
    return os.str();
  }

private:
  struct Node {
    int index = -1;
    std::shared_ptr<const Node> lhs, rhs;
    double scale = 1.0;
  };

  explicit BracketRecipe(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  static Matrix eval(const Node &n, const std::vector<Matrix> &gens) {
    if (!n.lhs)
      return gens.at(n.index);
    return n.scale * commutator(eval(*n.lhs, gens), eval(*n.rhs, gens));
  }

  static int depth_of(const Node &n) {
    return n.lhs ? 1 + std::max(depth_of(*n.lhs), depth_of(*n.rhs)) : 0;
  }

  static void print(std::ostream &os, const Node &n) {
    if (!n.lhs) {
      os << "iH_" << n.index;
      return;
    }
    if (n.scale != 1.0)
      os << n.scale << "*";
    os << "[";
    print(os, *n.lhs);
    os << ", ";
    print(os, *n.rhs);
    os << "]";
  }

  std::shared_ptr<const Node> node_;
};

struct ChevalleyRecipe {
  int n; // 1-based: couples levels n and n+1
  BracketRecipe ix, iy, ih;
};

/// Targets i(|n><n+1| + h.c.), |n><n+1| - h.c., i(|n><n| - |n+1><n+1|).
struct ChevalleyTargets {
  Matrix ix, iy, ih;
};

inline ChevalleyTargets chevalley_targets(int levels, int n) {
  const cplx i{0.0, 1.0};
  const int a = n - 1, b = n;
  ChevalleyTargets t{Matrix::Zero(levels, levels), Matrix::Zero(levels, levels),
                     Matrix::Zero(levels, levels)};
  t.ix(a, b) = t.ix(b, a) = i;
  t.iy(a, b) = 1.0;
  t.iy(b, a) = -1.0;
  t.ih(a, a) = i;
  t.ih(b, b) = -i;
  return t;
}

/// Bracket recipes generating the Chevalley basis of su(N).
///
/// NearestNeighbor: ix_n = iH_n. GapToGround: ix_1 = iH_1 and, for n >= 2,
/// ix_n = mu_n^{-1} [[iH_n, iH_{n-1}], iH_0]. In both cases
/// iy_n = mu_n^{-1} [iH_0, ix_n] and ih_n = -[ix_n, iy_n] / 2.
inline std::vector<ChevalleyRecipe> chevalley_witness(const SystemSpec &spec) {
  const auto mu = spec.gaps();
  const auto h0 = BracketRecipe::generator(0);
  std::vector<ChevalleyRecipe> out;
  for (int n = 1; n <= spec.cycles(); ++n) {
    const double inv_mu = 1.0 / mu[n - 1];
    BracketRecipe ix = BracketRecipe::generator(n);
    if (spec.kind() == SystemKind::GapToGround && n >= 2)
      ix = BracketRecipe::bracket(
          BracketRecipe::bracket(BracketRecipe::generator(n),
                                 BracketRecipe::generator(n - 1)),
          h0, inv_mu);
    BracketRecipe iy = BracketRecipe::bracket(h0, ix, inv_mu);
    BracketRecipe ih = BracketRecipe::bracket(ix, iy, -0.5);
    out.push_back({n, ix, iy, ih});
  }
  return out;
}

/// Evaluates every recipe on the spec's generators; throws WitnessMismatch if
/// any misses its target by more than tol (max-norm).
inline std::vector<Matrix> evaluate_witness(const SystemSpec &spec,
                                            double tol = 1e-9) {
  const auto gens = control_generators(spec);
  std::vector<Matrix> out;
  for (const auto &r : chevalley_witness(spec)) {
    const auto t = chevalley_targets(spec.levels(), r.n);
    const Matrix vals[3] = {r.ix.evaluate(gens), r.iy.evaluate(gens),
                            r.ih.evaluate(gens)};
    const Matrix *tgts[3] = {&t.ix, &t.iy, &t.ih};
    for (int k = 0; k < 3; ++k) {
      if (max_abs(vals[k] - *tgts[k]) > tol)
        throw Error(ErrorCode::WitnessMismatch,
                    "Chevalley recipe " + std::to_string(r.n) +
                        " misses its target");
      out.push_back(vals[k]);
    }
  }
  return out;
}

} // namespace sqpulse
