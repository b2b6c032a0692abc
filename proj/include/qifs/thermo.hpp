#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qifs/measures.hpp"
#include "qifs/spectral.hpp"
#include "qifs/system.hpp"

namespace qifs {

// ---------------------------------------------------------------------------
// stationary entropy
// ---------------------------------------------------------------------------

// weight operator of branch j; constant-weight systems carry sqrt(p_j) I
inline ComplexMatrix weight_operator(const QifsSystem& sys, std::size_t j) {
  if (sys.branches[j].w) return *sys.branches[j].w;
  if (sys.mode == NormalizationMode::ConstantWeights)
    return std::sqrt(sys.constant_weights[j]) * ComplexMatrix::identity(sys.dim);
  throw MissingWeights();
}

namespace detail {

// per-branch data at rho_w: p_i = tr(W_i rho W_i*), t_i = tr(V_i rho V_i*);
// branches with negligible weight on a degenerate image are dropped
struct BranchTrace {
  std::size_t index;
  double p;
  double t;
  ComplexMatrix image;  // V_i rho V_i*, not normalized
};

inline std::vector<BranchTrace> branch_traces(const QifsSystem& sys,
                                              const DensityMatrix& rho_w) {
  std::vector<BranchTrace> out;
  for (std::size_t i = 0; i < sys.k(); ++i) {
    BranchTrace bt;
    bt.index = i;
    bt.p = branch_prob(sys, i, rho_w);
    bt.image = sys.branches[i].v * rho_w.matrix() * adjoint(sys.branches[i].v);
    bt.t = trace(bt.image).real();
    if (bt.t <= tol_branch) {
      if (bt.p > 1e-9) throw DegenerateBranch(i, bt.p, bt.t);
      continue;
    }
    out.push_back(std::move(bt));
  }
  return out;
}

}  // namespace detail

// h_V(W) = sum_i p_i(rho_w) sum_j eta(c_ij) with conditional weights
// c_ij = tr(W_j F_i(rho_w) W_j*); expects a Lambda-fixed rho_w
inline double stationary_entropy(const QifsSystem& sys, const DensityMatrix& rho_w) {
  double h = 0.0;
  for (const auto& bt : detail::branch_traces(sys, rho_w)) {
    if (bt.p <= word_cutoff) continue;
    const ComplexMatrix f = cplx(1.0 / bt.t, 0.0) * bt.image;
    double inner = 0.0;
    for (std::size_t j = 0; j < sys.k(); ++j) {
      const ComplexMatrix wj = weight_operator(sys, j);
      const double c = trace(wj * f * adjoint(wj)).real();
      if (c <= word_cutoff) continue;
      inner += eta_fn(c);
    }
    h += bt.p * inner;
  }
  return h;
}

// factored form of the same quantity, kept on raw branch images:
// h = sum_i (p_i/t_i) sum_j -u_ij log(u_ij/t_i), u_ij = tr(W_j V_i rho V_i* W_j*)
inline double stationary_entropy_alt(const QifsSystem& sys, const DensityMatrix& rho_w) {
  double h = 0.0;
  for (const auto& bt : detail::branch_traces(sys, rho_w)) {
    if (bt.p <= word_cutoff) continue;
    double inner = 0.0;
    for (std::size_t j = 0; j < sys.k(); ++j) {
      const ComplexMatrix wj = weight_operator(sys, j);
      const double u = trace(wj * bt.image * adjoint(wj)).real();
      if (u / bt.t <= word_cutoff) continue;
      inner -= u * std::log(u / bt.t);
    }
    h += (bt.p / bt.t) * inner;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Markov chain entropy
// ---------------------------------------------------------------------------

// stationary vector of a column-stochastic matrix by damped power iteration
// ((P+I)/2 has the same stationary vector and kills period-2 cycling)
inline std::vector<double> markov_stationary(const std::vector<std::vector<double>>& p,
                                             double tol = 1e-13,
                                             std::size_t max_iter = 1000000) {
  const std::size_t n = p.size();
  std::vector<double> x(n, 1.0 / double(n));
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) y[i] += 0.5 * p[i][j] * x[j];
    double mass = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] += 0.5 * x[i];
      mass += y[i];
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] /= mass;
      diff += std::abs(y[i] - x[i]);
    }
    x = std::move(y);
    if (diff < tol) return x;
  }
  throw NoConvergence(max_iter, 0.0, false, {}, n);
}

inline bool is_irreducible(const std::vector<std::vector<double>>& p) {
  const std::size_t n = p.size();
  // entrywise positivity of (I+P)^(n-1)
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    m[i][i] = 1.0;
    for (std::size_t j = 0; j < n; ++j) m[i][j] += p[i][j];
  }
  std::vector<std::vector<double>> acc(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) acc[i][i] = 1.0;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::vector<std::vector<double>> nxt(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n; ++l)
        for (std::size_t j = 0; j < n; ++j) nxt[i][j] += acc[i][l] * m[l][j];
    acc = std::move(nxt);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!(acc[i][j] > 0.0)) return false;
  return true;
}

// H(P) = -sum_j pi_j sum_i p_ij log p_ij with column-stationary pi;
// allow_reducible bypasses the irreducibility check (e.g. P = I)
inline double markov_entropy(const std::vector<std::vector<double>>& p,
                             bool allow_reducible = false) {
  require_column_stochastic(p);
  if (!allow_reducible && !is_irreducible(p)) throw NotIrreducible();
  const std::vector<double> pi = markov_stationary(p);
  double h = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j)
    for (std::size_t i = 0; i < p.size(); ++i) h += pi[j] * eta_fn(p[i][j]);
  return h;
}

// ---------------------------------------------------------------------------
// pressure inequalities
// ---------------------------------------------------------------------------

struct PressureReport {
  double entropy_term = 0.0;
  double potential_term = 0.0;
  double pressure = 0.0;
  double bound = 0.0;
  double gap = 0.0;
  double equality_residual = 0.0;
};

struct CoordinatePressureReport {
  double entropy_term = 0.0;
  double potential_h_term = 0.0;      // sum_j p_j log tr(H_j rho_b H_j*)
  double potential_coord_term = 0.0;  // sum_j p_j log ratio_j
  double pressure = 0.0;
  double bound = 0.0;
  double gap = 0.0;
  double equality_residual = 0.0;
  std::size_t l = 1;
  std::size_t m = 1;
};

namespace detail {

inline double potential_trace(const QifsSystem& sys, std::size_t j,
                              const DensityMatrix& rho_beta) {
  if (!sys.branches[j].h) throw MissingPotential();
  const ComplexMatrix& hj = *sys.branches[j].h;
  return trace(hj * rho_beta.matrix() * adjoint(hj)).real();
}

// max over branch pairs of the equality-condition mismatch
// |(1/beta) scale_j - tr(W_j V_i rho_w V_i* W_j*)/tr(V_i rho_w V_i*)|
inline double equality_residual(const QifsSystem& sys,
                                const std::vector<BranchTrace>& traces,
                                double beta, const std::vector<double>& scale) {
  double worst = 0.0;
  for (const auto& bt : traces) {
    for (std::size_t j = 0; j < sys.k(); ++j) {
      const ComplexMatrix wj = weight_operator(sys, j);
      const double c = trace(wj * bt.image * adjoint(wj)).real() / bt.t;
      worst = std::max(worst, std::abs(scale[j] / beta - c));
    }
  }
  return worst;
}

}  // namespace detail

// trace form: h_V(W) + sum_j p_j log(tr(H_j rho_b H_j*) tr(V_j rho_b V_j*)) <= log beta
inline PressureReport basic_inequality(const QifsSystem& sys, const DensityMatrix& rho_w,
                                       const EigenPair& eigen) {
  PressureReport r;
  r.entropy_term = stationary_entropy(sys, rho_w);
  std::vector<double> scale(sys.k(), 0.0);
  for (std::size_t j = 0; j < sys.k(); ++j) {
    const double hj = detail::potential_trace(sys, j, eigen.rho_beta);
    const ComplexMatrix& vj = sys.branches[j].v;
    const double vt = trace(vj * eigen.rho_beta.matrix() * adjoint(vj)).real();
    scale[j] = hj * vt;
    if (scale[j] <= 1e-300) throw LogOfZero(j);
    r.potential_term += branch_prob(sys, j, rho_w) * std::log(scale[j]);
  }
  r.pressure = r.entropy_term + r.potential_term;
  r.bound = std::log(eigen.beta);
  r.gap = r.bound - r.pressure;
  r.equality_residual =
      detail::equality_residual(sys, detail::branch_traces(sys, rho_w), eigen.beta, scale);
  return r;
}

namespace detail {

inline bool scaled_matrix_unit(const ComplexMatrix& v, cplx& entry) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < v.rows(); ++r)
    for (std::size_t c = 0; c < v.cols(); ++c)
      if (std::abs(v(r, c)) > 1e-14) {
        ++hits;
        entry = v(r, c);
      }
  return hits == 1;
}

}  // namespace detail

// coordinate form at 1-indexed (l, m). A scaled matrix unit v|r><c| moves
// mass from coordinate (c,c) to (r,r) with gain |v|^2, independent of (l,m);
// other branch shapes use the literal entry ratio, which must be a positive
// real for the log to make sense.
inline CoordinatePressureReport basic_inequality_coords(const QifsSystem& sys,
                                                        const DensityMatrix& rho_w,
                                                        const EigenPair& eigen,
                                                        std::size_t l, std::size_t m) {
  if (l < 1 || m < 1 || l > sys.dim || m > sys.dim)
    throw ValidationError("coordinate indices are 1-based and bounded by the dimension");
  CoordinatePressureReport r;
  r.l = l;
  r.m = m;
  const cplx rho_lm = eigen.rho_beta.matrix()(l - 1, m - 1);
  if (std::abs(rho_lm) <= 1e-12)
    throw CoordinateUnusable(l, m, "eigenstate entry vanishes at this coordinate");
  r.entropy_term = stationary_entropy(sys, rho_w);
  std::vector<double> scale(sys.k(), 0.0);
  for (std::size_t j = 0; j < sys.k(); ++j) {
    const ComplexMatrix& vj = sys.branches[j].v;
    double ratio;
    cplx unit_entry;
    if (detail::scaled_matrix_unit(vj, unit_entry)) {
      ratio = std::norm(unit_entry);
    } else {
      const cplx num = (vj * eigen.rho_beta.matrix() * adjoint(vj))(l - 1, m - 1);
      const cplx q = num / rho_lm;
      if (std::abs(q.imag()) > 1e-12 || q.real() <= 1e-300)
        throw CoordinateUnusable(l, m,
                                 "branch " + std::to_string(j) +
                                     " has a non-positive coordinate ratio");
      ratio = q.real();
    }
    const double hj = detail::potential_trace(sys, j, eigen.rho_beta);
    if (hj <= 1e-300) throw LogOfZero(j);
    if (ratio <= 1e-300)
      throw CoordinateUnusable(l, m, "branch " + std::to_string(j) + " has zero gain");
    const double pj = branch_prob(sys, j, rho_w);
    r.potential_h_term += pj * std::log(hj);
    r.potential_coord_term += pj * std::log(ratio);
    // the equality condition is stated for the trace form; the residual keeps
    // that scale regardless of the coordinate pair
    scale[j] = hj * trace(vj * eigen.rho_beta.matrix() * adjoint(vj)).real();
  }
  r.pressure = r.entropy_term + r.potential_h_term + r.potential_coord_term;
  r.bound = std::log(eigen.beta);
  r.gap = r.bound - r.pressure;
  r.equality_residual =
      detail::equality_residual(sys, detail::branch_traces(sys, rho_w), eigen.beta, scale);
  return r;
}

// ---------------------------------------------------------------------------
// classic (matrix) inequality
// ---------------------------------------------------------------------------

struct ClassicReport {
  double entropy_term = 0.0;
  double potential_term = 0.0;
  double lhs = 0.0;
  double bound = 0.0;  // log of the dominant eigenvalue of exp(A)
  double gap = 0.0;
  double beta = 0.0;
  std::vector<double> pi;  // stationary vector of Q
};

namespace detail {

// dominant eigenpair of an entrywise-positive matrix by power iteration;
// transpose=true iterates the left vector
inline std::pair<double, std::vector<double>> perron_power(
    const std::vector<std::vector<double>>& e, bool transpose, double tol = 1e-14,
    std::size_t max_iter = 1000000) {
  const std::size_t n = e.size();
  std::vector<double> x(n, 1.0 / double(n));
  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        y[i] += transpose ? e[j][i] * x[j] : e[i][j] * x[j];
    double mass = 0.0;
    for (double v : y) mass += v;
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] /= mass;
      diff += std::abs(y[i] - x[i]);
    }
    lambda = mass;
    x = std::move(y);
    if (diff < tol) return {lambda, x};
  }
  throw NoConvergence(max_iter, 0.0, false, {}, n);
}

}  // namespace detail

// -sum_j pi_j sum_i q_ij log q_ij + sum_j pi_j sum_i q_ij a_ij <= log beta
inline ClassicReport classic_inequality(const std::vector<std::vector<double>>& a,
                                        const std::vector<std::vector<double>>& q) {
  require_column_stochastic(q);
  const std::size_t n = q.size();
  if (a.size() != n) throw ValidationError("potential and stochastic matrix sizes differ");
  for (const auto& row : a)
    if (row.size() != n) throw ValidationError("potential matrix is not square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!(q[i][j] > 0.0)) throw NotStochastic("entries must be positive");
  std::vector<std::vector<double>> e(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) e[i][j] = std::exp(a[i][j]);
  ClassicReport r;
  r.beta = detail::perron_power(e, false).first;
  r.pi = markov_stationary(q);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      r.entropy_term += r.pi[j] * eta_fn(q[i][j]);
      r.potential_term += r.pi[j] * q[i][j] * a[i][j];
    }
  r.lhs = r.entropy_term + r.potential_term;
  r.bound = std::log(r.beta);
  r.gap = r.bound - r.lhs;
  return r;
}

// equality choice q_ij = e^{a_ij} v_i/(beta v_j) with v the left dominant
// eigenvector of exp(A)
inline std::vector<std::vector<double>> classic_argmax(
    const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> e(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) e[i][j] = std::exp(a[i][j]);
  auto [beta, v] = detail::perron_power(e, true);
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q[i][j] = e[i][j] * v[i] / (beta * v[j]);
  return q;
}

// the 2x2 matrix-unit construction carrying (A, Q) into a k=4 system whose
// coordinate inequality at l=m=1 reproduces the classic one
inline QifsSystem build_basic_from_classic(const std::vector<std::vector<double>>& a,
                                           const std::vector<std::vector<double>>& q) {
  require_column_stochastic(q);
  if (a.size() != 2 || q.size() != 2)
    throw ValidationError("the bridge construction is a 2x2 recipe");
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      if (!(q[i][j] > 0.0)) throw NotStochastic("entries must be positive");
  QifsSystem sys;
  sys.dim = 2;
  sys.mode = NormalizationMode::OperatorNormalized;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      Branch b;
      b.v = ComplexMatrix(2, 2);
      b.v(i, j) = 1.0;
      ComplexMatrix w(2, 2);
      w(i, j) = std::sqrt(q[i][j]);
      b.w = w;
      ComplexMatrix h(2, 2);
      h(i, 0) = std::sqrt(std::exp(a[i][j]));
      h(i, 1) = h(i, 0);
      b.h = h;
      sys.branches.push_back(std::move(b));
    }
  validate_system(sys);
  return sys;
}

// ---------------------------------------------------------------------------
// maximizer for unitary dynamics
// ---------------------------------------------------------------------------

struct MaximizerResult {
  std::vector<ComplexMatrix> w_family;
  double alpha = 0.0;
};

// W_i = sqrt(alpha tr(H_i rho_b H_i*)/beta) I with alpha chosen so the family
// is normalized; for unitary V the resulting inequality is tight
inline MaximizerResult maximizer_unitary(const QifsSystem& sys, const EigenPair& eigen) {
  const ComplexMatrix id = ComplexMatrix::identity(sys.dim);
  std::vector<double> s(sys.k(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < sys.k(); ++i) {
    const ComplexMatrix& v = sys.branches[i].v;
    if (max_abs(adjoint(v) * v - id) > tol_norm) throw NotUnitary(i);
    const double ht = detail::potential_trace(sys, i, eigen.rho_beta);
    if (ht <= 1e-300) throw ZeroPotentialTrace(i);
    s[i] = ht / eigen.beta;
    total += s[i];
  }
  MaximizerResult r;
  r.alpha = 1.0 / total;
  for (std::size_t i = 0; i < sys.k(); ++i)
    r.w_family.push_back(std::sqrt(r.alpha * s[i]) * id);
  return r;
}

inline QifsSystem with_weight_family(QifsSystem sys,
                                     const std::vector<ComplexMatrix>& w_family) {
  if (w_family.size() != sys.k())
    throw ValidationError("weight family size differs from branch count");
  sys.mode = NormalizationMode::OperatorNormalized;
  sys.constant_weights.clear();
  for (std::size_t i = 0; i < sys.k(); ++i) sys.branches[i].w = w_family[i];
  validate_system(sys);
  return sys;
}

// ---------------------------------------------------------------------------
// capacity-cost on a simplex grid of weight families
// ---------------------------------------------------------------------------

struct GridSpec {
  std::size_t points_per_edge = 21;          // t_i on {0, 1/m, ..., 1}, m = points-1
  std::vector<ComplexMatrix> unitaries;      // per-branch U_i, identity if empty
};

struct GridCandidate {
  std::size_t index = 0;
  std::vector<double> t;
  double entropy = 0.0;
  double cost = 0.0;
};

inline std::vector<std::vector<double>> simplex_compositions(std::size_t k,
                                                             std::size_t divisions) {
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> n(k, 0);
  // lexicographic ascending in (n_1, ..., n_{k-1}); n_k is the remainder
  auto rec = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
    if (pos + 1 == k) {
      n[pos] = left;
      std::vector<double> t(k);
      for (std::size_t i = 0; i < k; ++i) t[i] = double(n[i]) / double(divisions);
      out.push_back(std::move(t));
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      n[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, divisions);
  return out;
}

inline std::size_t worker_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("QIFS_THREADS")) {
    const long cap = std::atol(env);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
  }
  return hw;
}

// evaluate every candidate W_i = sqrt(t_i) U_i on the simplex grid:
// Lambda-fixed state, stationary entropy, and cost tr(h_op rho)
inline std::vector<GridCandidate> evaluate_grid(const QifsSystem& base,
                                                const ComplexMatrix& h_op,
                                                const GridSpec& grid = {}) {
  if (base.k() > 4)
    throw ValidationError("grid search supports at most 4 branches");
  if (grid.points_per_edge < 2)
    throw ValidationError("grid needs at least 2 points per edge");
  if (h_op.rows() != base.dim || h_op.cols() != base.dim)
    throw DimensionMismatch("cost operator dimension differs from the system dimension");
  if (hermiticity_defect(h_op) > 1e-12 * (1.0 + max_abs(h_op)))
    throw NotHermitian(hermiticity_defect(h_op));
  std::vector<ComplexMatrix> u = grid.unitaries;
  const ComplexMatrix id = ComplexMatrix::identity(base.dim);
  if (u.empty()) u.assign(base.k(), id);
  if (u.size() != base.k())
    throw ValidationError("unitary list size differs from branch count");
  for (std::size_t i = 0; i < u.size(); ++i)
    if (max_abs(adjoint(u[i]) * u[i] - id) > tol_norm) throw NotUnitary(i);

  const auto comps = simplex_compositions(base.k(), grid.points_per_edge - 1);
  std::vector<GridCandidate> cands(comps.size());
  auto eval_range = [&](std::size_t first, std::size_t stride) {
    for (std::size_t idx = first; idx < comps.size(); idx += stride) {
      QifsSystem sys = base;
      sys.mode = NormalizationMode::OperatorNormalized;
      sys.constant_weights.clear();
      for (std::size_t i = 0; i < sys.k(); ++i)
        sys.branches[i].w = std::sqrt(comps[idx][i]) * u[i];
      const DensityMatrix rho_w = fixed_point(sys, maximally_mixed(sys.dim)).rho;
      GridCandidate c;
      c.index = idx;
      c.t = comps[idx];
      c.entropy = stationary_entropy(sys, rho_w);
      c.cost = trace(h_op * rho_w.matrix()).real();
      cands[idx] = std::move(c);
    }
  };
  const std::size_t workers = std::min<std::size_t>(worker_count(), comps.size());
  if (workers <= 1) {
    eval_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back(eval_range, w, workers);
    for (auto& th : pool) th.join();
  }
  return cands;
}

struct CapacityResult {
  double capacity = 0.0;
  GridCandidate argmax;
};

struct LagrangianResult {
  double value = 0.0;
  GridCandidate argmax;
};

// C(a) = max entropy over candidates whose cost does not exceed a;
// ties keep the lowest grid index
inline CapacityResult capacity_from(const std::vector<GridCandidate>& cands, double a) {
  const GridCandidate* best = nullptr;
  for (const GridCandidate& c : cands) {
    if (c.cost > a) continue;
    if (!best || c.entropy > best->entropy) best = &c;
  }
  if (!best) throw EmptyFeasibleSet(a);
  return {best->entropy, *best};
}

// F(lambda) = max entropy - lambda cost, ties keep the lowest grid index
inline LagrangianResult lagrangian_from(const std::vector<GridCandidate>& cands,
                                        double lambda) {
  const GridCandidate* best = nullptr;
  double best_val = 0.0;
  for (const GridCandidate& c : cands) {
    const double val = c.entropy - lambda * c.cost;
    if (!best || val > best_val) {
      best = &c;
      best_val = val;
    }
  }
  if (!best) throw EmptyFeasibleSet(lambda);
  return {best_val, *best};
}

inline CapacityResult capacity_cost(const QifsSystem& base, const ComplexMatrix& h_op,
                                    double a, const GridSpec& grid = {}) {
  return capacity_from(evaluate_grid(base, h_op, grid), a);
}

inline LagrangianResult lagrangian_f(const QifsSystem& base, const ComplexMatrix& h_op,
                                     double lambda, const GridSpec& grid = {}) {
  return lagrangian_from(evaluate_grid(base, h_op, grid), lambda);
}

}  // namespace qifs
