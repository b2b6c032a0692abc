#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qifs/density.hpp"

namespace qifs {

// One branch of a QIFS: dynamics V_i, optional weight W_i, optional potential H_i.
struct Branch {
  ComplexMatrix v;
  std::optional<ComplexMatrix> w;
  std::optional<ComplexMatrix> h;
};

enum class NormalizationMode {
  OperatorNormalized,  // weights p_i(rho) = tr(W_i rho W_i*), sum W_i* W_i = I
  ConstantWeights,     // rho-independent p_i stored in constant_weights
};

enum class OperatorFamily { Weights, Potential };

struct QifsSystem {
  std::size_t dim = 0;
  std::vector<Branch> branches;
  NormalizationMode mode = NormalizationMode::OperatorNormalized;
  std::vector<double> constant_weights;  // used only in ConstantWeights mode

  std::size_t k() const { return branches.size(); }
};

inline ComplexMatrix weight_normalization(const QifsSystem& sys) {
  ComplexMatrix s(sys.dim, sys.dim);
  for (const Branch& b : sys.branches) {
    if (!b.w) throw MissingWeights();
    s = s + adjoint(*b.w) * (*b.w);
  }
  return s;
}

inline ComplexMatrix kraus_normalization(const QifsSystem& sys) {
  ComplexMatrix s(sys.dim, sys.dim);
  for (const Branch& b : sys.branches) s = s + adjoint(b.v) * b.v;
  return s;
}

inline void validate_system(const QifsSystem& sys, double tol = tol_norm) {
  if (sys.k() < 1) throw ValidationError("a system needs at least one branch");
  if (sys.dim < 1) throw ValidationError("system dimension must be at least 1");
  for (std::size_t i = 0; i < sys.k(); ++i) {
    const Branch& b = sys.branches[i];
    auto check = [&](const ComplexMatrix& m, const char* name) {
      if (m.rows() != sys.dim || m.cols() != sys.dim)
        throw DimensionMismatch("branch " + std::to_string(i) + " operator " + name +
                                " does not match the system dimension");
    };
    check(b.v, "V");
    if (b.w) check(*b.w, "W");
    if (b.h) check(*b.h, "H");
  }
  if (sys.mode == NormalizationMode::OperatorNormalized) {
    ComplexMatrix s = weight_normalization(sys);
    const double dev = max_abs(s - ComplexMatrix::identity(sys.dim));
    if (dev > tol)
      throw ValidationError("sum W_i* W_i deviates from the identity by " +
                            std::to_string(dev));
  } else {
    if (sys.constant_weights.size() != sys.k())
      throw ValidationError("constant weight count does not match branch count");
    double sum = 0.0;
    for (double p : sys.constant_weights) {
      if (p < 0.0) throw ValidationError("constant weights must be nonnegative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol)
      throw ValidationError("constant weights sum to " + std::to_string(sum));
  }
}

// p_i(rho) = tr(W_i rho W_i*), clamped to [0,1]; stored p_i in constant mode.
inline double branch_prob(const QifsSystem& sys, std::size_t i, const DensityMatrix& rho) {
  if (sys.mode == NormalizationMode::ConstantWeights) {
    if (i >= sys.constant_weights.size()) throw MissingWeights();
    return sys.constant_weights[i];
  }
  const Branch& b = sys.branches.at(i);
  if (!b.w) throw MissingWeights();
  const double p = trace((*b.w) * rho.matrix() * adjoint(*b.w)).real();
  return std::min(1.0, std::max(0.0, p));
}

// F_i(rho) = V_i rho V_i* / tr(V_i rho V_i*)
inline DensityMatrix branch_map(const QifsSystem& sys, std::size_t i,
                                const DensityMatrix& rho) {
  const Branch& b = sys.branches.at(i);
  ComplexMatrix m = b.v * rho.matrix() * adjoint(b.v);
  const double t = trace(m).real();
  if (t <= tol_branch) throw DegenerateBranch(i, branch_prob(sys, i, rho), t);
  return validate_density(cplx(1.0 / t, 0.0) * m);
}

// Lambda(rho) = sum_i p_i(rho) F_i(rho). Branches with p_i <= tol_branch are
// skipped; a branch whose image trace vanishes while carrying real weight is
// a modeling error, not noise.
inline DensityMatrix lambda_map(const QifsSystem& sys, const DensityMatrix& rho) {
  ComplexMatrix acc(sys.dim, sys.dim);
  for (std::size_t i = 0; i < sys.k(); ++i) {
    const double p = branch_prob(sys, i, rho);
    if (p <= tol_branch) continue;
    const Branch& b = sys.branches[i];
    ComplexMatrix m = b.v * rho.matrix() * adjoint(b.v);
    const double t = trace(m).real();
    if (t <= tol_branch) {
      if (p > 1e-9) throw DegenerateBranch(i, p, t);
      continue;  // negligible mass on an unvisited branch
    }
    acc = acc + cplx(p / t, 0.0) * m;
  }
  return validate_density(hermitize(acc));
}

// L_X(rho) = sum_i tr(X_i rho X_i*) V_i rho V_i*, X = W or H; not normalized.
inline ComplexMatrix ruelle_apply(const QifsSystem& sys, const DensityMatrix& rho,
                                  OperatorFamily family) {
  ComplexMatrix acc(sys.dim, sys.dim);
  for (std::size_t i = 0; i < sys.k(); ++i) {
    const Branch& b = sys.branches[i];
    double coeff;
    if (family == OperatorFamily::Weights) {
      coeff = branch_prob(sys, i, rho);
    } else {
      if (!b.h) throw MissingPotential();
      coeff = trace((*b.h) * rho.matrix() * adjoint(*b.h)).real();
    }
    acc = acc + cplx(coeff, 0.0) * (b.v * rho.matrix() * adjoint(b.v));
  }
  return hermitize(acc);
}

struct FixedPointResult {
  DensityMatrix rho;
  std::size_t iterations = 0;
  double residual = 0.0;  // hs distance between the last two iterates
};

// Plain Picard iteration of Lambda from rho0.
inline FixedPointResult fixed_point(const QifsSystem& sys, const DensityMatrix& rho0,
                                    double tol = 1e-13,
                                    std::size_t max_iter = 200000) {
  DensityMatrix cur = rho0;
  double residual = 0.0;
  for (std::size_t n = 1; n <= max_iter; ++n) {
    DensityMatrix next = lambda_map(sys, cur);
    residual = hs_distance(next, cur);
    cur = next;
    if (residual < tol) return FixedPointResult{std::move(cur), n, residual};
  }
  throw NoConvergence(max_iter, residual, false, cur.matrix().data(), sys.dim);
}

// n-fold application of the Kraus channel rho -> sum_i V_i rho V_i*.
inline DensityMatrix iterate_cptp(const QifsSystem& sys, const DensityMatrix& rho,
                                  std::size_t n) {
  const double dev = max_abs(kraus_normalization(sys) - ComplexMatrix::identity(sys.dim));
  if (dev > tol_norm) throw NotTracePreserving(dev);
  ComplexMatrix cur = rho.matrix();
  for (std::size_t step = 0; step < n; ++step) {
    ComplexMatrix acc(sys.dim, sys.dim);
    for (const Branch& b : sys.branches) acc = acc + b.v * cur * adjoint(b.v);
    cur = hermitize(acc);
  }
  return validate_density(cur);
}

}  // namespace qifs
