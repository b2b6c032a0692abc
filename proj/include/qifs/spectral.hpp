#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "qifs/system.hpp"

namespace qifs {

struct EigenPair {
  double beta = 0.0;
  DensityMatrix rho_beta;
  double residual = 0.0;  // hs norm of L(rho_beta) - beta rho_beta
};

// Power iteration for L_X(rho) = beta rho, normalizing by trace so iterates
// stay in M_N and beta = tr(L(rho)) at the fixed point. A sustained period-2
// residual pattern is reported as non-convergence with a dominance warning
// (the dominant eigenvalue need not be unique).
inline EigenPair power_eigenpair(const QifsSystem& sys, const DensityMatrix& rho0,
                                 double tol = 1e-13, std::size_t max_iter = 100000,
                                 OperatorFamily family = OperatorFamily::Potential) {
  DensityMatrix prev = rho0;
  DensityMatrix cur = rho0;
  std::size_t oscillating = 0;
  double residual = 0.0;
  for (std::size_t n = 1; n <= max_iter; ++n) {
    ComplexMatrix image = ruelle_apply(sys, cur, family);
    const double t = trace(image).real();
    if (t <= tol_branch) throw ZeroImage();
    DensityMatrix next = validate_density(cplx(1.0 / t, 0.0) * image);
    residual = hs_distance(next, cur);
    if (residual < tol) {
      ComplexMatrix check = ruelle_apply(sys, next, family);
      const double beta = trace(check).real();
      const double eig_res =
          frobenius_norm(check - cplx(beta, 0.0) * next.matrix());
      return EigenPair{beta, std::move(next), eig_res};
    }
    if (n > 1 && hs_distance(next, prev) < tol) {
      if (++oscillating >= 50)
        throw NoConvergence(n, residual, true, next.matrix().data(), sys.dim);
    } else {
      oscillating = 0;
    }
    prev = std::move(cur);
    cur = std::move(next);
  }
  throw NoConvergence(max_iter, residual, false, cur.matrix().data(), sys.dim);
}

// Diagonal 2x2 eigenproblem
//   a rho1 + b rho4 = lambda rho1
//   c rho1 + d rho4 = lambda rho4
// normalized to rho1 + rho4 = 1. The minus-branch state solves the
// eigen-equation but may have entries outside [0,1].
struct DiagonalState {
  double rho1 = 0.0;
  double rho4 = 0.0;
};

struct ClosedForm2x2 {
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  DiagonalState state_plus;
  DiagonalState state_minus;
};

inline ClosedForm2x2 closed_form_2x2(double a, double b, double c, double d) {
  if (a < 0.0 || b < 0.0 || c < 0.0 || d < 0.0)
    throw ValidationError("closed_form_2x2 needs nonnegative coefficients");
  const double zeta = std::sqrt((d - a) * (d - a) + 4.0 * b * c);
  ClosedForm2x2 out;
  out.lambda_plus = 0.5 * (a + d) + 0.5 * zeta;
  out.lambda_minus = 0.5 * (a + d) - 0.5 * zeta;

  auto c_form = [&](double sign) {
    const double denom = (a - d) + sign * zeta + 2.0 * c;
    if (std::abs(denom) < 1e-300)
      throw DegenerateSystem("eigenstate coordinates sum to zero; cannot normalize");
    return DiagonalState{((a - d) + sign * zeta) / denom, 2.0 * c / denom};
  };
  // rearrangement of the same eigenvector when the c coefficient vanishes;
  // the sign of zeta flips relative to the eigenvalue branch
  auto b_form = [&](double sign) {
    const double denom = (a - 2.0 * b - d) - sign * zeta;
    if (std::abs(denom) < 1e-300)
      throw DegenerateSystem("eigenstate coordinates sum to zero; cannot normalize");
    return DiagonalState{-2.0 * b / denom, ((a - d) - sign * zeta) / denom};
  };

  if (c > 0.0) {
    out.state_plus = c_form(+1.0);
    out.state_minus = c_form(-1.0);
  } else if (b > 0.0) {
    out.state_plus = b_form(+1.0);
    out.state_minus = b_form(-1.0);
  } else {
    if (a == d)
      throw DegenerateSystem("b=c=0 with a=d: every diagonal state is an eigenstate");
    out.state_plus = a > d ? DiagonalState{1.0, 0.0} : DiagonalState{0.0, 1.0};
    out.state_minus = a > d ? DiagonalState{0.0, 1.0} : DiagonalState{1.0, 0.0};
  }
  return out;
}

// Classical stochastic matrix lifted to matrix form: branches carry the
// entries of P (or their square roots) on matrix units.
struct StochasticEmbedding {
  std::vector<std::vector<double>> p_matrix;  // column stochastic
  std::vector<ComplexMatrix> v_family;        // branch order (0,0),(0,1),(1,0),(1,1),...
  std::vector<double> q_choices;              // scalar weight per branch
};

inline void require_column_stochastic(const std::vector<std::vector<double>>& p,
                                      double tol = tol_norm) {
  const std::size_t n = p.size();
  for (const auto& row : p)
    if (row.size() != n) throw NotStochastic("matrix is not square");
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i][j] < 0.0) throw NotStochastic("negative entry");
      col += p[i][j];
    }
    if (std::abs(col - 1.0) > tol)
      throw NotStochastic("column " + std::to_string(j) + " sums to " + std::to_string(col));
  }
}

// V_i = p_ij |i><j| with scalars q_i = 1/p_ij: the fixed state of
// L(rho) = sum q_i V_i rho V_i* carries the stationary vector of P on its
// diagonal (and the eigenvalue is 1).
inline StochasticEmbedding embed_perron(const std::vector<std::vector<double>>& p) {
  require_column_stochastic(p);
  if (p.size() != 2) throw ValidationError("the Perron embedding is a 2x2 construction");
  StochasticEmbedding e;
  e.p_matrix = p;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      if (p[i][j] <= 0.0) throw ZeroEntry(i, j);
      ComplexMatrix v(2, 2);
      v(i, j) = p[i][j];
      e.v_family.push_back(std::move(v));
      e.q_choices.push_back(1.0 / p[i][j]);
    }
  return e;
}

// Alternative scalar family: q1, q3 free, q2 and q4 balancing them so the
// fixed state keeps the stationary diagonal.
inline StochasticEmbedding embed_perron_alt(const std::vector<std::vector<double>>& p,
                                            double q1, double q3) {
  StochasticEmbedding e = embed_perron(p);
  const double p00 = p[0][0], p01 = p[0][1], p10 = p[1][0], p11 = p[1][1];
  e.q_choices[0] = q1;
  e.q_choices[1] = (1.0 - q1 * p00 * p00) / (p01 * p10);
  e.q_choices[2] = q3;
  e.q_choices[3] = (1.0 - q3 * p10 * p01) / (p11 * p11);
  return e;
}

// View an embedding as a QIFS whose potential reproduces the scalars:
// H_i = sqrt(q_i) I gives tr(H_i rho H_i*) = q_i on unit-trace rho.
inline QifsSystem embedding_system(const StochasticEmbedding& e) {
  QifsSystem sys;
  sys.dim = e.v_family.front().rows();
  sys.mode = NormalizationMode::ConstantWeights;
  sys.constant_weights.assign(e.v_family.size(), 1.0 / double(e.v_family.size()));
  for (std::size_t i = 0; i < e.v_family.size(); ++i) {
    Branch b;
    b.v = e.v_family[i];
    if (e.q_choices[i] < 0.0)
      throw ValidationError("negative scalar weight cannot be carried by a potential");
    b.h = std::sqrt(e.q_choices[i]) * ComplexMatrix::identity(sys.dim);
    sys.branches.push_back(std::move(b));
  }
  validate_system(sys);
  return sys;
}

// Homogeneous QIFS with k = N^2 branches V_ij = sqrt(p_ij)|i><j|; the weight
// normalization sum V* V = I is exactly the column-stochasticity of P.
inline QifsSystem embed_markov_kraus(const std::vector<std::vector<double>>& p) {
  require_column_stochastic(p);
  const std::size_t n = p.size();
  QifsSystem sys;
  sys.dim = n;
  sys.mode = NormalizationMode::OperatorNormalized;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Branch b;
      b.v = ComplexMatrix(n, n);
      b.v(i, j) = std::sqrt(p[i][j]);
      b.w = b.v;
      sys.branches.push_back(std::move(b));
    }
  validate_system(sys);
  return sys;
}

}  // namespace qifs
