#pragma once

#include <cmath>
#include <vector>

#include "qifs/complex_matrix.hpp"
#include "qifs/errors.hpp"

namespace qifs {

// Hermitian, positive semidefinite, unit-trace matrix. Construction goes
// through validate_density; the stored matrix is hermitized.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  const ComplexMatrix& matrix() const { return m_; }
  std::size_t dim() const { return m_.rows(); }

  friend DensityMatrix validate_density(const ComplexMatrix& m, double tol);

 private:
  explicit DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {}
  ComplexMatrix m_;
};

inline DensityMatrix validate_density(const ComplexMatrix& m, double tol = tol_psd) {
  if (!m.square()) throw DimensionMismatch("density matrix must be square");
  const double defect = hermiticity_defect(m);
  if (defect > tol) throw NotHermitian(defect);
  ComplexMatrix h = hermitize(m);
  const double tr = trace(h).real();
  if (std::abs(tr - 1.0) > tol) throw TraceNotOne(tr);
  EigenDecomposition d = hermitian_eigen(h);
  if (d.eigenvalues.front() < -tol) throw NotPositive(d.eigenvalues.front());
  return DensityMatrix(std::move(h));
}

// Length-N complex vector with unit Euclidean norm.
class PureState {
 public:
  explicit PureState(std::vector<cplx> amplitudes, double tol = tol_psd)
      : amplitudes_(std::move(amplitudes)) {
    double n2 = 0.0;
    for (const cplx& a : amplitudes_) n2 += std::norm(a);
    if (std::abs(std::sqrt(n2) - 1.0) > tol) throw NotNormalized(std::sqrt(n2));
  }

  const std::vector<cplx>& amplitudes() const { return amplitudes_; }
  std::size_t dim() const { return amplitudes_.size(); }

 private:
  std::vector<cplx> amplitudes_;
};

inline DensityMatrix projector(const PureState& psi) {
  const std::size_t n = psi.dim();
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = psi.amplitudes()[i] * std::conj(psi.amplitudes()[j]);
  return validate_density(m, 1e-12);
}

// sqrt(tr[(a-b)^2])
inline double hs_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("states have different dimension");
  return frobenius_norm(a.matrix() - b.matrix());
}

// tr sqrt((a-b)^2) = sum of |eigenvalues| of the difference
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("states have different dimension");
  EigenDecomposition d = hermitian_eigen(a.matrix() - b.matrix());
  double s = 0.0;
  for (double lam : d.eigenvalues) s += std::abs(lam);
  return s;
}

// sqrt(2 (1 - tr sqrt(sqrt(a) b sqrt(a))))
inline double bures_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch("states have different dimension");
  ComplexMatrix ra = matrix_sqrt_psd(a.matrix());
  ComplexMatrix inner = ra * b.matrix() * ra;
  ComplexMatrix root = matrix_sqrt_psd(hermitize(inner));
  double fidelity = trace(root).real();
  // the fidelity term cannot exceed 1; trim round-off before the outer root
  if (fidelity > 1.0) fidelity = 1.0;
  return std::sqrt(2.0 * (1.0 - fidelity));
}

inline DensityMatrix partial_trace_b(const DensityMatrix& rho, std::size_t dim_a,
                                     std::size_t dim_b) {
  return validate_density(partial_trace_b(rho.matrix(), dim_a, dim_b));
}

inline DensityMatrix maximally_mixed(std::size_t n) {
  return validate_density(cplx(1.0 / double(n), 0.0) * ComplexMatrix::identity(n));
}

// -sum lambda log lambda, natural log, 0 log 0 := 0.
inline double von_neumann_entropy(const DensityMatrix& rho) {
  EigenDecomposition d = hermitian_eigen(rho.matrix());
  double s = 0.0;
  for (double lam : d.eigenvalues) {
    if (lam < tol_psd) continue;  // clamp round-off and exact zeros
    s -= lam * std::log(lam);
  }
  return s;
}

}  // namespace qifs
