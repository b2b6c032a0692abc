#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <vector>

#include "qifs/errors.hpp"

namespace qifs {

using cplx = std::complex<double>;

// Default tolerances shared across the library.
inline constexpr double tol_psd = 1e-9;     // Hermiticity / positivity / trace slack
inline constexpr double tol_norm = 1e-9;    // normalization of weight families
inline constexpr double tol_branch = 1e-12; // a branch below this trace is unvisited

// Dense row-major complex matrix. Dimensions in this library stay tiny
// (N <= ~16), so everything is by-value and unoptimized on purpose.
class ComplexMatrix {
 public:
  ComplexMatrix() : rows_(0), cols_(0) {}
  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, cplx(0.0, 0.0)) {}
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
      : rows_(rows), cols_(cols), a_(std::move(data)) {
    if (a_.size() != rows_ * cols_)
      throw DimensionMismatch("data length does not match rows*cols");
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  const std::vector<cplx>& data() const { return a_; }

 private:
  std::size_t rows_, cols_;
  std::vector<cplx> a_;
};

inline void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionMismatch("matrix shapes differ");
}

inline ComplexMatrix operator+(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b);
  ComplexMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) + b(i, j);
  return r;
}

inline ComplexMatrix operator-(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b);
  ComplexMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = a(i, j) - b(i, j);
  return r;
}

inline ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionMismatch("matrix product shapes differ");
  ComplexMatrix r(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx(0.0, 0.0)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

inline ComplexMatrix operator*(cplx s, const ComplexMatrix& a) {
  ComplexMatrix r(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) = s * a(i, j);
  return r;
}

inline ComplexMatrix operator*(double s, const ComplexMatrix& a) { return cplx(s, 0.0) * a; }

inline ComplexMatrix adjoint(const ComplexMatrix& a) {
  ComplexMatrix r(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(j, i) = std::conj(a(i, j));
  return r;
}

inline cplx trace(const ComplexMatrix& a) {
  if (!a.square()) throw DimensionMismatch("trace of a non-square matrix");
  cplx t(0.0, 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

// (m + m*)/2; kills anti-Hermitian round-off.
inline ComplexMatrix hermitize(const ComplexMatrix& m) {
  if (!m.square()) throw DimensionMismatch("hermitize needs a square matrix");
  ComplexMatrix r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      r(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
  return r;
}

inline double max_abs(const ComplexMatrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
  return m;
}

inline double frobenius_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

inline double hermiticity_defect(const ComplexMatrix& m) {
  double d = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      d = std::max(d, std::abs(m(i, j) - std::conj(m(j, i))));
  return d;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          r(i * b.rows() + p, j * b.cols() + q) = a(i, j) * b(p, q);
  return r;
}

// (tr_B m)_{ij} = sum_k m_{(i,k),(j,k)} under lexicographic tensor indexing.
inline ComplexMatrix partial_trace_b(const ComplexMatrix& m, std::size_t dim_a,
                                     std::size_t dim_b) {
  if (!m.square() || m.rows() != dim_a * dim_b)
    throw DimensionMismatch("partial trace needs a square dim_a*dim_b matrix");
  ComplexMatrix r(dim_a, dim_a);
  for (std::size_t i = 0; i < dim_a; ++i)
    for (std::size_t j = 0; j < dim_a; ++j)
      for (std::size_t k = 0; k < dim_b; ++k)
        r(i, j) += m(i * dim_b + k, j * dim_b + k);
  return r;
}

struct EigenDecomposition {
  std::vector<double> eigenvalues;  // ascending
  ComplexMatrix eigenvectors;       // column i pairs with eigenvalues[i]
};

// Cyclic Jacobi for complex Hermitian matrices. Each rotation is a phase
// followed by a real Givens rotation on the (p,q) plane; converged when the
// off-diagonal Frobenius mass drops below off_tol relative to the input scale.
inline EigenDecomposition hermitian_eigen(const ComplexMatrix& m,
                                          double off_tol = 1e-14) {
  if (!m.square()) throw DimensionMismatch("eigensolver needs a square matrix");
  const std::size_t n = m.rows();
  const double defect = hermiticity_defect(m);
  const double scale = std::max(1.0, frobenius_norm(m));
  if (defect > 1e-9 * scale) throw NotHermitian(defect);

  ComplexMatrix a = hermitize(m);
  ComplexMatrix v = ComplexMatrix::identity(n);

  auto off_mass = [&]() {
    double s = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * std::norm(a(p, q));
    return std::sqrt(s);
  };

  const int max_sweeps = 100;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    if (off_mass() < off_tol * scale) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double absb = std::abs(apq);
        if (absb <= 1e-300) continue;
        const cplx phase = apq / absb;           // a(p,q) = absb * phase
        const double alpha = a(p, p).real();
        const double gamma = a(q, q).real();
        const double tau = (gamma - alpha) / (2.0 * absb);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // G is identity outside the (p,q) plane:
        //   G(p,p)=c, G(p,q)=s, G(q,p)=-s*conj(phase), G(q,q)=c*conj(phase)
        const cplx gqp = -s * std::conj(phase);
        const cplx gqq = c * std::conj(phase);
        for (std::size_t r = 0; r < n; ++r) {  // A <- A G, V <- V G
          const cplx arp = a(r, p), arq = a(r, q);
          a(r, p) = arp * c + arq * gqp;
          a(r, q) = arp * s + arq * gqq;
          const cplx vrp = v(r, p), vrq = v(r, q);
          v(r, p) = vrp * c + vrq * gqp;
          v(r, q) = vrp * s + vrq * gqq;
        }
        for (std::size_t r = 0; r < n; ++r) {  // A <- G^* A
          const cplx apr = a(p, r), aqr = a(q, r);
          a(p, r) = c * apr - s * phase * aqr;
          a(q, r) = s * apr + c * phase * aqr;
        }
        a(p, q) = std::conj(a(q, p));  // keep Hermitian against drift
      }
    }
  }
  if (sweep == max_sweeps && off_mass() >= off_tol * scale)
    throw NoConvergence(static_cast<std::size_t>(max_sweeps), off_mass(), false,
                        a.data(), n);

  EigenDecomposition d;
  d.eigenvalues.resize(n);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a(x, x).real() < a(y, y).real();
  });
  d.eigenvectors = ComplexMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    d.eigenvalues[i] = a(order[i], order[i]).real();
    for (std::size_t r = 0; r < n; ++r) d.eigenvectors(r, i) = v(r, order[i]);
  }
  return d;
}

// Square root of a PSD Hermitian matrix; eigenvalues in [-clamp_tol, 0) are
// treated as round-off and clamped to 0.
inline ComplexMatrix matrix_sqrt_psd(const ComplexMatrix& m,
                                     double clamp_tol = tol_psd) {
  EigenDecomposition d = hermitian_eigen(m);
  const std::size_t n = m.rows();
  ComplexMatrix r(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    double lam = d.eigenvalues[k];
    if (lam < 0.0) {
      if (lam < -clamp_tol) throw NotPositive(lam);
      lam = 0.0;
    }
    const double s = std::sqrt(lam);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        r(i, j) += s * d.eigenvectors(i, k) * std::conj(d.eigenvectors(j, k));
  }
  return r;
}

}  // namespace qifs
