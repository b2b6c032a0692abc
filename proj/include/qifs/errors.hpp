#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qifs {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- matrix / state validation ---

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotHermitian : public Error {
 public:
  explicit NotHermitian(double deviation)
      : Error("matrix is not Hermitian (max |m_ij - conj(m_ji)| = " +
              std::to_string(deviation) + ")"),
        deviation(deviation) {}
  double deviation;
};

class NotPositive : public Error {
 public:
  explicit NotPositive(double min_eigenvalue)
      : Error("matrix is not positive semidefinite (smallest eigenvalue = " +
              std::to_string(min_eigenvalue) + ")"),
        min_eigenvalue(min_eigenvalue) {}
  double min_eigenvalue;
};

class TraceNotOne : public Error {
 public:
  explicit TraceNotOne(double trace)
      : Error("matrix trace is not 1 (trace = " + std::to_string(trace) + ")"),
        trace(trace) {}
  double trace;
};

class NotNormalized : public Error {
 public:
  explicit NotNormalized(double norm)
      : Error("vector is not normalized (|<psi|psi>| = " +
              std::to_string(norm) + ")"),
        norm(norm) {}
  double norm;
};

// --- system validation ---

class MissingWeights : public Error {
 public:
  MissingWeights() : Error("weight family W is absent and no constant weights are set") {}
};

class MissingPotential : public Error {
 public:
  MissingPotential() : Error("potential family H is absent") {}
};

class NotTracePreserving : public Error {
 public:
  explicit NotTracePreserving(double deviation)
      : Error("sum V_i* V_i differs from the identity (max deviation = " +
              std::to_string(deviation) + ")"),
        deviation(deviation) {}
  double deviation;
};

class DegenerateBranch : public Error {
 public:
  DegenerateBranch(std::size_t branch, double weight, double image_trace)
      : Error("branch " + std::to_string(branch) +
              " carries weight " + std::to_string(weight) +
              " but its image has trace " + std::to_string(image_trace)),
        branch(branch),
        weight(weight),
        image_trace(image_trace) {}
  std::size_t branch;
  double weight;
  double image_trace;
};

// --- iteration ---

// Carries the best iterate so callers can inspect how far the run got.
class NoConvergence : public Error {
 public:
  NoConvergence(std::size_t iterations, double residual, bool dominance_warning,
                std::vector<std::complex<double>> best_data, std::size_t best_dim)
      : Error(dominance_warning
                  ? "iteration oscillates with period 2 after " +
                        std::to_string(iterations) +
                        " steps (dominance warning); residual = " +
                        std::to_string(residual)
                  : "no convergence after " + std::to_string(iterations) +
                        " iterations; residual = " + std::to_string(residual)),
        iterations(iterations),
        residual(residual),
        dominance_warning(dominance_warning),
        best_data(std::move(best_data)),
        best_dim(best_dim) {}
  std::size_t iterations;
  double residual;
  bool dominance_warning;
  std::vector<std::complex<double>> best_data;  // row-major best iterate
  std::size_t best_dim;
};

class ZeroImage : public Error {
 public:
  ZeroImage() : Error("the operator annihilates the iterate (trace below tolerance)") {}
};

// --- spectral / embeddings ---

class DegenerateSystem : public Error {
 public:
  using Error::Error;
};

class ZeroEntry : public Error {
 public:
  ZeroEntry(std::size_t row, std::size_t col)
      : Error("matrix entry (" + std::to_string(row) + "," + std::to_string(col) +
              ") is zero; the 1/p_ij scalar choice needs positive entries"),
        row(row),
        col(col) {}
  std::size_t row;
  std::size_t col;
};

class NotStochastic : public Error {
 public:
  explicit NotStochastic(const std::string& msg) : Error(msg) {}
};

class NotIrreducible : public Error {
 public:
  NotIrreducible() : Error("stochastic matrix is not irreducible ((I+P)^(N-1) has zero entries)") {}
};

// --- measures ---

class CapExceeded : public Error {
 public:
  CapExceeded(std::size_t k, std::size_t n, std::size_t cap)
      : Error("word enumeration k^n = " + std::to_string(k) + "^" + std::to_string(n) +
              " exceeds cap " + std::to_string(cap)) {}
};

class MassLoss : public Error {
 public:
  explicit MassLoss(double lost)
      : Error("degenerate branches carried non-negligible mass " + std::to_string(lost)),
        lost(lost) {}
  double lost;
};

// --- thermodynamics ---

class LogOfZero : public Error {
 public:
  explicit LogOfZero(std::size_t index)
      : Error("logged term for branch " + std::to_string(index) + " is not positive"),
        index(index) {}
  std::size_t index;
};

class CoordinateUnusable : public Error {
 public:
  CoordinateUnusable(std::size_t l, std::size_t m, const std::string& why)
      : Error("coordinate pair (" + std::to_string(l) + "," + std::to_string(m) +
              ") is not admissible: " + why),
        l(l),
        m(m) {}
  std::size_t l;
  std::size_t m;
};

class EmptyFeasibleSet : public Error {
 public:
  explicit EmptyFeasibleSet(double a)
      : Error("no grid candidate satisfies the cost constraint a = " + std::to_string(a)),
        a(a) {}
  double a;
};

class NotUnitary : public Error {
 public:
  explicit NotUnitary(std::size_t branch)
      : Error("branch " + std::to_string(branch) + " dynamics operator is not unitary"),
        branch(branch) {}
  std::size_t branch;
};

class ZeroPotentialTrace : public Error {
 public:
  explicit ZeroPotentialTrace(std::size_t branch)
      : Error("tr(H_i rho_beta H_i*) vanishes for branch " + std::to_string(branch)),
        branch(branch) {}
  std::size_t branch;
};

// --- cli / io ---

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace qifs
