#pragma once

// Shared test plumbing: fixture paths, a subprocess runner for the CLI, and
// deterministic random samplers for property tests. Samplers verify their own
// postconditions so property tests never run on malformed inputs.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "qifs/density.hpp"
#include "qifs/system.hpp"

#ifndef QIFS_DATA_DIR
#define QIFS_DATA_DIR "data"
#endif
#ifndef QIFS_CLI_PATH
#define QIFS_CLI_PATH "qifs"
#endif

namespace support {

inline std::string data_path(const std::string& name) {
  return std::string(QIFS_DATA_DIR) + "/" + name;
}

inline std::string cli_path() { return QIFS_CLI_PATH; }

struct CliResult {
  int exit_code = -1;
  std::string out;
};

// run the CLI with the given argument string, capturing stdout
inline CliResult run_cli(const std::string& args, bool keep_stderr = false) {
  const std::string cmd = std::string(QIFS_CLI_PATH) + " " + args +
                          (keep_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed for: " + cmd);
  CliResult r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  return r;
}

using Rng = std::mt19937_64;

inline qifs::cplx gaussian(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng)};
}

inline qifs::ComplexMatrix gaussian_matrix(Rng& rng, std::size_t n) {
  qifs::ComplexMatrix m(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) m(r, c) = gaussian(rng);
  return m;
}

// Gram-Schmidt on the columns of a Gaussian matrix
inline qifs::ComplexMatrix random_unitary(Rng& rng, std::size_t n) {
  for (;;) {
    qifs::ComplexMatrix a = gaussian_matrix(rng, n);
    bool ok = true;
    for (std::size_t c = 0; c < n && ok; ++c) {
      for (std::size_t prev = 0; prev < c; ++prev) {
        qifs::cplx dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += std::conj(a(r, prev)) * a(r, c);
        for (std::size_t r = 0; r < n; ++r) a(r, c) -= dot * a(r, prev);
      }
      double norm = 0.0;
      for (std::size_t r = 0; r < n; ++r) norm += std::norm(a(r, c));
      norm = std::sqrt(norm);
      if (norm < 1e-6) {
        ok = false;
        break;
      }
      for (std::size_t r = 0; r < n; ++r) a(r, c) = a(r, c) / norm;
    }
    if (!ok) continue;
    if (qifs::max_abs(qifs::adjoint(a) * a - qifs::ComplexMatrix::identity(n)) > 1e-12)
      continue;
    return a;
  }
}

inline qifs::DensityMatrix random_density(Rng& rng, std::size_t n) {
  const qifs::ComplexMatrix a = gaussian_matrix(rng, n);
  qifs::ComplexMatrix m = a * qifs::adjoint(a);
  m = qifs::cplx(1.0 / qifs::trace(m).real(), 0.0) * m;
  return qifs::validate_density(qifs::hermitize(m));
}

// W_i = A_i S^{-1/2} with S = sum A_i* A_i; the family satisfies
// sum W_i* W_i = I by construction, re-verified before returning
inline std::vector<qifs::ComplexMatrix> random_weight_family(Rng& rng, std::size_t n,
                                                             std::size_t k) {
  for (;;) {
    std::vector<qifs::ComplexMatrix> a;
    qifs::ComplexMatrix s(n, n);
    for (std::size_t i = 0; i < k; ++i) {
      a.push_back(gaussian_matrix(rng, n));
      s = s + qifs::adjoint(a.back()) * a.back();
    }
    const qifs::EigenDecomposition d = qifs::hermitian_eigen(qifs::hermitize(s));
    if (d.eigenvalues.front() < 1e-6) continue;  // too ill-conditioned, redraw
    qifs::ComplexMatrix inv_sqrt(n, n);
    for (std::size_t e = 0; e < n; ++e) {
      const double w = 1.0 / std::sqrt(d.eigenvalues[e]);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
          inv_sqrt(r, c) += w * d.eigenvectors(r, e) * std::conj(d.eigenvectors(c, e));
    }
    std::vector<qifs::ComplexMatrix> w;
    qifs::ComplexMatrix check(n, n);
    for (std::size_t i = 0; i < k; ++i) {
      w.push_back(a[i] * inv_sqrt);
      check = check + qifs::adjoint(w.back()) * w.back();
    }
    if (qifs::max_abs(check - qifs::ComplexMatrix::identity(n)) > 1e-12) continue;
    return w;
  }
}

// column-stochastic with entries bounded away from zero
inline std::vector<std::vector<double>> random_column_stochastic(Rng& rng, std::size_t n,
                                                                 double floor = 0.05) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i][j] = u(rng);
      col += p[i][j];
    }
    for (std::size_t i = 0; i < n; ++i) p[i][j] /= col;
  }
  return p;
}

inline std::vector<double> random_simplex_point(Rng& rng, std::size_t k,
                                                double floor = 0.05) {
  std::uniform_real_distribution<double> u(floor, 1.0);
  std::vector<double> t(k);
  double sum = 0.0;
  for (double& x : t) {
    x = u(rng);
    sum += x;
  }
  for (double& x : t) x /= sum;
  return t;
}

}  // namespace support
