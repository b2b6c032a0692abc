#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "qifs/system.hpp"

namespace qifs {

inline constexpr double merge_tol_default = 1e-10;
// word-weight cutoff: running products at or below this count as exactly zero
inline constexpr double word_cutoff = 1e-15;
inline constexpr std::size_t word_cap = 1000000;

// eta(t) = -t ln t with eta(0) = 0
inline double eta_fn(double t) { return t > 0.0 ? -t * std::log(t) : 0.0; }

struct Atom {
  double weight = 0.0;
  DensityMatrix state;
};

using StateFunction = std::function<double(const DensityMatrix&)>;

// Finitely supported probability measure on the state space. Atoms closer
// than merge_tol (hs distance) are merged at construction; the merged atom
// keeps the state of the heavier incoming contribution.
class AtomicMeasure {
 public:
  explicit AtomicMeasure(const std::vector<Atom>& atoms,
                         double merge_tol = merge_tol_default)
      : merge_tol_(merge_tol) {
    if (atoms.empty()) throw ValidationError("measure needs at least one atom");
    std::vector<double> rep_weight;  // incoming weight of each representative
    for (const Atom& a : atoms) {
      if (!(a.weight > 0.0) || a.weight > 1.0 + 1e-12)
        throw ValidationError("atom weights must lie in (0, 1]");
      std::size_t hit = atoms_.size();
      for (std::size_t j = 0; j < atoms_.size(); ++j)
        if (hs_distance(a.state, atoms_[j].state) < merge_tol_) {
          hit = j;
          break;
        }
      if (hit == atoms_.size()) {
        atoms_.push_back(a);
        rep_weight.push_back(a.weight);
      } else {
        atoms_[hit].weight += a.weight;
        if (a.weight > rep_weight[hit]) {
          atoms_[hit].state = a.state;
          rep_weight[hit] = a.weight;
        }
      }
    }
    double mass = 0.0;
    for (const Atom& a : atoms_) mass += a.weight;
    if (std::abs(mass - 1.0) > 1e-12)
      throw ValidationError("atom weights sum to " + std::to_string(mass));
  }

  static AtomicMeasure dirac(const DensityMatrix& rho,
                             double merge_tol = merge_tol_default) {
    return AtomicMeasure({Atom{1.0, rho}}, merge_tol);
  }

  const std::vector<Atom>& atoms() const { return atoms_; }
  double merge_tol() const { return merge_tol_; }

 private:
  std::vector<Atom> atoms_;
  double merge_tol_;
};

// Push-forward by the system's branches; degenerate-branch mass below 1e-9
// is dropped and the rest renormalized, larger losses are an error.
inline AtomicMeasure markov_push(const QifsSystem& sys, const AtomicMeasure& mu) {
  std::vector<Atom> out;
  double kept = 0.0;
  double lost = 0.0;
  for (const Atom& a : mu.atoms()) {
    for (std::size_t i = 0; i < sys.k(); ++i) {
      const double w = a.weight * branch_prob(sys, i, a.state);
      if (w <= word_cutoff) continue;
      ComplexMatrix m = sys.branches[i].v * a.state.matrix() * adjoint(sys.branches[i].v);
      const double t = trace(m).real();
      if (t <= tol_branch) {
        lost += w;
        continue;
      }
      out.push_back(Atom{w, validate_density(cplx(1.0 / t, 0.0) * m)});
      kept += w;
    }
  }
  if (lost >= 1e-9) throw MassLoss(lost);
  if (out.empty()) throw MassLoss(1.0);
  for (Atom& a : out) a.weight /= kept;
  return AtomicMeasure(out, mu.merge_tol());
}

// (Uf)(rho) = sum_i p_i(rho) f(F_i(rho)), zero-weight branches skipped
inline double transfer_apply(const QifsSystem& sys, const StateFunction& f,
                             const DensityMatrix& rho) {
  double acc = 0.0;
  for (std::size_t i = 0; i < sys.k(); ++i) {
    const double p = branch_prob(sys, i, rho);
    if (p <= word_cutoff) continue;
    acc += p * f(branch_map(sys, i, rho));
  }
  return acc;
}

inline void require_word_count(std::size_t k, std::size_t n,
                               std::size_t cap = word_cap) {
  double total = 1.0;
  for (std::size_t d = 0; d < n; ++d) {
    total *= double(k);
    if (total > double(cap)) throw CapExceeded(k, n, cap);
  }
}

namespace detail {

// depth-first over words, visit(depth, state, product) at every node below
// the root; branches with running product <= word_cutoff are pruned
template <typename Visit>
void word_dfs(const QifsSystem& sys, const DensityMatrix& state, double product,
              std::size_t depth, std::size_t max_depth, Visit&& visit) {
  if (depth == max_depth) return;
  for (std::size_t i = 0; i < sys.k(); ++i) {
    const double p = product * branch_prob(sys, i, state);
    if (p <= word_cutoff) continue;
    DensityMatrix next = branch_map(sys, i, state);
    visit(depth + 1, next, p);
    word_dfs(sys, next, p, depth + 1, max_depth, visit);
  }
}

}  // namespace detail

// (U^n f)(rho) by word enumeration; n = 0 gives f(rho)
inline double transfer_power(const QifsSystem& sys, const StateFunction& f,
                             const DensityMatrix& rho, std::size_t n) {
  require_word_count(sys.k(), n);
  if (n == 0) return f(rho);
  double acc = 0.0;
  detail::word_dfs(sys, rho, 1.0, 0, n,
                   [&](std::size_t depth, const DensityMatrix& s, double p) {
                     if (depth == n) acc += p * f(s);
                   });
  return acc;
}

inline DensityMatrix barycenter(const AtomicMeasure& mu) {
  const std::size_t n = mu.atoms().front().state.dim();
  ComplexMatrix acc(n, n);
  for (const Atom& a : mu.atoms())
    acc = acc + cplx(a.weight, 0.0) * a.state.matrix();
  return validate_density(hermitize(acc));
}

// both sides of <f, V mu> = <U f, mu>, computed along independent paths
inline std::pair<double, double> duality_check(const QifsSystem& sys,
                                               const StateFunction& f,
                                               const AtomicMeasure& mu) {
  const AtomicMeasure pushed = markov_push(sys, mu);
  double lhs = 0.0;
  for (const Atom& a : pushed.atoms()) lhs += a.weight * f(a.state);
  double rhs = 0.0;
  for (const Atom& a : mu.atoms()) rhs += a.weight * transfer_apply(sys, f, a.state);
  return {lhs, rhs};
}

// H_n(x) = sum over length-n words of eta(p_word(x)); H_0 = 0
inline double partial_entropy_state(const QifsSystem& sys, const DensityMatrix& rho,
                                    std::size_t n) {
  require_word_count(sys.k(), n);
  if (n == 0) return 0.0;
  double acc = 0.0;
  detail::word_dfs(sys, rho, 1.0, 0, n,
                   [&](std::size_t depth, const DensityMatrix&, double p) {
                     if (depth == n) acc += eta_fn(p);
                   });
  return acc;
}

namespace detail {

struct AtomTrack {
  DensityMatrix state;
  double product;
  bool alive;
};

// one pass over words up to max_depth, folding the per-atom word weights
// into integrated weights <p_word, mu> and handing eta of those to sink
template <typename Sink>
void measure_word_dfs(const QifsSystem& sys, const std::vector<Atom>& atoms,
                      std::vector<AtomTrack> tracks, std::size_t depth,
                      std::size_t max_depth, Sink&& sink) {
  if (depth == max_depth) return;
  for (std::size_t i = 0; i < sys.k(); ++i) {
    std::vector<AtomTrack> next;
    next.reserve(tracks.size());
    bool any = false;
    double q = 0.0;
    for (std::size_t a = 0; a < tracks.size(); ++a) {
      AtomTrack t = tracks[a];
      if (t.alive) {
        const double p = t.product * branch_prob(sys, i, t.state);
        if (p <= word_cutoff) {
          t.alive = false;
        } else {
          t.state = branch_map(sys, i, t.state);
          t.product = p;
          q += atoms[a].weight * p;
          any = true;
        }
      }
      next.push_back(std::move(t));
    }
    if (!any) continue;
    sink(depth + 1, q);
    measure_word_dfs(sys, atoms, std::move(next), depth + 1, max_depth, sink);
  }
}

}  // namespace detail

// H_n(mu) = sum over length-n words of eta(<p_word, mu>)
inline double partial_entropy_measure(const QifsSystem& sys, const AtomicMeasure& mu,
                                      std::size_t n) {
  require_word_count(sys.k(), n);
  if (n == 0) return 0.0;
  double acc = 0.0;
  std::vector<detail::AtomTrack> tracks;
  for (const Atom& a : mu.atoms())
    tracks.push_back({a.state, 1.0, true});
  detail::measure_word_dfs(sys, mu.atoms(), std::move(tracks), 0, n,
                           [&](std::size_t depth, double q) {
                             if (depth == n) acc += eta_fn(q);
                           });
  return acc;
}

struct EntropyEstimate {
  double estimate = 0.0;               // H_{n_max} - H_{n_max-1}
  std::vector<double> differences;     // H_{d+1} - H_d for d = 0..n_max-1
  std::vector<double> partials;        // H_0..H_{n_max}
};

// difference-sequence estimator for the entropy of an invariant measure;
// one traversal collects every H_d up to n_max
inline EntropyEstimate entropy_of_measure(const QifsSystem& sys,
                                          const AtomicMeasure& mu,
                                          std::size_t n_max) {
  if (n_max == 0) throw ValidationError("entropy estimate needs n_max >= 1");
  require_word_count(sys.k(), n_max);
  std::vector<double> h(n_max + 1, 0.0);
  std::vector<detail::AtomTrack> tracks;
  for (const Atom& a : mu.atoms())
    tracks.push_back({a.state, 1.0, true});
  detail::measure_word_dfs(sys, mu.atoms(), std::move(tracks), 0, n_max,
                           [&](std::size_t depth, double q) { h[depth] += eta_fn(q); });
  EntropyEstimate out;
  out.partials = h;
  for (std::size_t d = 0; d < n_max; ++d) out.differences.push_back(h[d + 1] - h[d]);
  out.estimate = out.differences.back();
  return out;
}

// transport mismatch between mu and its push-forward: each pushed atom is
// matched to the nearest original atom; the residual is the larger of the
// worst match distance and the worst per-atom weight discrepancy
inline double invariance_residual(const QifsSystem& sys, const AtomicMeasure& mu) {
  const AtomicMeasure pushed = markov_push(sys, mu);
  std::vector<double> gathered(mu.atoms().size(), 0.0);
  double dist_max = 0.0;
  for (const Atom& b : pushed.atoms()) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < mu.atoms().size(); ++j) {
      const double d = hs_distance(b.state, mu.atoms()[j].state);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    gathered[best] += b.weight;
    if (best_d > dist_max) dist_max = best_d;
  }
  double weight_max = 0.0;
  for (std::size_t j = 0; j < mu.atoms().size(); ++j)
    weight_max = std::max(weight_max, std::abs(gathered[j] - mu.atoms()[j].weight));
  return std::max(dist_max, weight_max);
}

}  // namespace qifs
