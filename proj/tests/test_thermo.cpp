#include <catch2/catch_amalgamated.hpp>

#include "qifs/io.hpp"
#include "qifs/spectral.hpp"
#include "qifs/thermo.hpp"
#include "support.hpp"

using namespace qifs;
using Catch::Approx;

namespace {

const std::vector<std::vector<double>> kP = {{0.8, 0.4}, {0.2, 0.6}};
const std::vector<std::vector<double>> kA = {{0.2, -0.3}, {0.7, 0.1}};
const std::vector<std::vector<double>> kQ = {{0.6, 0.5}, {0.4, 0.5}};

EigenPair fake_eigen(double beta) { return EigenPair{beta, maximally_mixed(2), 0.0}; }

}  // namespace

TEST_CASE("stationary entropy of the embedded chain equals the source rate",
          "[thermo]") {
  const QifsSystem sys = embed_markov_kraus(kP);
  const DensityMatrix rho_w = fixed_point(sys, maximally_mixed(2)).rho;

  const double h = stationary_entropy(sys, rho_w);
  CHECK(h == Approx(0.55793883802854605).margin(1e-12));
  CHECK(h == Approx(markov_entropy(kP)).margin(1e-10));
  CHECK(stationary_entropy_alt(sys, rho_w) == Approx(h).margin(1e-12));
}

TEST_CASE("the two entropy forms agree off the fixed point too", "[thermo]") {
  support::Rng rng(51);
  for (int rep = 0; rep < 20; ++rep) {
    QifsSystem sys;
    sys.dim = 2;
    const auto w = support::random_weight_family(rng, 2, 3);
    for (std::size_t i = 0; i < 3; ++i)
      sys.branches.push_back(Branch{support::random_unitary(rng, 2), w[i], {}});
    validate_system(sys);
    const DensityMatrix rho = support::random_density(rng, 2);
    const double h = stationary_entropy(sys, rho);
    CHECK(stationary_entropy_alt(sys, rho) == Approx(h).margin(1e-12));
    CHECK(h >= -1e-12);
    CHECK(h <= std::log(3.0) + 1e-12);
  }
}

TEST_CASE("entropy extremes: single branch and uniform conditionals", "[thermo]") {
  QifsSystem one;
  one.dim = 2;
  one.branches.push_back(Branch{ComplexMatrix::identity(2),
                                ComplexMatrix::identity(2), {}});
  validate_system(one);
  CHECK(stationary_entropy(one, maximally_mixed(2)) == Approx(0.0).margin(1e-14));

  auto [triple, opt] = io::load_system(support::data_path("identity_triple.json"));
  (void)opt;
  std::vector<ComplexMatrix> uniform(3, std::sqrt(1.0 / 3.0) * ComplexMatrix::identity(2));
  const QifsSystem sys = with_weight_family(triple, uniform);
  CHECK(stationary_entropy(sys, maximally_mixed(2)) ==
        Approx(std::log(3.0)).margin(1e-12));
}

TEST_CASE("markov chain entropy and its guards", "[thermo]") {
  CHECK(markov_entropy(kP) == Approx(0.55793883802854405).margin(1e-12));

  const std::vector<double> pi = markov_stationary(kP);
  CHECK(pi[0] == Approx(2.0 / 3.0).margin(1e-12));
  CHECK(pi[1] == Approx(1.0 / 3.0).margin(1e-12));

  CHECK(is_irreducible(kP));
  const std::vector<std::vector<double>> id = {{1.0, 0.0}, {0.0, 1.0}};
  CHECK_FALSE(is_irreducible(id));
  CHECK_THROWS_AS(markov_entropy(id), NotIrreducible);
  CHECK(markov_entropy(id, true) == Approx(0.0).margin(1e-14));

  const std::vector<std::vector<double>> swap = {{0.0, 1.0}, {1.0, 0.0}};
  CHECK(is_irreducible(swap));
  CHECK(markov_entropy(swap) == Approx(0.0).margin(1e-13));

  const std::vector<std::vector<double>> uniform = {{0.5, 0.5}, {0.5, 0.5}};
  CHECK(markov_entropy(uniform) == Approx(std::log(2.0)).margin(1e-12));

  const std::vector<std::vector<double>> bad = {{0.8, 0.4}, {0.3, 0.6}};
  CHECK_THROWS_AS(markov_entropy(bad), NotStochastic);
}

TEST_CASE("classic inequality on a frozen instance", "[thermo]") {
  const ClassicReport r = classic_inequality(kA, kQ);
  CHECK(r.entropy_term == Approx(0.68196078414289585).margin(1e-12));
  CHECK(r.potential_term == Approx(0.17777777777777773).margin(1e-12));
  CHECK(r.lhs == Approx(0.85973856192067355).margin(1e-12));
  CHECK(r.beta == Approx(2.3860714298607184).margin(1e-12));
  CHECK(r.bound == Approx(0.86964826030252207).margin(1e-12));
  CHECK(r.gap == Approx(0.0099096983818484918).margin(1e-12));
  CHECK(r.pi[0] == Approx(5.0 / 9.0).margin(1e-12));
  CHECK(r.pi[1] == Approx(4.0 / 9.0).margin(1e-12));
  CHECK(r.gap >= 0.0);
}

TEST_CASE("the equality choice closes the classic gap", "[thermo]") {
  support::Rng rng(52);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<std::vector<double>> a = {{u(rng), u(rng)}, {u(rng), u(rng)}};
    const auto q = classic_argmax(a);
    double col0 = q[0][0] + q[1][0], col1 = q[0][1] + q[1][1];
    CHECK(col0 == Approx(1.0).margin(1e-12));
    CHECK(col1 == Approx(1.0).margin(1e-12));
    const ClassicReport r = classic_inequality(a, q);
    CHECK(std::abs(r.gap) < 1e-12);
  }
}

TEST_CASE("matrix-unit bridge reproduces the classic report termwise", "[thermo]") {
  const QifsSystem sys = build_basic_from_classic(kA, kQ);
  const DensityMatrix rho_w = fixed_point(sys, maximally_mixed(2)).rho;
  const EigenPair eigen = power_eigenpair(sys, maximally_mixed(2));
  const CoordinatePressureReport r = basic_inequality_coords(sys, rho_w, eigen, 1, 1);
  const ClassicReport c = classic_inequality(kA, kQ);

  CHECK(r.entropy_term == Approx(c.entropy_term).margin(1e-9));
  CHECK(r.potential_h_term + r.potential_coord_term ==
        Approx(c.potential_term).margin(1e-9));
  CHECK(r.pressure == Approx(c.lhs).margin(1e-9));
  CHECK(r.bound == Approx(c.bound).margin(1e-9));
  CHECK(r.gap == Approx(c.gap).margin(1e-9));

  // matrix-unit branches carry no coordinate correction
  CHECK(r.potential_coord_term == Approx(0.0).margin(1e-12));

  SECTION("coordinates where the eigenstate vanishes are refused") {
    CHECK_THROWS_AS(basic_inequality_coords(sys, rho_w, eigen, 1, 2),
                    CoordinateUnusable);
  }
  SECTION("coordinate indices are validated") {
    CHECK_THROWS_AS(basic_inequality_coords(sys, rho_w, eigen, 0, 1),
                    ValidationError);
    CHECK_THROWS_AS(basic_inequality_coords(sys, rho_w, eigen, 1, 3),
                    ValidationError);
  }
}

TEST_CASE("bridge at the equality choice is tight", "[thermo]") {
  auto [sys, opt] = io::load_system(support::data_path("classic_bridge_tight.json"));
  const DensityMatrix rho_w = fixed_point(sys, maximally_mixed(2), opt.tol).rho;
  const EigenPair eigen = power_eigenpair(sys, maximally_mixed(2), opt.tol);

  CHECK(eigen.beta == Approx(2.3860714298607175).margin(1e-10));
  const CoordinatePressureReport r = basic_inequality_coords(sys, rho_w, eigen, 1, 1);
  CHECK(r.pressure == Approx(0.86964826030252418).margin(1e-10));
  CHECK(r.bound == Approx(0.86964826030252163).margin(1e-10));
  CHECK(std::abs(r.gap) < 1e-9);

  // the trace form on the same system is a strictly weaker statement
  const PressureReport t = basic_inequality(sys, rho_w, eigen);
  CHECK(t.gap == Approx(0.72927083618167232).margin(1e-9));
  CHECK(t.gap >= -1e-9);
}

TEST_CASE("trace-form inequality holds across random admissible systems",
          "[thermo]") {
  support::Rng rng(53);
  std::uniform_real_distribution<double> u(0.1, 1.5);
  int checked = 0;
  for (int rep = 0; rep < 40; ++rep) {
    QifsSystem sys;
    sys.dim = 2;
    const std::size_t k = 2 + (rep % 3);
    const auto w = support::random_weight_family(rng, 2, k);
    for (std::size_t i = 0; i < k; ++i) {
      Branch b;
      b.v = support::random_unitary(rng, 2);
      b.w = w[i];
      b.h = u(rng) * support::gaussian_matrix(rng, 2);
      sys.branches.push_back(std::move(b));
    }
    validate_system(sys);
    DensityMatrix rho_w = maximally_mixed(2);
    EigenPair eigen;
    try {
      rho_w = fixed_point(sys, maximally_mixed(2)).rho;
      eigen = power_eigenpair(sys, maximally_mixed(2));
    } catch (const NoConvergence&) {
      continue;  // oscillatory dynamics is legitimate input, just not useful here
    }
    const PressureReport r = basic_inequality(sys, rho_w, eigen);
    CHECK(r.gap >= -1e-9);
    ++checked;
  }
  CHECK(checked >= 30);
}

TEST_CASE("vanishing potential traces are reported before the log", "[thermo]") {
  QifsSystem sys;
  sys.dim = 2;
  sys.mode = NormalizationMode::ConstantWeights;
  sys.constant_weights = {0.5, 0.5};
  Branch b1, b2;
  b1.v = ComplexMatrix::identity(2);
  b1.h = ComplexMatrix::identity(2);
  b2.v = ComplexMatrix::identity(2);
  b2.h = ComplexMatrix(2, 2);  // zero potential
  sys.branches = {b1, b2};

  CHECK_THROWS_AS(basic_inequality(sys, maximally_mixed(2), fake_eigen(1.0)),
                  LogOfZero);
  CHECK_THROWS_AS(maximizer_unitary(sys, fake_eigen(1.0)), ZeroPotentialTrace);
}

TEST_CASE("maximizer on the unitary quadruple attains the bound", "[thermo]") {
  auto [sys, opt] = io::load_system(support::data_path("unitary_quadruple.json"));
  (void)opt;
  const EigenPair eigen = power_eigenpair(sys, maximally_mixed(2));
  CHECK(eigen.beta == Approx(8.0).margin(1e-10));

  const MaximizerResult mr = maximizer_unitary(sys, eigen);
  CHECK(mr.alpha == Approx(1.0).margin(1e-10));

  const QifsSystem tuned = with_weight_family(sys, mr.w_family);
  const DensityMatrix rho_w = fixed_point(tuned, maximally_mixed(2)).rho;
  const PressureReport r = basic_inequality(tuned, rho_w, eigen);

  CHECK(r.entropy_term == Approx(1.75 * std::log(2.0)).margin(1e-10));
  CHECK(r.potential_term == Approx(1.25 * std::log(2.0)).margin(1e-10));
  CHECK(r.pressure == Approx(std::log(8.0)).margin(1e-10));
  CHECK(r.bound == Approx(std::log(8.0)).margin(1e-10));
  CHECK(std::abs(r.gap) < 1e-12);
  CHECK(r.equality_residual < 1e-12);
}

TEST_CASE("residual and gap vanish together, or neither does", "[thermo]") {
  // tight family: residual and gap both at numerical zero (previous test);
  // here a detuned family keeps both visibly away from zero
  auto [sys, opt] = io::load_system(support::data_path("unitary_quadruple.json"));
  (void)opt;
  const EigenPair eigen = power_eigenpair(sys, maximally_mixed(2));

  std::vector<ComplexMatrix> skew;
  const double t[4] = {0.7, 0.1, 0.1, 0.1};
  for (double ti : t) skew.push_back(std::sqrt(ti) * ComplexMatrix::identity(2));
  const QifsSystem detuned = with_weight_family(sys, skew);
  const DensityMatrix rho_w = fixed_point(detuned, maximally_mixed(2)).rho;
  const PressureReport r = basic_inequality(detuned, rho_w, eigen);
  CHECK(r.gap > 1e-6);
  CHECK(r.equality_residual > 1e-8);
}

TEST_CASE("non-unitary branches cannot feed the maximizer", "[thermo]") {
  auto [sys, opt] = io::load_system(support::data_path("three_branch_half_quarter.json"));
  (void)opt;
  for (Branch& b : sys.branches) b.h = ComplexMatrix::identity(2);
  CHECK_THROWS_AS(maximizer_unitary(sys, fake_eigen(1.0)), NotUnitary);
}

TEST_CASE("potential rescaling moves the rate, not the state", "[thermo]") {
  auto [sys, opt] = io::load_system(support::data_path("unit_branch_potential.json"));
  (void)opt;
  const EigenPair base = power_eigenpair(sys, maximally_mixed(2));
  const DensityMatrix rho_w = fixed_point(sys, maximally_mixed(2)).rho;
  const PressureReport base_r = basic_inequality(sys, rho_w, base);

  for (double alpha : {0.1, 7.0}) {
    QifsSystem scaled = sys;
    for (Branch& b : scaled.branches) b.h = std::sqrt(alpha) * (*b.h);
    const EigenPair e = power_eigenpair(scaled, maximally_mixed(2));
    CHECK(e.beta == Approx(alpha * base.beta).epsilon(1e-10));
    CHECK(hs_distance(e.rho_beta, base.rho_beta) < 1e-10);

    const PressureReport r = basic_inequality(scaled, rho_w, e);
    CHECK(r.gap == Approx(base_r.gap).margin(1e-10));
  }
}

TEST_CASE("simplex grid enumeration is lexicographic and complete", "[thermo]") {
  const auto comps = simplex_compositions(3, 2);
  REQUIRE(comps.size() == 6);
  CHECK(comps[0] == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(comps[1] == std::vector<double>{0.0, 0.5, 0.5});
  CHECK(comps[2] == std::vector<double>{0.0, 1.0, 0.0});
  CHECK(comps[3] == std::vector<double>{0.5, 0.0, 0.5});
  CHECK(comps[4] == std::vector<double>{0.5, 0.5, 0.0});
  CHECK(comps[5] == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(simplex_compositions(3, 20).size() == 231);
  CHECK(simplex_compositions(4, 4).size() == 35);
}

TEST_CASE("capacity on the identity triple with an excited-state cost", "[thermo]") {
  auto [sys, opt] = io::load_system(support::data_path("identity_triple.json"));
  (void)opt;
  const ComplexMatrix cost = io::load_matrix(support::data_path("cost_excited.json"));

  const auto cands = evaluate_grid(sys, cost);
  REQUIRE(cands.size() == 231);

  const CapacityResult cap = capacity_from(cands, 0.5);
  CHECK(cap.capacity == Approx(1.0960673284468549).margin(1e-12));
  CHECK(cap.argmax.index == 118);
  CHECK(cap.argmax.t[0] == Approx(0.30).margin(1e-15));
  CHECK(cap.argmax.t[1] == Approx(0.35).margin(1e-15));
  CHECK(cap.argmax.t[2] == Approx(0.35).margin(1e-15));
  CHECK(cap.argmax.cost == Approx(0.5).margin(1e-12));

  const LagrangianResult lag = lagrangian_from(cands, -1.0);
  CHECK(lag.value == Approx(1.5960673284468549).margin(1e-12));
  CHECK(lag.argmax.index == 118);

  CHECK_THROWS_AS(capacity_from(cands, -0.1), EmptyFeasibleSet);
}

TEST_CASE("capacity grows with the allowed cost", "[thermo]") {
  // two invertible non-commuting branches: images never degenerate and the
  // fixed state, hence the cost, genuinely moves with the weights
  QifsSystem sys;
  sys.dim = 2;
  ComplexMatrix v1(2, 2), v2(2, 2);
  v1(0, 0) = 1.0;
  v1(1, 1) = 0.5;
  v2(0, 0) = 0.5;
  v2(0, 1) = 0.2;
  v2(1, 0) = 0.1;
  v2(1, 1) = 0.9;
  sys.mode = NormalizationMode::ConstantWeights;
  sys.constant_weights = {0.5, 0.5};
  sys.branches = {Branch{v1, {}, {}}, Branch{v2, {}, {}}};

  const ComplexMatrix cost = io::load_matrix(support::data_path("cost_excited.json"));
  GridSpec grid;
  grid.points_per_edge = 11;
  const auto cands = evaluate_grid(sys, cost, grid);
  REQUIRE(cands.size() == 11);

  double spread_lo = cands[0].cost, spread_hi = cands[0].cost;
  for (const GridCandidate& c : cands) {
    spread_lo = std::min(spread_lo, c.cost);
    spread_hi = std::max(spread_hi, c.cost);
  }
  CHECK(spread_hi - spread_lo > 1e-3);

  double prev = 0.0;
  bool first = true;
  for (double a : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
    const CapacityResult cap = capacity_from(cands, a);
    if (!first) CHECK(cap.capacity >= prev - 1e-12);
    prev = cap.capacity;
    first = false;
  }
  // the full budget admits the uniform pair, the entropy maximum for k = 2
  const CapacityResult full = capacity_from(cands, 1.0);
  CHECK(full.capacity == Approx(std::log(2.0)).margin(1e-12));

  CHECK_THROWS_AS(capacity_from(cands, -0.01), EmptyFeasibleSet);
}

TEST_CASE("grid evaluation rejects unusable inputs", "[thermo]") {
  auto [sys, opt] = io::load_system(support::data_path("identity_triple.json"));
  (void)opt;
  const ComplexMatrix cost = io::load_matrix(support::data_path("cost_excited.json"));

  GridSpec one_point;
  one_point.points_per_edge = 1;
  CHECK_THROWS_AS(evaluate_grid(sys, cost, one_point), ValidationError);

  GridSpec wrong_count;
  wrong_count.unitaries.assign(2, ComplexMatrix::identity(2));
  CHECK_THROWS_AS(evaluate_grid(sys, cost, wrong_count), ValidationError);

  GridSpec not_unitary;
  not_unitary.unitaries.assign(3, 0.5 * ComplexMatrix::identity(2));
  CHECK_THROWS_AS(evaluate_grid(sys, cost, not_unitary), NotUnitary);

  ComplexMatrix skew(2, 2);
  skew(0, 1) = 1.0;
  CHECK_THROWS_AS(evaluate_grid(sys, skew), NotHermitian);
  CHECK_THROWS_AS(evaluate_grid(sys, ComplexMatrix(3, 3)), DimensionMismatch);

  QifsSystem wide = sys;
  for (int extra = 0; extra < 2; ++extra) {
    Branch b;
    b.v = ComplexMatrix::identity(2);
    wide.branches.push_back(b);
  }
  wide.constant_weights.assign(5, 0.2);
  CHECK_THROWS_AS(evaluate_grid(wide, cost), ValidationError);
}
