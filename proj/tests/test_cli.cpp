#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "qifs/io.hpp"
#include "support.hpp"

using Catch::Approx;
using support::data_path;
using support::run_cli;

namespace {

qifs::io::json parse_out(const std::string& text) {
  return qifs::io::json::parse(text);
}

// timing is the one legitimately non-reproducible report field
std::string strip_wall_time(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line))
    if (line.find("wall_time_ms") == std::string::npos) out << line << '\n';
  return out.str();
}

std::string write_temp(const char* name, const std::string& content) {
  std::string path = std::string("/tmp/") + name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST_CASE("validate reports pass and fail with matching exit codes", "[cli]") {
  CHECK(run_cli("validate " + data_path("markov_22_kraus.json")).exit_code == 0);
  CHECK(run_cli("validate " + data_path("unit_branch_potential.json")).exit_code == 0);
  CHECK(run_cli("validate " + data_path("bad_normalization.json")).exit_code == 2);
  CHECK(run_cli("validate " + data_path("malformed.json")).exit_code == 2);
  CHECK(run_cli("validate /tmp/qifs-no-such-file.json").exit_code != 0);

  const auto res =
      run_cli("validate " + data_path("markov_22_kraus.json") + " --cptp --format json");
  REQUIRE(res.exit_code == 0);
  const auto j = parse_out(res.out);
  bool saw_tp = false;
  for (const auto& check : j["results"]["checks"]) {
    CHECK(check["passed"].get<bool>());
    if (check["name"].get<std::string>().find("trace preservation") != std::string::npos)
      saw_tp = true;
  }
  CHECK(saw_tp);
}

TEST_CASE("degenerate dynamics exits with the domain-error code", "[cli]") {
  const auto res = run_cli("fixed-point " + data_path("degenerate_zero_branch.json"));
  CHECK(res.exit_code == 4);
}

TEST_CASE("non-convergent dynamics exits with the iteration code", "[cli]") {
  const std::string rot = write_temp("qifs_cli_rot.json", R"({
    "dimension": 2,
    "branches": [
      {"v": [[0.5403023058681398, -0.8414709848078965],
             [0.8414709848078965, 0.5403023058681398]],
       "h": [[1, 0], [0, 1]]}
    ],
    "constant_weights": [1.0]
  })");
  // the rotation fixes the maximally mixed default start, so push it off axis
  const std::string start =
      write_temp("qifs_cli_start.json", R"([[0.9, 0], [0, 0.1]])");
  const auto res = run_cli("eigen " + rot + " --start " + start + " --max-iter 200");
  CHECK(res.exit_code == 3);
}

TEST_CASE("eigen solves the unit-branch potential family", "[cli]") {
  const auto res =
      run_cli("eigen " + data_path("unit_branch_potential.json") + " --format json");
  REQUIRE(res.exit_code == 0);
  const auto j = parse_out(res.out);

  const double root = std::sqrt(17.0);
  CHECK(j["results"]["beta"].get<double>() == Approx(0.5 * (5 + root)).margin(1e-10));
  CHECK(j["results"]["rho_beta"][0][0].get<double>() ==
        Approx((3 + root) / (7 + root)).margin(1e-10));
  CHECK(j["results"]["rho_beta"][1][1].get<double>() ==
        Approx(4 / (7 + root)).margin(1e-10));

  // the closed-form cross-check is emitted for diagonal-template systems
  REQUIRE(j["results"].contains("closed_form"));
  CHECK(j["results"]["closed_form"]["beta_abs_diff"].get<double>() < 1e-10);
  CHECK(j["results"]["closed_form"]["state_abs_diff"].get<double>() < 1e-10);
  CHECK(j["inputs"]["system"]["digest"].get<std::string>().size() == 16);
}

TEST_CASE("entropy command compares against the source chain", "[cli]") {
  const auto res = run_cli("entropy " + data_path("markov_22_kraus.json") +
                           " --markov " + data_path("markov_22.json") +
                           " --format json");
  REQUIRE(res.exit_code == 0);
  const auto j = parse_out(res.out);
  CHECK(j["results"]["entropy"].get<double>() ==
        Approx(0.55793883802854605).margin(1e-12));
  CHECK(j["results"]["form_difference"].get<double>() < 1e-12);
  CHECK(j["results"]["bound_log_k"].get<double>() ==
        Approx(std::log(4.0)).margin(1e-12));
  REQUIRE(j["results"].contains("markov"));
  CHECK(j["results"]["markov"]["difference"].get<double>() < 1e-10);
}

TEST_CASE("pressure in coordinate form is tight at the equality choice", "[cli]") {
  const auto res = run_cli("pressure " + data_path("classic_bridge_tight.json") +
                           " --coords 1,1 --format json");
  REQUIRE(res.exit_code == 0);
  const auto j = parse_out(res.out);
  CHECK(j["results"]["form"].get<std::string>() == "coordinates");
  CHECK(j["results"]["coordinates"]["pressure"].get<double>() ==
        Approx(0.86964826030252418).margin(1e-10));
  CHECK(std::abs(j["results"]["coordinates"]["gap"].get<double>()) < 1e-9);
}

TEST_CASE("pressure maximizer closes the gap for unitary dynamics", "[cli]") {
  const auto res = run_cli("pressure " + data_path("unitary_quadruple.json") +
                           " --trace-form --construct-maximizer --format json");
  REQUIRE(res.exit_code == 0);
  const auto j = parse_out(res.out);
  CHECK(j["results"]["beta"].get<double>() == Approx(8.0).margin(1e-10));
  REQUIRE(j["results"].contains("maximizer"));
  CHECK(j["results"]["maximizer"]["alpha"].get<double>() == Approx(1.0).margin(1e-10));
  CHECK(std::abs(j["results"]["maximizer"]["gap"].get<double>()) < 1e-8);
  CHECK(j["results"]["maximizer"]["equality_residual"].get<double>() < 1e-8);
}

TEST_CASE("capacity picks the frozen grid point", "[cli]") {
  const auto res = run_cli("capacity " + data_path("identity_triple.json") +
                           " --cost-op " + data_path("cost_excited.json") +
                           " --a 0.5 --format json");
  REQUIRE(res.exit_code == 0);
  const auto j = parse_out(res.out);
  CHECK(j["results"]["value"].get<double>() ==
        Approx(1.0960673284468549).margin(1e-12));
  CHECK(j["results"]["argmax"]["grid_index"].get<std::size_t>() == 118);
  CHECK(j["results"]["argmax"]["t"][0].get<double>() == Approx(0.30).margin(1e-15));

  const auto lag = run_cli("capacity " + data_path("identity_triple.json") +
                           " --cost-op " + data_path("cost_excited.json") +
                           " --lambda -1 --format json");
  REQUIRE(lag.exit_code == 0);
  const auto lj = parse_out(lag.out);
  CHECK(lj["results"]["value"].get<double>() ==
        Approx(1.5960673284468549).margin(1e-12));

  // one of --a, --lambda, --dump is required
  CHECK(run_cli("capacity " + data_path("identity_triple.json") + " --cost-op " +
                data_path("cost_excited.json"))
            .exit_code == 2);
}

TEST_CASE("capacity dump streams the whole grid as csv", "[cli]") {
  const auto res = run_cli("capacity " + data_path("identity_triple.json") +
                           " --cost-op " + data_path("cost_excited.json") +
                           " --dump -");
  REQUIRE(res.exit_code == 0);
  std::istringstream in(res.out);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "grid_index,t1,t2,t3,entropy,cost,objective");
  std::size_t rows = 0;
  std::string line;
  bool saw_argmax = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    if (line.rfind("118,", 0) == 0) saw_argmax = true;
  }
  CHECK(rows == 231);
  CHECK(saw_argmax);
}

TEST_CASE("embed emits a loadable system that validates", "[cli]") {
  const auto res =
      run_cli("embed --matrix " + data_path("markov_22.json") + " --mode kraus");
  REQUIRE(res.exit_code == 0);
  const std::string path = write_temp("qifs_cli_embedded.json", res.out);
  CHECK(run_cli("validate " + path + " --cptp").exit_code == 0);

  const auto j = parse_out(res.out);
  CHECK(j["dimension"].get<int>() == 2);
  CHECK(j["branches"].size() == 4);

  const auto perron = run_cli("embed --matrix " + data_path("markov_22.json") +
                              " --mode perron --q1 1 --q3 1");
  REQUIRE(perron.exit_code == 0);
  const auto pj = parse_out(perron.out);
  REQUIRE(pj["branches"].size() == 4);
  CHECK(pj["branches"][1]["h"][0][0].get<double>() ==
        Approx(std::sqrt(4.5)).margin(1e-12));
}

TEST_CASE("measure command reports invariance and entropy increments", "[cli]") {
  const auto res = run_cli("measure " + data_path("markov_22_kraus.json") +
                           " --measure " + data_path("invariant_two_atom.json") +
                           " --entropy-n 3 --format json");
  REQUIRE(res.exit_code == 0);
  const auto j = parse_out(res.out);
  CHECK(j["results"]["invariance_residual"].get<double>() < 1e-12);
  CHECK(j["results"]["barycenter"][0][0].get<double>() ==
        Approx(2.0 / 3.0).margin(1e-12));
  CHECK(j["results"]["mass"].get<double>() == Approx(1.0).margin(1e-12));
  CHECK(j["results"]["entropy"]["differences"][2].get<double>() ==
        Approx(0.55793883802854394).margin(1e-10));
}

TEST_CASE("reports are deterministic apart from timing", "[cli]") {
  const std::string cmd =
      "eigen " + data_path("unit_branch_potential.json") + " --format json";
  const auto a = run_cli(cmd);
  const auto b = run_cli(cmd);
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(strip_wall_time(a.out) == strip_wall_time(b.out));
}

TEST_CASE("all three output formats carry the same numbers", "[cli]") {
  const std::string base = "fixed-point " + data_path("reflect_swap.json");
  const auto text = run_cli(base);
  const auto json_res = run_cli(base + " --format json");
  const auto csv = run_cli(base + " --format csv");
  REQUIRE(text.exit_code == 0);
  REQUIRE(json_res.exit_code == 0);
  REQUIRE(csv.exit_code == 0);

  const auto j = parse_out(json_res.out);
  const double rho00 = j["results"]["rho"][0][0].get<double>();
  CHECK(rho00 == Approx(1.0 / 3.0).margin(1e-10));

  char expected[64];
  std::snprintf(expected, sizeof expected, "%.17g", rho00);
  CHECK(text.out.find(expected) != std::string::npos);
  CHECK(csv.out.find(expected) != std::string::npos);
  CHECK(csv.out.rfind("key,value", 0) == 0);
}

TEST_CASE("usage errors exit with the usage code", "[cli]") {
  CHECK(run_cli("no-such-command").exit_code == 2);
  CHECK(run_cli("eigen").exit_code == 2);
  CHECK(run_cli("eigen " + data_path("unit_branch_potential.json") +
                " --format yaml")
            .exit_code == 2);
}
