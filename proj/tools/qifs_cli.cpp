// Command line front end: every analysis the library offers, wired to JSON
// system/measure files, with text/json/csv reports.
//
// Exit codes: 0 success, 2 parse or validation problem, 3 numerical
// non-convergence, 4 infeasible or degenerate construction.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qifs/io.hpp"
#include "qifs/measures.hpp"
#include "qifs/spectral.hpp"
#include "qifs/thermo.hpp"

namespace {

using qifs::io::json;
using Clock = std::chrono::steady_clock;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// --- report rendering -------------------------------------------------------
// Reports are built as ordered json trees and rendered by hand so every
// format prints doubles the same way (17 significant digits).

void print_json(const json& j, std::ostream& os, int indent) {
  const std::string pad(indent, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) os << ",\n";
      first = false;
      os << pad << "  " << json(it.key()).dump() << ": ";
      print_json(it.value(), os, indent + 2);
    }
    os << "\n" << pad << "}";
  } else if (j.is_array()) {
    bool flat = true;
    for (const json& e : j)
      if (e.is_object() || e.is_array()) flat = false;
    if (flat) {
      os << "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ", ";
        print_json(j[i], os, 0);
      }
      os << "]";
    } else {
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad << "  ";
        print_json(j[i], os, indent + 2);
      }
      os << "\n" << pad << "]";
    }
  } else if (j.is_string()) {
    os << j.dump();
  } else if (j.is_boolean()) {
    os << (j.get<bool>() ? "true" : "false");
  } else if (j.is_number_float()) {
    os << fmt17(j.get<double>());
  } else if (j.is_number_unsigned()) {
    os << j.get<std::uint64_t>();
  } else if (j.is_number_integer()) {
    os << j.get<std::int64_t>();
  } else {
    os << "null";
  }
}

bool is_entry_like(const json& j) {
  return j.is_number() || (j.is_array() && j.size() == 2 && j[0].is_number() &&
                           j[1].is_number());
}

bool is_row_like(const json& j) {
  if (!j.is_array() || j.empty()) return false;
  for (const json& e : j)
    if (!is_entry_like(e)) return false;
  return true;
}

std::string scalar_text(const json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>() ? "true" : "false";
  if (j.is_number_float()) return fmt17(j.get<double>());
  if (j.is_number_unsigned()) return std::to_string(j.get<std::uint64_t>());
  if (j.is_number_integer()) return std::to_string(j.get<std::int64_t>());
  return "null";
}

std::string row_text(const json& row) {
  std::string out = "[";
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ", ";
    if (row[i].is_array())
      out += "[" + fmt17(row[i][0].get<double>()) + ", " +
             fmt17(row[i][1].get<double>()) + "]";
    else
      out += scalar_text(row[i]);
  }
  return out + "]";
}

void render_text(const json& j, const std::string& path, std::ostream& os) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      render_text(it.value(), path.empty() ? it.key() : path + "." + it.key(), os);
    return;
  }
  if (j.is_array()) {
    if (is_row_like(j)) {
      os << path << ": " << row_text(j) << "\n";
      return;
    }
    bool matrix = !j.empty();
    for (const json& e : j)
      if (!is_row_like(e)) matrix = false;
    if (matrix) {
      os << path << ":\n";
      for (const json& row : j) os << "  " << row_text(row) << "\n";
      return;
    }
    for (std::size_t i = 0; i < j.size(); ++i)
      render_text(j[i], path + "." + std::to_string(i), os);
    return;
  }
  os << path << ": " << scalar_text(j) << "\n";
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void render_csv(const json& j, const std::string& path, std::ostream& os) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      render_csv(it.value(), path.empty() ? it.key() : path + "." + it.key(), os);
    return;
  }
  if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      render_csv(j[i], path + "." + std::to_string(i), os);
    return;
  }
  os << csv_escape(path) << "," << csv_escape(scalar_text(j)) << "\n";
}

void emit_report(json& report, const std::string& format, Clock::time_point t0) {
  const double ms =
      std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  report["wall_time_ms"] = ms;
  if (format == "json") {
    print_json(report, std::cout, 0);
    std::cout << "\n";
  } else if (format == "csv") {
    std::cout << "key,value\n";
    render_csv(report, "", std::cout);
  } else {
    render_text(report, "", std::cout);
  }
}

json input_entry(const std::string& path, const std::string& bytes) {
  return json{{"path", path}, {"digest", qifs::io::content_digest(bytes)}};
}

// --- shared loading helpers -------------------------------------------------

struct LoadedSystem {
  qifs::QifsSystem sys;
  qifs::io::Options opt;
  json input;
};

LoadedSystem load_system_input(const std::string& path, bool validate = true) {
  const std::string bytes = qifs::io::read_file(path);
  auto [sys, opt] = qifs::io::parse_system(qifs::io::parse_json(bytes, path), validate);
  return {std::move(sys), opt, input_entry(path, bytes)};
}

qifs::DensityMatrix start_state(const qifs::QifsSystem& sys, const std::string& start,
                                json& inputs) {
  if (start == "maximally-mixed") return qifs::maximally_mixed(sys.dim);
  const std::string bytes = qifs::io::read_file(start);
  inputs["start"] = input_entry(start, bytes);
  json j = qifs::io::parse_json(bytes, start);
  if (j.is_object() && j.contains("matrix"))
    return qifs::validate_density(qifs::io::parse_matrix(j["matrix"], start));
  return qifs::validate_density(qifs::io::parse_matrix(j, start));
}

json diag_state_json(const qifs::DiagonalState& s) {
  return json{{"rho1", s.rho1}, {"rho4", s.rho4}};
}

// --- closed-form cross-check for eigen --------------------------------------
// A system qualifies when N = 2, every branch dynamics is a scaled matrix
// unit (so iterates are diagonal after one step) and every potential gives a
// state-independent coefficient on diagonal states, i.e. diag(H*H) is
// constant. The diagonal action is then a nonnegative 2x2 matrix solved in
// closed form.

struct TemplateCheck {
  double m[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  qifs::ClosedForm2x2 cf;
};

bool unit_position(const qifs::ComplexMatrix& v, std::size_t& r, std::size_t& c,
                   qifs::cplx& entry) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < v.rows(); ++i)
    for (std::size_t j = 0; j < v.cols(); ++j)
      if (std::abs(v(i, j)) > 1e-14) {
        ++hits;
        r = i;
        c = j;
        entry = v(i, j);
      }
  return hits == 1;
}

std::optional<TemplateCheck> diagonal_template(const qifs::QifsSystem& sys,
                                               qifs::OperatorFamily family) {
  if (sys.dim != 2) return std::nullopt;
  TemplateCheck out;
  for (std::size_t j = 0; j < sys.k(); ++j) {
    std::size_t r = 0, c = 0;
    qifs::cplx entry;
    if (!unit_position(sys.branches[j].v, r, c, entry)) return std::nullopt;
    double coeff = 0.0;
    if (family == qifs::OperatorFamily::Potential) {
      if (!sys.branches[j].h) return std::nullopt;
      const qifs::ComplexMatrix g = qifs::adjoint(*sys.branches[j].h) * (*sys.branches[j].h);
      const double d0 = g(0, 0).real(), d1 = g(1, 1).real();
      if (std::abs(d0 - d1) > 1e-12 * (1.0 + qifs::max_abs(g))) return std::nullopt;
      coeff = 0.5 * (d0 + d1);
    } else if (sys.mode == qifs::NormalizationMode::ConstantWeights) {
      coeff = sys.constant_weights[j];
    } else {
      if (!sys.branches[j].w) return std::nullopt;
      const qifs::ComplexMatrix g = qifs::adjoint(*sys.branches[j].w) * (*sys.branches[j].w);
      const double d0 = g(0, 0).real(), d1 = g(1, 1).real();
      if (std::abs(d0 - d1) > 1e-12 * (1.0 + qifs::max_abs(g))) return std::nullopt;
      coeff = 0.5 * (d0 + d1);
    }
    out.m[r][c] += coeff * std::norm(entry);
  }
  try {
    out.cf = qifs::closed_form_2x2(out.m[0][0], out.m[0][1], out.m[1][0], out.m[1][1]);
  } catch (const qifs::Error&) {
    return std::nullopt;
  }
  return out;
}

// --- commands ----------------------------------------------------------------

struct CommonArgs {
  std::string system_path;
  std::string format = "text";
  double tol = -1.0;       // negative means "use the file options"
  long long max_iter = -1; // likewise
};

double pick_tol(const CommonArgs& a, const qifs::io::Options& opt) {
  return a.tol >= 0.0 ? a.tol : opt.tol;
}

std::size_t pick_max_iter(const CommonArgs& a, const qifs::io::Options& opt) {
  return a.max_iter >= 0 ? static_cast<std::size_t>(a.max_iter) : opt.max_iter;
}

int cmd_validate(const CommonArgs& a, bool cptp, const std::string& cmdline) {
  const auto t0 = Clock::now();
  LoadedSystem in = load_system_input(a.system_path, /*validate=*/false);
  const qifs::QifsSystem& sys = in.sys;
  json report;
  report["command"] = cmdline;
  report["inputs"] = json{{"system", in.input}};
  json results;
  results["dimension"] = sys.dim;
  results["branches"] = sys.k();
  results["mode"] = sys.mode == qifs::NormalizationMode::ConstantWeights
                        ? "constant-weights"
                        : "operator-normalized";
  json checks = json::array();
  bool all_ok = true;
  const double tol = a.tol >= 0.0 ? a.tol : qifs::tol_norm;

  bool dims_ok = sys.dim >= 1 && sys.k() >= 1;
  for (const qifs::Branch& b : sys.branches) {
    auto fits = [&](const qifs::ComplexMatrix& m) {
      return m.rows() == sys.dim && m.cols() == sys.dim;
    };
    if (!fits(b.v)) dims_ok = false;
    if (b.w && !fits(*b.w)) dims_ok = false;
    if (b.h && !fits(*b.h)) dims_ok = false;
  }
  checks.push_back({{"name", "dimension consistency"}, {"passed", dims_ok}});
  all_ok = all_ok && dims_ok;

  if (dims_ok) {
    if (sys.mode == qifs::NormalizationMode::ConstantWeights) {
      double sum = 0.0;
      bool nonneg = sys.constant_weights.size() == sys.k();
      for (double p : sys.constant_weights) {
        if (p < 0.0) nonneg = false;
        sum += p;
      }
      const bool ok = nonneg && std::abs(sum - 1.0) <= tol;
      checks.push_back({{"name", "constant weights sum to one"},
                        {"passed", ok},
                        {"deviation", std::abs(sum - 1.0)}});
      all_ok = all_ok && ok;
    } else {
      bool have_w = true;
      for (const qifs::Branch& b : sys.branches)
        if (!b.w) have_w = false;
      double dev = -1.0;
      bool ok = false;
      if (have_w) {
        dev = qifs::max_abs(qifs::weight_normalization(sys) -
                            qifs::ComplexMatrix::identity(sys.dim));
        ok = dev <= tol;
      }
      checks.push_back({{"name", "weight normalization sum W*W = I"},
                        {"passed", ok},
                        {"deviation", dev}});
      all_ok = all_ok && ok;
    }
    if (cptp) {
      const double dev = qifs::max_abs(qifs::kraus_normalization(sys) -
                                       qifs::ComplexMatrix::identity(sys.dim));
      const bool ok = dev <= tol;
      checks.push_back({{"name", "trace preservation sum V*V = I"},
                        {"passed", ok},
                        {"deviation", dev}});
      all_ok = all_ok && ok;
    }
  }
  results["checks"] = std::move(checks);
  results["all_passed"] = all_ok;
  report["results"] = std::move(results);
  report["diagnostics"] = json::object();
  emit_report(report, a.format, t0);
  if (!all_ok) std::cerr << "error: validation failed (see checks)\n";
  return all_ok ? 0 : 2;
}

int cmd_fixed_point(const CommonArgs& a, const std::string& start,
                    const std::string& cmdline) {
  const auto t0 = Clock::now();
  LoadedSystem in = load_system_input(a.system_path);
  json inputs = json{{"system", in.input}};
  const qifs::DensityMatrix rho0 = start_state(in.sys, start, inputs);
  const qifs::FixedPointResult fp =
      qifs::fixed_point(in.sys, rho0, pick_tol(a, in.opt), pick_max_iter(a, in.opt));
  json report;
  report["command"] = cmdline;
  report["inputs"] = std::move(inputs);
  report["results"] = json{{"rho", qifs::io::matrix_to_json(fp.rho.matrix())}};
  report["diagnostics"] = json{{"iterations", fp.iterations},
                               {"residual", fp.residual},
                               {"tol", pick_tol(a, in.opt)}};
  emit_report(report, a.format, t0);
  return 0;
}

int cmd_eigen(const CommonArgs& a, const std::string& family_name,
              const std::string& start, const std::string& cmdline) {
  const auto t0 = Clock::now();
  LoadedSystem in = load_system_input(a.system_path);
  json inputs = json{{"system", in.input}};
  const qifs::OperatorFamily family = family_name == "weights"
                                          ? qifs::OperatorFamily::Weights
                                          : qifs::OperatorFamily::Potential;
  const qifs::DensityMatrix rho0 = start_state(in.sys, start, inputs);
  const qifs::EigenPair pair = qifs::power_eigenpair(
      in.sys, rho0, pick_tol(a, in.opt), pick_max_iter(a, in.opt), family);
  json report;
  report["command"] = cmdline;
  report["inputs"] = std::move(inputs);
  json results;
  results["beta"] = pair.beta;
  results["log_beta"] = std::log(pair.beta);
  results["rho_beta"] = qifs::io::matrix_to_json(pair.rho_beta.matrix());
  if (auto tc = diagonal_template(in.sys, family)) {
    const qifs::ComplexMatrix diag_state = [&] {
      qifs::ComplexMatrix m(2, 2);
      m(0, 0) = tc->cf.state_plus.rho1;
      m(1, 1) = tc->cf.state_plus.rho4;
      return m;
    }();
    results["closed_form"] = json{
        {"diagonal_action",
         json::array({json::array({tc->m[0][0], tc->m[0][1]}),
                      json::array({tc->m[1][0], tc->m[1][1]})})},
        {"lambda_plus", tc->cf.lambda_plus},
        {"lambda_minus", tc->cf.lambda_minus},
        {"state_plus", diag_state_json(tc->cf.state_plus)},
        {"beta_abs_diff", std::abs(pair.beta - tc->cf.lambda_plus)},
        {"state_abs_diff", qifs::max_abs(pair.rho_beta.matrix() - diag_state)}};
  }
  report["results"] = std::move(results);
  report["diagnostics"] =
      json{{"residual", pair.residual}, {"family", family_name}};
  emit_report(report, a.format, t0);
  return 0;
}

int cmd_entropy(const CommonArgs& a, const std::string& markov_path,
                const std::string& cmdline) {
  const auto t0 = Clock::now();
  LoadedSystem in = load_system_input(a.system_path);
  json inputs = json{{"system", in.input}};
  const qifs::FixedPointResult fp =
      qifs::fixed_point(in.sys, qifs::maximally_mixed(in.sys.dim),
                        pick_tol(a, in.opt), pick_max_iter(a, in.opt));
  const double h = qifs::stationary_entropy(in.sys, fp.rho);
  const double h_alt = qifs::stationary_entropy_alt(in.sys, fp.rho);
  json results;
  results["entropy"] = h;
  results["entropy_factored"] = h_alt;
  results["form_difference"] = std::abs(h - h_alt);
  results["bound_log_k"] = std::log(double(in.sys.k()));
  if (!markov_path.empty()) {
    const std::string bytes = qifs::io::read_file(markov_path);
    inputs["markov"] = input_entry(markov_path, bytes);
    std::vector<std::vector<double>> p;
    {
      const qifs::ComplexMatrix m = qifs::io::load_matrix(markov_path);
      p.assign(m.rows(), std::vector<double>(m.cols(), 0.0));
      for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) p[r][c] = m(r, c).real();
    }
    const double hp = qifs::markov_entropy(p);
    results["markov"] =
        json{{"entropy", hp}, {"difference", std::abs(h - hp)}};
  }
  json report;
  report["command"] = cmdline;
  report["inputs"] = std::move(inputs);
  report["results"] = std::move(results);
  report["diagnostics"] = json{{"fixed_point_iterations", fp.iterations},
                               {"fixed_point_residual", fp.residual}};
  emit_report(report, a.format, t0);
  return 0;
}

json pressure_json(const qifs::PressureReport& r) {
  return json{{"entropy_term", r.entropy_term},
              {"potential_term", r.potential_term},
              {"pressure", r.pressure},
              {"bound", r.bound},
              {"gap", r.gap},
              {"equality_residual", r.equality_residual}};
}

int cmd_pressure(const CommonArgs& a, const std::vector<std::size_t>& coords,
                 bool construct_maximizer, const std::string& cmdline) {
  const auto t0 = Clock::now();
  LoadedSystem in = load_system_input(a.system_path);
  const double tol = pick_tol(a, in.opt);
  const std::size_t max_iter = pick_max_iter(a, in.opt);
  const qifs::DensityMatrix rho0 = qifs::maximally_mixed(in.sys.dim);
  const qifs::FixedPointResult fp = qifs::fixed_point(in.sys, rho0, tol, max_iter);
  const qifs::EigenPair pair = qifs::power_eigenpair(in.sys, rho0, tol, max_iter);
  json results;
  results["beta"] = pair.beta;
  if (coords.empty()) {
    results["form"] = "trace";
    results["trace"] = pressure_json(qifs::basic_inequality(in.sys, fp.rho, pair));
  } else {
    results["form"] = "coordinates";
    const qifs::CoordinatePressureReport r =
        qifs::basic_inequality_coords(in.sys, fp.rho, pair, coords[0], coords[1]);
    results["coordinates"] = json{{"l", r.l},
                                  {"m", r.m},
                                  {"entropy_term", r.entropy_term},
                                  {"potential_h_term", r.potential_h_term},
                                  {"potential_coord_term", r.potential_coord_term},
                                  {"pressure", r.pressure},
                                  {"bound", r.bound},
                                  {"gap", r.gap},
                                  {"equality_residual", r.equality_residual}};
  }
  if (construct_maximizer) {
    const qifs::MaximizerResult mr = qifs::maximizer_unitary(in.sys, pair);
    qifs::QifsSystem tight = qifs::with_weight_family(in.sys, mr.w_family);
    const qifs::FixedPointResult fp2 = qifs::fixed_point(tight, rho0, tol, max_iter);
    json m = pressure_json(qifs::basic_inequality(tight, fp2.rho, pair));
    m["alpha"] = mr.alpha;
    results["maximizer"] = std::move(m);
  }
  json report;
  report["command"] = cmdline;
  report["inputs"] = json{{"system", in.input}};
  report["results"] = std::move(results);
  report["diagnostics"] = json{{"fixed_point_iterations", fp.iterations},
                               {"fixed_point_residual", fp.residual},
                               {"eigen_residual", pair.residual}};
  emit_report(report, a.format, t0);
  return 0;
}

json candidate_json(const qifs::GridCandidate& c) {
  return json{{"grid_index", c.index},
              {"t", c.t},
              {"entropy", c.entropy},
              {"cost", c.cost}};
}

int cmd_capacity(const CommonArgs& a, const std::string& cost_path,
                 std::optional<double> cap_a, std::optional<double> lambda,
                 std::size_t grid_n, const std::string& weight_unitaries,
                 const std::string& dump_path, const std::string& cmdline) {
  const auto t0 = Clock::now();
  LoadedSystem in = load_system_input(a.system_path);
  const std::string cost_bytes = qifs::io::read_file(cost_path);
  json inputs = json{{"system", in.input},
                     {"cost_op", input_entry(cost_path, cost_bytes)}};
  const qifs::ComplexMatrix cost_op = qifs::io::load_matrix(cost_path);
  qifs::GridSpec spec;
  spec.points_per_edge = grid_n;
  if (weight_unitaries == "dynamics")
    for (const qifs::Branch& b : in.sys.branches) spec.unitaries.push_back(b.v);
  const std::vector<qifs::GridCandidate> cands =
      qifs::evaluate_grid(in.sys, cost_op, spec);

  json results;
  double lambda_for_objective = 0.0;
  if (cap_a) {
    const qifs::CapacityResult r = qifs::capacity_from(cands, *cap_a);
    results["mode"] = "capacity";
    results["a"] = *cap_a;
    results["value"] = r.capacity;
    results["argmax"] = candidate_json(r.argmax);
  } else if (lambda) {
    const qifs::LagrangianResult r = qifs::lagrangian_from(cands, *lambda);
    results["mode"] = "lagrangian";
    results["lambda"] = *lambda;
    results["value"] = r.value;
    results["argmax"] = candidate_json(r.argmax);
    lambda_for_objective = *lambda;
  } else {
    results["mode"] = "dump";
  }

  if (!dump_path.empty()) {
    std::ostringstream csv;
    csv << "grid_index";
    for (std::size_t i = 1; i <= in.sys.k(); ++i) csv << ",t" << i;
    csv << ",entropy,cost,objective\n";
    for (const qifs::GridCandidate& c : cands) {
      csv << c.index;
      for (double t : c.t) csv << "," << fmt17(t);
      csv << "," << fmt17(c.entropy) << "," << fmt17(c.cost) << ","
          << fmt17(c.entropy - lambda_for_objective * c.cost) << "\n";
    }
    if (dump_path == "-") {
      std::cout << csv.str();
      return 0;  // keep stdout pure csv
    }
    std::ofstream out(dump_path, std::ios::binary);
    if (!out) throw qifs::ParseError("cannot write " + dump_path);
    out << csv.str();
    results["dump"] = dump_path;
  }

  json report;
  report["command"] = cmdline;
  report["inputs"] = std::move(inputs);
  report["results"] = std::move(results);
  report["diagnostics"] = json{{"candidates", cands.size()},
                               {"points_per_edge", grid_n},
                               {"workers", qifs::worker_count()}};
  emit_report(report, a.format, t0);
  return 0;
}

int cmd_embed(const std::string& matrix_path, const std::string& mode,
              std::optional<double> q1, std::optional<double> q3) {
  const std::vector<std::vector<double>> p = qifs::io::load_real_matrix(matrix_path);
  qifs::QifsSystem sys;
  if (mode == "kraus") {
    sys = qifs::embed_markov_kraus(p);
  } else {
    qifs::StochasticEmbedding e =
        q1 ? qifs::embed_perron_alt(p, *q1, *q3) : qifs::embed_perron(p);
    sys = qifs::embedding_system(e);
  }
  print_json(qifs::io::system_to_json(sys), std::cout, 0);
  std::cout << "\n";
  return 0;
}

int cmd_measure(const CommonArgs& a, const std::string& measure_path,
                std::size_t steps, std::size_t entropy_n, double merge_tol,
                const std::string& cmdline) {
  const auto t0 = Clock::now();
  LoadedSystem in = load_system_input(a.system_path);
  const std::string mbytes = qifs::io::read_file(measure_path);
  json inputs = json{{"system", in.input},
                     {"measure", input_entry(measure_path, mbytes)}};
  qifs::AtomicMeasure mu =
      qifs::io::parse_measure(qifs::io::parse_json(mbytes, measure_path));
  if (merge_tol >= 0.0) mu = qifs::AtomicMeasure(mu.atoms(), merge_tol);

  const double residual = qifs::invariance_residual(in.sys, mu);
  qifs::AtomicMeasure pushed = mu;
  for (std::size_t s = 0; s < steps; ++s) pushed = qifs::markov_push(in.sys, pushed);

  json atoms = json::array();
  double mass = 0.0;
  for (const qifs::Atom& atom : pushed.atoms()) {
    atoms.push_back({{"weight", atom.weight},
                     {"state", qifs::io::matrix_to_json(atom.state.matrix())}});
    mass += atom.weight;
  }
  const qifs::EntropyEstimate est = qifs::entropy_of_measure(in.sys, mu, entropy_n);

  json results;
  results["invariance_residual"] = residual;
  results["steps"] = steps;
  results["atoms"] = std::move(atoms);
  results["mass"] = mass;
  results["barycenter"] = qifs::io::matrix_to_json(qifs::barycenter(pushed).matrix());
  results["entropy"] = json{{"partials", est.partials},
                            {"differences", est.differences},
                            {"estimate", est.estimate}};
  json report;
  report["command"] = cmdline;
  report["inputs"] = std::move(inputs);
  report["results"] = std::move(results);
  report["diagnostics"] = json{{"atom_count", pushed.atoms().size()}};
  emit_report(report, a.format, t0);
  return 0;
}

// --- exit-code mapping --------------------------------------------------------

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const qifs::NoConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const qifs::DegenerateBranch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qifs::ZeroImage& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qifs::DegenerateSystem& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qifs::EmptyFeasibleSet& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qifs::MassLoss& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qifs::NotIrreducible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qifs::CoordinateUnusable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qifs::ZeroPotentialTrace& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qifs::LogOfZero& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qifs::ZeroEntry& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qifs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::string cmdline;
  for (int i = 0; i < argc; ++i) {
    if (i) cmdline += ' ';
    cmdline += argv[i];
  }

  CLI::App app{"quantum iterated function systems: invariant states, transfer"
               " operator eigenpairs, stationary entropy, pressure bounds"};
  app.require_subcommand(1);

  auto add_common = [](CLI::App* cmd, CommonArgs& a, bool with_system = true) {
    if (with_system)
      cmd->add_option("system", a.system_path, "system file (json)")
          ->required()
          ->check(CLI::ExistingFile);
    cmd->add_option("--format", a.format, "report format")
        ->check(CLI::IsMember({"text", "json", "csv"}))
        ->capture_default_str();
    cmd->add_option("--tol", a.tol, "convergence tolerance (default: file options)");
    cmd->add_option("--max-iter", a.max_iter, "iteration cap (default: file options)");
  };

  CommonArgs va;
  bool cptp = false;
  CLI::App* validate = app.add_subcommand(
      "validate", "check a system file: dimensions and normalization");
  add_common(validate, va);
  validate->add_flag("--cptp", cptp, "also require trace preservation sum V*V = I");

  CommonArgs fa;
  std::string fp_start = "maximally-mixed";
  CLI::App* fixedp = app.add_subcommand(
      "fixed-point", "invariant state of the weighted branch average");
  add_common(fixedp, fa);
  fixedp->add_option("--start", fp_start,
                     "start state: 'maximally-mixed' or a matrix file")
      ->capture_default_str();

  CommonArgs ea;
  std::string eig_family = "potential";
  std::string eig_start = "maximally-mixed";
  CLI::App* eigen = app.add_subcommand(
      "eigen", "dominant transfer-operator eigenpair by power iteration");
  add_common(eigen, ea);
  eigen->add_option("--family", eig_family, "coefficient family")
      ->check(CLI::IsMember({"potential", "weights"}))
      ->capture_default_str();
  eigen->add_option("--start", eig_start,
                    "start state: 'maximally-mixed' or a matrix file")
      ->capture_default_str();

  CommonArgs na;
  std::string markov_path;
  CLI::App* entropy = app.add_subcommand(
      "entropy", "stationary entropy at the invariant state, both forms");
  add_common(entropy, na);
  entropy->add_option("--markov", markov_path,
                      "column-stochastic matrix file; prints its entropy alongside")
      ->check(CLI::ExistingFile);

  CommonArgs pa;
  std::vector<std::size_t> coords;
  bool trace_form = false;
  bool construct_maximizer = false;
  CLI::App* pressure = app.add_subcommand(
      "pressure", "entropy plus potential against the log of the eigenvalue");
  add_common(pressure, pa);
  CLI::Option* coords_opt =
      pressure->add_option("--coords", coords, "coordinate form at entry l,m (1-based)")
          ->delimiter(',')
          ->expected(2);
  pressure->add_flag("--trace-form", trace_form, "trace form (the default)")
      ->excludes(coords_opt);
  pressure->add_flag("--construct-maximizer", construct_maximizer,
                     "for unitary dynamics, build the tight weight family and re-evaluate");

  CommonArgs ca;
  std::string cost_path;
  double cap_a_val = 0.0, lambda_val = 0.0;
  std::size_t grid_n = 21;
  std::string weight_unitaries = "identity";
  std::string dump_path;
  CLI::App* capacity = app.add_subcommand(
      "capacity", "capacity-cost and Lagrangian search over a simplex grid of weights");
  add_common(capacity, ca);
  capacity->add_option("--cost-op", cost_path, "Hermitian cost operator file")
      ->required()
      ->check(CLI::ExistingFile);
  CLI::Option* a_opt =
      capacity->add_option("--a", cap_a_val, "capacity at cost bound a");
  CLI::Option* lambda_opt =
      capacity->add_option("--lambda", lambda_val, "Lagrangian at multiplier lambda");
  a_opt->excludes(lambda_opt);
  capacity->add_option("--grid", grid_n, "points per simplex edge")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t(2), std::size_t(10000)));
  capacity->add_option("--weight-unitaries", weight_unitaries,
                       "unitary factors of the candidate weights")
      ->check(CLI::IsMember({"identity", "dynamics"}))
      ->capture_default_str();
  capacity->add_option("--dump", dump_path,
                       "write the full grid as csv to this path ('-' for stdout)");

  std::string embed_matrix, embed_mode = "kraus";
  std::optional<double> q1, q3;
  double q1_val = 0.0, q3_val = 0.0;
  CLI::App* embed = app.add_subcommand(
      "embed", "emit a system file embedding a column-stochastic matrix");
  embed->add_option("--matrix", embed_matrix, "column-stochastic matrix file")
      ->required()
      ->check(CLI::ExistingFile);
  embed->add_option("--mode", embed_mode, "embedding construction")
      ->check(CLI::IsMember({"perron", "kraus"}))
      ->capture_default_str();
  CLI::Option* q1_opt = embed->add_option("--q1", q1_val, "free scalar for branch 1 (perron)");
  CLI::Option* q3_opt = embed->add_option("--q3", q3_val, "free scalar for branch 3 (perron)");
  q1_opt->needs(q3_opt);
  q3_opt->needs(q1_opt);

  CommonArgs ma;
  std::string measure_path;
  std::size_t steps = 1, entropy_n = 3;
  double merge_tol = -1.0;
  CLI::App* measure = app.add_subcommand(
      "measure", "push an atomic measure through the chain and report its statistics");
  add_common(measure, ma);
  measure->add_option("--measure", measure_path, "atomic measure file (json)")
      ->required()
      ->check(CLI::ExistingFile);
  measure->add_option("--steps", steps, "number of push-forward steps")
      ->capture_default_str();
  measure->add_option("--entropy-n", entropy_n, "depth of the entropy difference sequence")
      ->capture_default_str();
  measure->add_option("--merge-tol", merge_tol, "override the measure's merge tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (q1_opt->count() > 0) q1 = q1_val;
  if (q3_opt->count() > 0) q3 = q3_val;
  std::optional<double> cap_a, lambda;
  if (a_opt->count() > 0) cap_a = cap_a_val;
  if (lambda_opt->count() > 0) lambda = lambda_val;

  return guarded([&]() -> int {
    if (validate->parsed()) return cmd_validate(va, cptp, cmdline);
    if (fixedp->parsed()) return cmd_fixed_point(fa, fp_start, cmdline);
    if (eigen->parsed()) return cmd_eigen(ea, eig_family, eig_start, cmdline);
    if (entropy->parsed()) return cmd_entropy(na, markov_path, cmdline);
    if (pressure->parsed()) return cmd_pressure(pa, coords, construct_maximizer, cmdline);
    if (capacity->parsed()) {
      if (!cap_a && !lambda && dump_path.empty())
        throw qifs::ValidationError("capacity needs --a, --lambda, or --dump");
      return cmd_capacity(ca, cost_path, cap_a, lambda, grid_n, weight_unitaries,
                          dump_path, cmdline);
    }
    if (embed->parsed()) return cmd_embed(embed_matrix, embed_mode, q1, q3);
    if (measure->parsed()) return cmd_measure(ma, measure_path, steps, entropy_n,
                                              merge_tol, cmdline);
    return 2;
  });
}
