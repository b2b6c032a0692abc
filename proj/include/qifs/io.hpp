#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qifs/measures.hpp"
#include "qifs/system.hpp"

namespace qifs::io {

using json = nlohmann::ordered_json;

struct Options {
  double tol = 1e-13;
  std::size_t max_iter = 200000;
  double merge_tol = merge_tol_default;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// FNV-1a over the raw file bytes, printed as 16 hex digits
inline std::string content_digest(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline json parse_json(const std::string& bytes, const std::string& what) {
  try {
    return json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

// complex entries are [re, im]; a bare number means [x, 0]
inline cplx parse_entry(const json& j, const std::string& where) {
  if (j.is_number()) return cplx(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return cplx(j[0].get<double>(), j[1].get<double>());
  throw ParseError(where + ": expected a number or [re, im]");
}

inline ComplexMatrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a nested array");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  ComplexMatrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.empty())
      throw ParseError(where + " row " + std::to_string(r) + ": expected an array");
    if (r == 0) {
      cols = row.size();
      m = ComplexMatrix(rows, cols);
    } else if (row.size() != cols) {
      throw ParseError(where + " row " + std::to_string(r) + ": ragged matrix");
    }
    for (std::size_t c = 0; c < cols; ++c)
      m(r, c) = parse_entry(row[c], where + "[" + std::to_string(r) + "][" +
                                        std::to_string(c) + "]");
  }
  return m;
}

inline json matrix_to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) {
      const cplx v = m(r, c);
      if (v.imag() == 0.0)
        row.push_back(v.real());
      else
        row.push_back(json::array({v.real(), v.imag()}));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::pair<QifsSystem, Options> parse_system(const json& j, bool validate = true) {
  if (!j.is_object()) throw ParseError("system file: expected a JSON object");
  if (!j.contains("dimension") || !j["dimension"].is_number_unsigned())
    throw ParseError("system file: missing positive integer 'dimension'");
  if (!j.contains("branches") || !j["branches"].is_array() || j["branches"].empty())
    throw ParseError("system file: missing non-empty 'branches' array");
  QifsSystem sys;
  sys.dim = j["dimension"].get<std::size_t>();
  for (std::size_t i = 0; i < j["branches"].size(); ++i) {
    const json& bj = j["branches"][i];
    const std::string where = "branch " + std::to_string(i);
    if (!bj.is_object() || !bj.contains("v"))
      throw ParseError(where + ": expected an object with a 'v' matrix");
    Branch b;
    b.v = parse_matrix(bj["v"], where + ".v");
    if (bj.contains("w")) b.w = parse_matrix(bj["w"], where + ".w");
    if (bj.contains("h")) b.h = parse_matrix(bj["h"], where + ".h");
    sys.branches.push_back(std::move(b));
  }
  if (j.contains("constant_weights")) {
    if (!j["constant_weights"].is_array())
      throw ParseError("system file: 'constant_weights' must be an array");
    for (const json& w : j["constant_weights"]) {
      if (!w.is_number()) throw ParseError("system file: constant weights must be numbers");
      sys.constant_weights.push_back(w.get<double>());
    }
    sys.mode = NormalizationMode::ConstantWeights;
  } else {
    sys.mode = NormalizationMode::OperatorNormalized;
  }
  Options opt;
  if (j.contains("options")) {
    const json& oj = j["options"];
    if (!oj.is_object()) throw ParseError("system file: 'options' must be an object");
    if (oj.contains("tol")) opt.tol = oj["tol"].get<double>();
    if (oj.contains("max_iter")) opt.max_iter = oj["max_iter"].get<std::size_t>();
    if (oj.contains("merge_tol")) opt.merge_tol = oj["merge_tol"].get<double>();
  }
  if (validate) validate_system(sys);
  return {std::move(sys), opt};
}

inline std::pair<QifsSystem, Options> load_system(const std::string& path) {
  return parse_system(parse_json(read_file(path), path));
}

inline json system_to_json(const QifsSystem& sys, const Options& opt = {}) {
  json j;
  j["dimension"] = sys.dim;
  j["branches"] = json::array();
  for (const Branch& b : sys.branches) {
    json bj;
    bj["v"] = matrix_to_json(b.v);
    if (b.w) bj["w"] = matrix_to_json(*b.w);
    if (b.h) bj["h"] = matrix_to_json(*b.h);
    j["branches"].push_back(std::move(bj));
  }
  if (sys.mode == NormalizationMode::ConstantWeights)
    j["constant_weights"] = sys.constant_weights;
  j["options"] = {{"tol", opt.tol}, {"max_iter", opt.max_iter}, {"merge_tol", opt.merge_tol}};
  return j;
}

inline AtomicMeasure parse_measure(const json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j["atoms"].is_array() ||
      j["atoms"].empty())
    throw ParseError("measure file: expected an object with a non-empty 'atoms' array");
  double merge_tol = merge_tol_default;
  if (j.contains("merge_tol")) merge_tol = j["merge_tol"].get<double>();
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < j["atoms"].size(); ++i) {
    const json& aj = j["atoms"][i];
    const std::string where = "atom " + std::to_string(i);
    if (!aj.is_object() || !aj.contains("weight") || !aj.contains("state"))
      throw ParseError(where + ": expected 'weight' and 'state'");
    Atom a;
    a.weight = aj["weight"].get<double>();
    a.state = validate_density(parse_matrix(aj["state"], where + ".state"));
    atoms.push_back(std::move(a));
  }
  return AtomicMeasure(atoms, merge_tol);
}

inline AtomicMeasure load_measure(const std::string& path) {
  return parse_measure(parse_json(read_file(path), path));
}

inline json measure_to_json(const AtomicMeasure& mu) {
  json j;
  j["atoms"] = json::array();
  for (const Atom& a : mu.atoms())
    j["atoms"].push_back({{"weight", a.weight}, {"state", matrix_to_json(a.state.matrix())}});
  j["merge_tol"] = mu.merge_tol();
  return j;
}

// matrix files are either {"matrix": [[...]]} or a bare nested array
inline ComplexMatrix load_matrix(const std::string& path) {
  json j = parse_json(read_file(path), path);
  if (j.is_object() && j.contains("matrix")) return parse_matrix(j["matrix"], path);
  return parse_matrix(j, path);
}

inline std::vector<std::vector<double>> load_real_matrix(const std::string& path) {
  const ComplexMatrix m = load_matrix(path);
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols(), 0.0));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (m(r, c).imag() != 0.0)
        throw ParseError(path + ": expected a real matrix");
      out[r][c] = m(r, c).real();
    }
  return out;
}

}  // namespace qifs::io
