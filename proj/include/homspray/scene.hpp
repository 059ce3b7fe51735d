#pragma once

// JSON scene files. The grammar is documented in docs/scene_format.md.
// Syntax errors report line and column; shape errors report the JSON path of
// the offending field. Unknown keys are rejected.

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "homspray/chart_oracle.hpp"
#include "homspray/dynamics.hpp"
#include "homspray/errors.hpp"
#include "homspray/homogeneous_spray.hpp"
#include "homspray/lie_algebra.hpp"
#include "homspray/minkowski.hpp"

namespace homspray {

struct Tolerances {
  double structure = 1e-12;     ///< antisymmetry, Jacobi, subalgebra, reductivity
  double invariance = 1e-8;     ///< Ad(H)-invariance of the norm
  double equivariance = 1e-6;   ///< D eta(y, [z, y]) = [z, eta(y)]
  double homogeneity = 1e-7;
};

struct Scene {
  std::string name;
  LieAlgebra algebra = LieAlgebra(1, 1, {0.0});
  std::optional<MatrixRepresentation> rep;
  NormPtr norm;                    ///< set for Finsler scenes
  std::vector<double> quadratic;   ///< direct scenes: n^3 coefficients, empty means eta = 0
  Tolerances tol;
  IntegratorOptions integrator;
  DiffStrategy diff;
  ChartOptions chart;
  std::optional<std::uint64_t> seed;

  bool is_finsler() const { return static_cast<bool>(norm); }

  /// Builds the spray; Finsler construction re-checks reductivity, convexity
  /// and invariance.
  SprayModel spray() const {
    if (norm) return SprayModel::finsler(algebra, norm, diff);
    if (quadratic.empty()) return SprayModel::canonical(algebra);
    return quadratic_spray(algebra, quadratic);
  }
};

namespace scene_detail {

using Json = nlohmann::json;

inline std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
inline std::string child(const std::string& path, std::size_t i) { return path + "/" + std::to_string(i); }

inline void allow_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ParseError(child(path, it.key()), "unknown field");
}

inline const Json& require(const Json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ParseError(child(path, key), "missing required field");
  return j.at(key);
}

inline double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ParseError(path, "expected a number");
  return j.get<double>();
}

inline double positive(const Json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) throw ParseError(path, "expected a positive number");
  return v;
}

inline int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ParseError(path, "expected an integer");
  return j.get<int>();
}

inline std::string string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path, "expected a string");
  return j.get<std::string>();
}

inline Vec vector(const Json& j, const std::string& path, int n = -1) {
  if (!j.is_array()) throw ParseError(path, "expected an array of numbers");
  if (n >= 0 && static_cast<int>(j.size()) != n)
    throw ParseError(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], child(path, i));
  return v;
}

inline Mat matrix(const Json& j, const std::string& path, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw ParseError(path, "expected a " + std::to_string(rows) + "x" + std::to_string(cols) + " matrix (array of rows)");
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) m.row(r) = vector(j[r], child(path, r), cols).transpose();
  return m;
}

inline AlgebraPreset algebra(const Json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return preset(j.get<std::string>());
    } catch (const InputError& e) {
      throw ParseError(path, e.what());
    }
  }
  if (!j.is_object()) throw ParseError(path, "expected a preset name or an object");
  if (j.contains("preset")) {
    allow_keys(j, path, {"preset", "n", "dim_m"});
    const std::string name = string(j.at("preset"), child(path, "preset"));
    const int n = j.contains("n") ? integer(j.at("n"), child(path, "n")) : 3;
    AlgebraPreset p = [&] {
      try {
        return preset(name, n);
      } catch (const InputError& e) {
        throw ParseError(child(path, "preset"), e.what());
      }
    }();
    if (j.contains("dim_m")) {
      const int m = integer(j.at("dim_m"), child(path, "dim_m"));
      if (m <= 0 || m > p.algebra.dim()) throw ParseError(child(path, "dim_m"), "must be in 1..dim_g");
      p.algebra = p.algebra.with_dim_m(m);
    }
    return p;
  }
  allow_keys(j, path, {"dim_g", "dim_m", "structure_constants", "matrix_rep"});
  const int d = integer(require(j, path, "dim_g"), child(path, "dim_g"));
  if (d <= 0) throw ParseError(child(path, "dim_g"), "must be positive");
  const int m = integer(require(j, path, "dim_m"), child(path, "dim_m"));
  if (m <= 0 || m > d) throw ParseError(child(path, "dim_m"), "must be in 1..dim_g");
  const std::string sp = child(path, "structure_constants");
  const Json& sc = require(j, path, "structure_constants");
  if (!sc.is_array()) throw ParseError(sp, "expected an array of [i, j, k, value] triplets");
  std::vector<std::tuple<int, int, int, double>> trip;
  for (std::size_t t = 0; t < sc.size(); ++t) {
    const std::string tp = child(sp, t);
    if (!sc[t].is_array() || sc[t].size() != 4) throw ParseError(tp, "expected [i, j, k, value]");
    int idx[3];
    for (int q = 0; q < 3; ++q) {
      idx[q] = integer(sc[t][q], child(tp, q));
      if (idx[q] < 0 || idx[q] >= d) throw ParseError(child(tp, q), "index out of range 0.." + std::to_string(d - 1));
    }
    trip.emplace_back(idx[0], idx[1], idx[2], number(sc[t][3], child(tp, 3)));
  }
  std::vector<double> c;
  try {
    c = constants_from_triplets(d, trip);
  } catch (const InputError& e) {
    throw ParseError(sp, e.what());
  }
  AlgebraPreset out{LieAlgebra(d, m, std::move(c)), std::nullopt};
  if (j.contains("matrix_rep")) {
    const std::string rp = child(path, "matrix_rep");
    const Json& r = j.at("matrix_rep");
    if (!r.is_array() || static_cast<int>(r.size()) != d) throw ParseError(rp, "expected dim_g square matrices");
    const int size = r[0].is_array() ? static_cast<int>(r[0].size()) : 0;
    if (size == 0) throw ParseError(child(rp, 0), "expected a non-empty square matrix");
    std::vector<Mat> basis;
    for (int i = 0; i < d; ++i) basis.push_back(matrix(r[i], child(rp, i), size, size));
    out.rep = MatrixRepresentation(std::move(basis));
  }
  return out;
}

inline NormPtr norm(const Json& j, const std::string& path, int n) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  const std::string type = string(require(j, path, "type"), child(path, "type"));
  const Mat a = j.contains("a") ? matrix(j.at("a"), child(path, "a"), n, n) : Mat::Identity(n, n);
  if (type == "euclidean") {
    allow_keys(j, path, {"type", "a"});
    try {
      return std::make_shared<EuclideanNorm>(a);
    } catch (const InputError& e) {
      throw ParseError(child(path, "a"), e.what());
    }
  }
  if (type == "randers") {
    allow_keys(j, path, {"type", "a", "b"});
    const Vec b = vector(require(j, path, "b"), child(path, "b"), n);
    try {
      return std::make_shared<RandersNorm>(a, b);
    } catch (const InputError& e) {
      throw ParseError(path, e.what());
    }
  }
  throw ParseError(child(path, "type"), "expected \"euclidean\" or \"randers\"");
}

inline std::vector<double> eta(const Json& j, const std::string& path, int n) {
  if (!j.is_object()) throw ParseError(path, "expected an object");
  const std::string type = string(require(j, path, "type"), child(path, "type"));
  if (type == "zero") {
    allow_keys(j, path, {"type"});
    return {};
  }
  if (type == "quadratic") {
    allow_keys(j, path, {"type", "coefficients"});
    const Vec q = vector(require(j, path, "coefficients"), child(path, "coefficients"), n * n * n);
    return std::vector<double>(q.data(), q.data() + q.size());
  }
  throw ParseError(child(path, "type"), "expected \"zero\" or \"quadratic\"");
}

inline std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace scene_detail

/// Parses scene text. `source` prefixes diagnostics.
inline Scene parse_scene(const std::string& text, const std::string& source = "scene") {
  using namespace scene_detail;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    throw ParseError(source + ":" + line_col(text, e.byte > 0 ? e.byte - 1 : 0), "invalid JSON");
  }
  const std::string root = source + ":";
  if (!j.is_object()) throw ParseError(root, "scene must be a JSON object");
  allow_keys(j, root, {"name", "preset", "algebra", "basis_change", "norm", "eta", "tolerances", "integrator",
                       "seed", "diff", "chart"});
  Scene s;
  if (j.contains("name")) s.name = string(j.at("name"), child(root, "name"));

  if (j.contains("preset")) {
    for (const char* k : {"algebra", "norm", "eta"})
      if (j.contains(k)) throw ParseError(child(root, k), "cannot be combined with \"preset\"");
    const std::string name = string(j.at("preset"), child(root, "preset"));
    try {
      SprayPreset p = spray_preset(name);
      s.algebra = p.algebra.algebra;
      s.rep = p.algebra.rep;
      s.norm = p.spray.norm_ptr();
    } catch (const InputError& e) {
      throw ParseError(child(root, "preset"), e.what());
    }
    if (s.name.empty()) s.name = name;
  } else {
    AlgebraPreset a = algebra(require(j, root, "algebra"), child(root, "algebra"));
    s.algebra = std::move(a.algebra);
    s.rep = std::move(a.rep);
    const bool has_norm = j.contains("norm"), has_eta = j.contains("eta");
    if (has_norm == has_eta) throw ParseError(root, "exactly one of \"norm\" and \"eta\" is required");
  }

  if (j.contains("basis_change")) {
    const std::string bp = child(root, "basis_change");
    const Mat P = matrix(j.at("basis_change"), bp, s.algebra.dim(), s.algebra.dim());
    try {
      s.algebra = s.algebra.change_basis(P);
      if (s.rep) s.rep = s.rep->change_basis(P);
    } catch (const InputError& e) {
      throw ParseError(bp, e.what());
    }
  }

  const int n = s.algebra.dim_m();
  if (j.contains("norm")) s.norm = norm(j.at("norm"), child(root, "norm"), n);
  if (j.contains("eta")) s.quadratic = eta(j.at("eta"), child(root, "eta"), n);

  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    const std::string tp = child(root, "tolerances");
    if (!t.is_object()) throw ParseError(tp, "expected an object");
    allow_keys(t, tp, {"structure", "invariance", "equivariance", "homogeneity"});
    if (t.contains("structure")) s.tol.structure = positive(t.at("structure"), child(tp, "structure"));
    if (t.contains("invariance")) s.tol.invariance = positive(t.at("invariance"), child(tp, "invariance"));
    if (t.contains("equivariance")) s.tol.equivariance = positive(t.at("equivariance"), child(tp, "equivariance"));
    if (t.contains("homogeneity")) s.tol.homogeneity = positive(t.at("homogeneity"), child(tp, "homogeneity"));
  }
  if (j.contains("integrator")) {
    const Json& t = j.at("integrator");
    const std::string ip = child(root, "integrator");
    if (!t.is_object()) throw ParseError(ip, "expected an object");
    allow_keys(t, ip, {"method", "dt", "rtol", "atol"});
    if (t.contains("method")) {
      const std::string m = string(t.at("method"), child(ip, "method"));
      if (m == "rk4") {
        s.integrator.method = Integrator::RK4;
      } else if (m == "dormand_prince") {
        s.integrator.method = Integrator::DormandPrince;
      } else {
        throw ParseError(child(ip, "method"), "expected \"rk4\" or \"dormand_prince\"");
      }
    }
    if (t.contains("dt")) s.integrator.dt = positive(t.at("dt"), child(ip, "dt"));
    if (t.contains("rtol")) s.integrator.rtol = positive(t.at("rtol"), child(ip, "rtol"));
    if (t.contains("atol")) s.integrator.atol = positive(t.at("atol"), child(ip, "atol"));
  }
  if (j.contains("seed")) {
    const Json& v = j.at("seed");
    if (!v.is_number_unsigned()) throw ParseError(child(root, "seed"), "expected a non-negative integer");
    s.seed = v.get<std::uint64_t>();
  }
  if (j.contains("diff")) {
    const Json& t = j.at("diff");
    const std::string dp = child(root, "diff");
    if (!t.is_object()) throw ParseError(dp, "expected an object");
    allow_keys(t, dp, {"step_scale"});
    if (t.contains("step_scale")) s.diff.step_scale = positive(t.at("step_scale"), child(dp, "step_scale"));
  }
  if (j.contains("chart")) {
    const Json& t = j.at("chart");
    const std::string cp = child(root, "chart");
    if (!t.is_object()) throw ParseError(cp, "expected an object");
    allow_keys(t, cp, {"radius", "step_scale"});
    if (t.contains("radius")) s.chart.radius = positive(t.at("radius"), child(cp, "radius"));
    if (t.contains("step_scale")) s.chart.step_scale = positive(t.at("step_scale"), child(cp, "step_scale"));
  }
  return s;
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, "cannot open scene file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str(), path);
}

}  // namespace homspray
