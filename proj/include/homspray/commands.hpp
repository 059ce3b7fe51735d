#pragma once

// Batch commands behind the `homspray` executable. Each command writes its
// result to a stream and returns 0 on success or 1 on a failed check;
// library errors propagate to the caller, which maps them to exit codes.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "homspray/chart_oracle.hpp"
#include "homspray/dynamics.hpp"
#include "homspray/errors.hpp"
#include "homspray/homogeneous_spray.hpp"
#include "homspray/io.hpp"
#include "homspray/scene.hpp"

namespace homspray {

enum class OutputFormat { Csv, Json };

struct CommandOptions {
  std::optional<Vec> y;
  std::optional<Vec> w;
  std::optional<double> t_end;
  std::optional<double> dt;  ///< overrides the scene integrator step
  int grid = 16;
  std::uint64_t seed = 42;
  std::optional<OutputFormat> format;
  std::string mode = "linear";  ///< transport: linear | nonlinear
  std::string base = "geodesic";  ///< transport base velocity: geodesic | constant
  int samples = 20;
  unsigned threads = 0;  ///< 0: hardware concurrency
};

namespace cmd_detail {

using io::Json;

inline Vec require_vec(const std::optional<Vec>& v, const char* flag, int n) {
  if (!v) throw InputError(std::string("missing required flag --") + flag);
  if (v->size() != n)
    throw InputError(std::string("--") + flag + " expects " + std::to_string(n) + " components, got " +
                     std::to_string(v->size()));
  return *v;
}

inline IntegratorOptions integrator(const Scene& s, const CommandOptions& o) {
  IntegratorOptions io = s.integrator;
  if (o.dt) io.dt = *o.dt;
  return io;
}

inline OutputFormat json_only(const CommandOptions& o, const char* cmd) {
  if (o.format && *o.format == OutputFormat::Csv)
    throw InputError(std::string(cmd) + " writes JSON only");
  return OutputFormat::Json;
}

inline Json check(const std::string& name, double value, double tol, bool pass) {
  return Json{{"name", name}, {"value", value}, {"tolerance", tol}, {"pass", pass}};
}

inline Json header(const std::string& command, const Scene& s, const CommandOptions& o) {
  return Json{{"command", command}, {"scene", s.name}, {"seed", o.seed}};
}

// Killing form; nondegenerate exactly for semisimple algebras.
inline std::optional<Mat> inverse_killing_form(const LieAlgebra& g) {
  const int d = g.dim();
  Mat B(d, d);
  std::vector<Mat> ad;
  for (int i = 0; i < d; ++i) ad.push_back(g.ad_matrix(Vec::Unit(d, i)));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) B(i, j) = (ad[i] * ad[j]).trace();
  Eigen::FullPivLU<Mat> lu(B);
  if (!lu.isInvertible()) return std::nullopt;
  return lu.inverse();
}

/// Basis of the g_y-orthogonal complement of y (Gram-Schmidt in g_y).
inline std::vector<Vec> orthogonal_complement(const Mat& G, const Vec& y) {
  const int n = static_cast<int>(y.size());
  std::vector<Vec> basis{y / std::sqrt(y.dot(G * y))};
  for (int i = 0; i < n && static_cast<int>(basis.size()) < n; ++i) {
    Vec v = Vec::Unit(n, i);
    for (const Vec& b : basis) v -= v.dot(G * b) * b;
    const double nv = std::sqrt(std::max(0.0, v.dot(G * v)));
    if (nv > 1e-8) basis.push_back(v / nv);
  }
  basis.erase(basis.begin());
  return basis;
}

}  // namespace cmd_detail

/// Structure, reductivity, convexity, invariance and equivariance checks.
inline int cmd_validate(const Scene& s, const CommandOptions& o, std::ostream& os) {
  using namespace cmd_detail;
  cmd_detail::json_only(o, "validate");
  const LieAlgebra& g = s.algebra;
  const double tol = s.tol.structure;
  Json checks = Json::array();
  bool ok = true;
  auto add = [&](const std::string& name, double value, double t, bool pass) {
    checks.push_back(check(name, value, t, pass));
    ok = ok && pass;
  };
  const StructureReport st = g.check_structure();
  add("antisymmetry", st.antisymmetry, tol, st.antisymmetry <= tol);
  add("jacobi", st.jacobi, tol, st.jacobi <= tol);
  add("subalgebra", st.subalgebra, tol, st.subalgebra <= tol);
  const ReductivityReport red = g.check_reductive(tol);
  add("reductive", red.max_violation, tol, red.reductive);
  if (s.rep) {
    const double r = s.rep->commutator_residual(g);
    add("representation", r, 1e-10, r <= 1e-10);
  }
  if (s.norm) {
    const ConvexityReport cv = check_strong_convexity(*s.norm, 64, o.seed);
    add("strong_convexity", cv.min_eigenvalue, 0.0, cv.ok);
    if (red.reductive) {
      const InvarianceReport inv = check_ad_h_invariance(*s.norm, g, 64, o.seed, s.tol.invariance);
      add("ad_h_invariance", inv.max_violation, s.tol.invariance, inv.pass);
    }
  }
  if (ok && red.reductive) {
    const SprayModel spray = s.spray();
    const EquivarianceReport eq = spray.check_equivariance(32, o.seed, s.tol.equivariance);
    add("equivariance", eq.max_residual, s.tol.equivariance, eq.pass);
  }
  Json out = header("validate", s, o);
  out["unimodular"] = g.is_unimodular(tol);
  out["checks"] = checks;
  out["pass"] = ok;
  io::write_json(os, out);
  return ok ? 0 : 1;
}

/// eta(y), the columns N(y, e_j) and homogeneity residuals.
inline int cmd_eta(const Scene& s, const CommandOptions& o, std::ostream& os) {
  using namespace cmd_detail;
  json_only(o, "eta");
  const SprayModel spray = s.spray();
  const int n = spray.dim();
  const Vec y = require_vec(o.y, "y", n);
  const Mat N = spray.connection_matrix(y);
  Json cols = Json::array();
  for (int j = 0; j < n; ++j) cols.push_back(io::to_json(Vec(N.col(j))));
  HomogeneityResiduals h;
  for (int j = 0; j < n; ++j) {
    const HomogeneityResiduals r = spray.homogeneity(y, Vec::Unit(n, j));
    h.eta = std::max(h.eta, r.eta);
    h.connection = std::max(h.connection, r.connection);
  }
  Json out = header("eta", s, o);
  out["y"] = io::to_json(y);
  out["eta"] = io::to_json(spray.eta(y));
  out["N_columns"] = cols;
  out["homogeneity"] = Json{{"eta", h.eta},
                            {"connection", h.connection},
                            {"tolerance", s.tol.homogeneity},
                            {"pass", h.eta <= s.tol.homogeneity && h.connection <= s.tol.homogeneity}};
  io::write_json(os, out);
  return 0;
}

/// R_y with its five summands, S(y), flag and Landsberg curvatures.
inline int cmd_curvature(const Scene& s, const CommandOptions& o, std::ostream& os) {
  using namespace cmd_detail;
  json_only(o, "curvature");
  const SprayModel spray = s.spray();
  const int n = spray.dim();
  const Vec y = require_vec(o.y, "y", n);
  const RiemannTerms rt = spray.riemann_terms(y);
  Json out = header("curvature", s, o);
  out["y"] = io::to_json(y);
  out["R"] = io::to_json(rt.total);
  Json terms;
  for (std::size_t i = 0; i < rt.terms.size(); ++i) terms[RiemannTerms::kNames[i]] = io::to_json(rt.terms[i]);
  out["terms"] = terms;
  out["R_y_y"] = io::to_json(Vec(rt.total * y));
  out["S"] = spray.s_curvature(y);
  out["unimodular"] = spray.is_unimodular();
  if (spray.is_finsler()) {
    const Mat G = spray.norm().fundamental_tensor(y);
    Json flags = Json::array(), lands = Json::array();
    for (const Vec& w : orthogonal_complement(G, y)) {
      flags.push_back(Json{{"w", io::to_json(w)}, {"K", spray.flag_curvature(y, w)}});
      lands.push_back(Json{{"w", io::to_json(w)}, {"L", spray.landsberg(y, w)}});
    }
    out["flag_curvatures"] = flags;
    out["landsberg"] = lands;
  }
  io::write_json(os, out);
  return 0;
}

/// y(t) along the geodesic plus F, energy and (H = {e}, semisimple) Casimir columns.
inline int cmd_geodesic(const Scene& s, const CommandOptions& o, std::ostream& os) {
  using namespace cmd_detail;
  const SprayModel spray = s.spray();
  const int n = spray.dim();
  const Vec y0 = require_vec(o.y, "y", n);
  const Trajectory tr = integrate_geodesic(spray, y0, o.t_end.value_or(1.0), integrator(s, o));
  std::optional<Mat> Binv;
  if (spray.is_finsler() && s.algebra.dim_h() == 0) Binv = inverse_killing_form(s.algebra);
  std::vector<std::string> extra;
  if (spray.is_finsler()) extra = {"F", "energy"};
  if (Binv) extra.push_back("casimir");
  auto extras = [&](const Vec& y) {
    std::vector<double> v;
    if (!spray.is_finsler()) return v;
    const double F = spray.norm().value(y);
    v = {F, 0.5 * F * F};
    if (Binv) {
      const Vec mu = spray.norm().fundamental_tensor(y) * y;
      v.push_back(mu.dot(*Binv * mu));
    }
    return v;
  };
  if (o.format.value_or(OutputFormat::Csv) == OutputFormat::Json) {
    Json out = header("geodesic", s, o);
    out["trajectory"] = io::to_json(tr);
    for (std::size_t c = 0; c < extra.size(); ++c) {
      Json col = Json::array();
      for (const Vec& y : tr.states) col.push_back(extras(y)[c]);
      out[extra[c]] = col;
    }
    io::write_json(os, out);
    return 0;
  }
  std::vector<std::string> cols{"t"};
  for (int i = 0; i < n; ++i) cols.push_back("y" + std::to_string(i + 1));
  cols.insert(cols.end(), extra.begin(), extra.end());
  io::write_csv_header(os, cols);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::vector<double> row{tr.times[k]};
    for (int i = 0; i < n; ++i) row.push_back(tr.states[k][i]);
    for (double v : extras(tr.states[k])) row.push_back(v);
    io::write_csv_row(os, row);
  }
  return 0;
}

/// Transport of --w along the base velocity curve started at --y.
/// Linear: w' + N(v, w) + [v, w]_m = 0. Nonlinear: u' + N(u, v) = 0 with u(0) = --w.
/// The base velocity v(t) is either the geodesic from --y or the constant --y.
inline int cmd_transport(const Scene& s, const CommandOptions& o, std::ostream& os) {
  using namespace cmd_detail;
  const SprayModel spray = s.spray();
  const LieAlgebra& g = spray.algebra();
  const int n = spray.dim();
  const Vec v0 = require_vec(o.y, "y", n);
  const Vec u0 = require_vec(o.w, "w", n);
  detail::require_nonzero(v0, "transport base velocity");
  const bool linear = o.mode == "linear";
  if (!linear && o.mode != "nonlinear") throw InputError("--mode must be linear or nonlinear");
  const bool geodesic = o.base == "geodesic";
  if (!geodesic && o.base != "constant") throw InputError("--base must be geodesic or constant");
  if (!linear) detail::require_nonzero(u0, "nonlinear transport initial vector");
  Vec s0(2 * n);
  s0 << v0, u0;
  auto rhs = [&](double, const Vec& st) -> Vec {
    const Vec v = st.head(n), u = st.tail(n);
    Vec out(2 * n);
    const Vec dv = geodesic ? Vec(-spray.eta(v)) : Vec(Vec::Zero(n));
    const Vec du = linear ? Vec(-spray.connection(v, u) - g.bracket_m(v, u)) : Vec(-spray.connection(u, v));
    out << dv, du;
    return out;
  };
  const double tv = 1e-9 * v0.norm(), tu = 1e-9 * u0.norm();
  const Trajectory tr = integrate_ode(rhs, s0, 0.0, o.t_end.value_or(1.0), integrator(s, o), [&](double t, const Vec& st) {
    if (st.head(n).norm() < tv || (!linear && st.tail(n).norm() < tu))
      throw ConeExitError("transport: left the slit cone at t = " + std::to_string(t));
  });
  std::vector<std::string> cols{"t"};
  for (int i = 0; i < n; ++i) cols.push_back("v" + std::to_string(i + 1));
  for (int i = 0; i < n; ++i) cols.push_back("w" + std::to_string(i + 1));
  const bool with_norm = spray.is_finsler() && !linear;
  if (with_norm) cols.push_back("F_w");
  if (o.format.value_or(OutputFormat::Csv) == OutputFormat::Json) {
    Json out = header("transport", s, o);
    out["mode"] = o.mode;
    out["base"] = o.base;
    out["columns"] = cols;
    Json rows = Json::array();
    for (std::size_t k = 0; k < tr.size(); ++k) {
      Json row = Json::array({tr.times[k]});
      for (int i = 0; i < 2 * n; ++i) row.push_back(tr.states[k][i]);
      if (with_norm) row.push_back(spray.norm().value(tr.states[k].tail(n)));
      rows.push_back(row);
    }
    out["rows"] = rows;
    io::write_json(os, out);
    return 0;
  }
  io::write_csv_header(os, cols);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    std::vector<double> row{tr.times[k]};
    for (int i = 0; i < 2 * n; ++i) row.push_back(tr.states[k][i]);
    if (with_norm) row.push_back(spray.norm().value(tr.states[k].tail(n)));
    io::write_csv_row(os, row);
  }
  return 0;
}

struct ScanPoint {
  int index = 0;
  int i = 0, j = 0;
  double theta = 0.0;
  Vec w;
  std::optional<double> K;  ///< empty when the flag is degenerate
};

/// Flag curvature K(y, w) with w = cos(theta) e_i + sin(theta) e_j for every
/// basis pair i < j and theta = pi k / grid, k = 0 .. grid-1. Points are
/// evaluated by a pool of workers pulling indices from a shared counter;
/// results are stored by index, so output does not depend on thread count.
inline std::vector<ScanPoint> flag_scan(const SprayModel& spray, const Vec& y, int grid, unsigned threads = 0) {
  if (grid <= 0) throw InputError("--grid must be positive");
  const int n = spray.dim();
  std::vector<ScanPoint> pts;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = 0; k < grid; ++k) {
        ScanPoint p;
        p.index = static_cast<int>(pts.size());
        p.i = i;
        p.j = j;
        p.theta = std::numbers::pi * k / grid;
        p.w = std::cos(p.theta) * Vec::Unit(n, i) + std::sin(p.theta) * Vec::Unit(n, j);
        pts.push_back(std::move(p));
      }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, pts.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  auto work = [&](unsigned id) {
    try {
      for (std::size_t k = next++; k < pts.size(); k = next++) {
        try {
          pts[k].K = spray.flag_curvature(y, pts[k].w);
        } catch (const DegenerateFlagError&) {
          pts[k].K.reset();
        }
      }
    } catch (...) {
      errors[id] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return pts;
}

inline int cmd_scan(const Scene& s, const CommandOptions& o, std::ostream& os) {
  using namespace cmd_detail;
  const SprayModel spray = s.spray();
  const int n = spray.dim();
  const Vec y = require_vec(o.y, "y", n);
  const auto pts = flag_scan(spray, y, o.grid, o.threads);
  if (o.format.value_or(OutputFormat::Csv) == OutputFormat::Json) {
    Json out = header("scan", s, o);
    out["y"] = io::to_json(y);
    Json arr = Json::array();
    for (const auto& p : pts)
      arr.push_back(Json{{"index", p.index},
                         {"i", p.i + 1},
                         {"j", p.j + 1},
                         {"theta", p.theta},
                         {"w", io::to_json(p.w)},
                         {"K", p.K ? Json(*p.K) : Json(nullptr)}});
    out["points"] = arr;
    io::write_json(os, out);
    return 0;
  }
  std::vector<std::string> cols{"index", "i", "j", "theta"};
  for (int i = 0; i < n; ++i) cols.push_back("w" + std::to_string(i + 1));
  cols.push_back("K");
  io::write_csv_header(os, cols);
  for (const auto& p : pts) {
    os << p.index << ',' << p.i + 1 << ',' << p.j + 1 << ',' << io::format_number(p.theta);
    for (int i = 0; i < n; ++i) os << ',' << io::format_number(p.w[i]);
    os << ',' << (p.K ? io::format_number(*p.K) : std::string()) << '\n';
  }
  return 0;
}

/// Chart-oracle comparison table; exit 1 if any residual exceeds its tolerance.
inline int cmd_oracle_compare(const Scene& s, const CommandOptions& o, std::ostream& os) {
  using namespace cmd_detail;
  json_only(o, "oracle-compare");
  const SprayModel spray = s.spray();
  const OracleReport r = oracle_compare(spray, o.samples, o.seed, s.chart);
  Json out = header("oracle-compare", s, o);
  out["samples"] = r.samples;
  Json rows = Json::array();
  for (const auto& c : r.checks)
    rows.push_back(Json{{"name", c.name}, {"max_residual", c.max_residual}, {"tolerance", c.tolerance},
                        {"pass", c.pass()}});
  out["checks"] = rows;
  out["pass"] = r.pass();
  io::write_json(os, out);
  return r.pass() ? 0 : 1;
}

}  // namespace homspray
