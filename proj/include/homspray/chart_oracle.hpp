#pragma once

// Brute-force local-coordinate verifier on the exponential chart x -> exp(x).o.
//
// The invariant Finsler metric pulls back to F_chart(x, v) = F(M(x) v), where
// M(x) v = (T_x v)_m and T_x is the left-trivialized differential of exp.
// Everything else follows the classical coordinate formulas:
//
//   G^i     = 1/4 g^{il} ([F^2]_{x^k y^l} y^k - [F^2]_{x^l})
//   N^i_j   = dG^i / dy^j
//   R^i_k   = 2 dG^i/dx^k - y^j d2G^i/dx^j dy^k + 2 G^j d2G^i/dy^j dy^k
//             - (dG^i/dy^j)(dG^j/dy^k)
//   S       = N^i_i - y^i d(log sigma)/dx^i,   sigma(x) = det M(x)
//
// Since F_chart is F composed with a linear map in v, y-derivatives of F^2
// come from the norm's own tensors (g_chart = M^T g_{My} M); x-derivatives are
// central differences. Derivatives of G are nested differences with widened
// steps, so oracle values carry roughly 1e-6 error.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "homspray/dynamics.hpp"
#include "homspray/errors.hpp"
#include "homspray/finite_difference.hpp"
#include "homspray/homogeneous_spray.hpp"
#include "homspray/lie_algebra.hpp"
#include "homspray/minkowski.hpp"

namespace homspray {

enum class TransportMode { Linear, Nonlinear };

struct ChartOptions {
  double radius = 0.5;
  double dexp_tol = 1e-16;
  double step_scale = 1.0;  ///< multiplies every finite-difference step
};

class ChartMetric {
 public:
  ChartMetric(LieAlgebra g, NormPtr norm, ChartOptions opts = {})
      : g_(std::move(g)), norm_(std::move(norm)), opts_(opts) {
    if (!norm_) throw InputError("ChartMetric: a Minkowski norm is required");
    if (norm_->dim() != g_.dim_m()) throw InputError("ChartMetric: norm dimension does not match dim m");
    if (!g_.check_reductive().reductive)
      throw UnsupportedConfiguration("ChartMetric: the decomposition is not reductive");
    if (!(opts_.radius > 0.0)) throw InputError("ChartMetric: chart radius must be positive");
  }

  explicit ChartMetric(const SprayModel& spray, ChartOptions opts = {})
      : ChartMetric(spray.algebra(), spray.norm_ptr(), opts) {}

  int dim() const { return g_.dim_m(); }
  const LieAlgebra& algebra() const { return g_; }
  const MinkowskiNorm& norm() const { return *norm_; }
  const ChartOptions& options() const { return opts_; }

  /// Matrix of v -> (T_x v)_m.
  Mat chart_matrix(const Vec& x) const {
    check_x(x, "chart_matrix");
    const int n = dim();
    const Vec xg = g_.embed_m(x);
    Mat M(n, n);
    for (int j = 0; j < n; ++j)
      M.col(j) = g_.to_m(g_.dexp_trivialized(xg, g_.embed_m(Vec::Unit(n, j)), opts_.dexp_tol));
    return M;
  }

  double chart_value(const Vec& x, const Vec& v) const {
    check_len(v, "chart_value");
    return norm_->value(chart_matrix(x) * v);
  }

  /// Chart fundamental tensor M^T g_{My} M.
  Mat chart_tensor(const Vec& x, const Vec& y) const {
    const Mat M = chart_matrix(x);
    return M.transpose() * norm_->fundamental_tensor(M * y) * M;
  }

  /// Chart Cartan tensor C_{My}(MU, MV, MW).
  double chart_cartan(const Vec& x, const Vec& y, const Vec& u, const Vec& v, const Vec& w) const {
    const Mat M = chart_matrix(x);
    return norm_->cartan(M * y, M * u, M * v, M * w);
  }

  double sigma(const Vec& x) const { return chart_matrix(x).determinant(); }

  Vec spray_coefficients(const Vec& x, const Vec& y) const {
    check_y(y, "spray_coefficients");
    check_x(x, "spray_coefficients");
    const int n = dim();
    const double h = fd::step(1, opts_.step_scale);
    auto grad_y = [&](const Vec& p) -> Vec {  // d/dy F_chart^2 at (p, y)
      const Mat M = chart_matrix(p);
      const Vec u = M * y;
      return 2.0 * M.transpose() * (norm_->fundamental_tensor(u) * u);
    };
    auto sq = [&](const Vec& p) {
      const double F = norm_->value(chart_matrix(p) * y);
      return F * F;
    };
    const double yn = y.norm();
    const Vec yd = y / yn;
    const Vec mixed = yn * fd::derivative([&](double s) { return grad_y((x + s * yd).eval()); }, h);
    Vec dx(n);
    for (int l = 0; l < n; ++l) {
      const Vec e = Vec::Unit(n, l);
      dx[l] = fd::derivative([&](double s) { return sq((x + s * e).eval()); }, h);
    }
    const Mat gc = chart_tensor(x, y);
    Eigen::LLT<Mat> llt(gc);
    if (llt.info() != Eigen::Success)
      throw StrongConvexityError("spray_coefficients: chart tensor is not positive definite");
    return 0.25 * llt.solve(mixed - dx);
  }

  /// N^i_j = dG^i/dy^j, columns indexed by j.
  Mat connection_coeffs(const Vec& x, const Vec& y) const {
    check_y(y, "connection_coeffs");
    const int n = dim();
    const double yn = y.norm();
    const double h = outer_step(1);
    Mat out(n, n);
    for (int j = 0; j < n; ++j) {
      const Vec e = Vec::Unit(n, j);
      out.col(j) = fd::derivative([&](double r) { return spray_coefficients(x, (y + r * yn * e).eval()); }, h) / yn;
    }
    return out;
  }

  Mat riemann_coeffs(const Vec& x, const Vec& y) const {
    check_y(y, "riemann_coeffs");
    const int n = dim();
    const double yn = y.norm();
    const Vec yd = y / yn;
    const double h1 = outer_step(1), h2 = outer_step(2);
    const Vec G = spray_coefficients(x, y);
    const Mat Ny = connection_coeffs(x, y);
    const double Gn = G.norm();
    Mat R(n, n);
    for (int k = 0; k < n; ++k) {
      const Vec ek = Vec::Unit(n, k);
      const Vec dGdx = fd::derivative([&](double s) { return spray_coefficients((x + s * ek).eval(), y); }, h1);
      const Vec xy = fd::mixed_partial<2>(
                                   [&](const std::array<double, 2>& s) {
                                     return spray_coefficients((x + s[0] * yd).eval(), (y + s[1] * yn * ek).eval());
                                   },
                                   h2);
      Vec yy = Vec::Zero(n);
      if (Gn > 0.0) {
        const Vec Gd = G / Gn;
        yy = Gn / (yn * yn) *
             fd::mixed_partial<2>(
                 [&](const std::array<double, 2>& s) {
                   return spray_coefficients(x, (y + s[0] * yn * Gd + s[1] * yn * ek).eval());
                 },
                 h2);
      }
      R.col(k) = 2.0 * dGdx - xy + 2.0 * yy - Ny * Ny.col(k);
    }
    return R;
  }

  double s_curvature_chart(const Vec& x, const Vec& y) const {
    check_y(y, "s_curvature_chart");
    const double yn = y.norm();
    const Vec yd = y / yn;
    const double dlog = yn * fd::derivative(
                                 [&](double s) { return std::log(std::abs(sigma((x + s * yd).eval()))); },
                                 outer_step(1));
    return connection_coeffs(x, y).trace() - dlog;
  }

  /// Residual |d/dt|_0 (T_x(t) x'(t))_m + eta(y)| along the chart geodesic from (0, y).
  double compare_eta(const SprayModel& spray, const Vec& y, double dt = 1e-2) const {
    check_y(y, "compare_eta");
    const int n = dim();
    Vec s(2 * n);
    s << Vec::Zero(n), y;
    std::array<Vec, 5> yc;
    yc[0] = y;
    for (int k = 1; k < 5; ++k) {
      for (int sub = 0; sub < 4; ++sub) s = geodesic_step(s, 0.25 * dt);
      yc[k] = chart_matrix(s.head(n)) * s.tail(n);
    }
    const Vec d = (-25.0 * yc[0] + 48.0 * yc[1] - 36.0 * yc[2] + 16.0 * yc[3] - 3.0 * yc[4]) / (12.0 * dt);
    return (d + spray.eta(y)).norm();
  }

  /// Chart transport along x(t) = t v, pulled back to m via (T_{x(t)} .)_m.
  /// Linear: v is the curve velocity and w0 the transported vector.
  /// Nonlinear: v is the curve velocity and w0 the nonzero transported vector y0.
  Trajectory transport_chart(TransportMode mode, const Vec& velocity, const Vec& w0, double t_end,
                             double dt = 1e-2) const {
    check_len(velocity, "transport_chart");
    check_len(w0, "transport_chart");
    if (velocity.norm() * t_end > opts_.radius)
      throw ChartRadiusError("transport_chart: base curve leaves the chart radius " + std::to_string(opts_.radius));
    auto rhs = [&](double t, const Vec& X) -> Vec {
      const Vec x = t * velocity;
      if (mode == TransportMode::Linear) return -connection_coeffs(x, velocity) * X;
      return -connection_coeffs(x, X) * velocity;
    };
    IntegratorOptions io;
    io.dt = dt;
    Trajectory tr = integrate_ode(rhs, w0, 0.0, t_end, io);
    tr.meta.integrator = "rk4_chart";
    for (std::size_t i = 0; i < tr.size(); ++i) tr.states[i] = chart_matrix(tr.times[i] * velocity) * tr.states[i];
    return tr;
  }

  /// d/dt C_{x'}(U, U, U) at t = 0 along the chart geodesic from (0, y) with
  /// chart-parallel U, U(0) = w.
  double landsberg_chart(const Vec& y, const Vec& w, double h = 2e-2) const {
    check_y(y, "landsberg_chart");
    check_len(w, "landsberg_chart");
    const int n = dim();
    auto value_at = [&](double t) {
      Vec s(3 * n);
      s << Vec::Zero(n), y, w;
      const int steps = 4;
      for (int k = 0; k < steps; ++k) s = parallel_step(s, t / steps);
      const Vec U = s.tail(n);
      return chart_cartan(s.head(n), s.segment(n, n), U, U, U);
    };
    return fd::derivative(value_at, h);
  }

 private:
  void check_len(const Vec& v, const char* op) const {
    if (v.size() != dim())
      throw InputError(std::string(op) + ": expected m-vector of length " + std::to_string(dim()) + ", got " +
                       std::to_string(v.size()));
  }
  void check_y(const Vec& y, const char* op) const {
    check_len(y, op);
    detail::require_nonzero(y, op);
  }
  void check_x(const Vec& x, const char* op) const {
    check_len(x, op);
    if (x.norm() > opts_.radius * (1.0 + 1e-12))
      throw ChartRadiusError(std::string(op) + ": |x| = " + std::to_string(x.norm()) + " exceeds chart radius " +
                             std::to_string(opts_.radius));
  }

  // Widened step for differences of the (already differenced) G.
  double outer_step(int order) const { return std::sqrt(fd::step(order)) * opts_.step_scale; }

  Vec geodesic_rhs(const Vec& s) const {
    const int n = dim();
    Vec out(2 * n);
    out << s.tail(n), -2.0 * spray_coefficients(s.head(n), s.tail(n));
    return out;
  }

  Vec geodesic_step(const Vec& s, double h) const {
    const Vec k1 = geodesic_rhs(s);
    const Vec k2 = geodesic_rhs(s + 0.5 * h * k1);
    const Vec k3 = geodesic_rhs(s + 0.5 * h * k2);
    const Vec k4 = geodesic_rhs(s + h * k3);
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  // State (x, x', U): geodesic plus linearly parallel U.
  Vec parallel_rhs(const Vec& s) const {
    const int n = dim();
    const Vec x = s.head(n), v = s.segment(n, n), U = s.tail(n);
    Vec out(3 * n);
    out << v, -2.0 * spray_coefficients(x, v), -connection_coeffs(x, v) * U;
    return out;
  }

  Vec parallel_step(const Vec& s, double h) const {
    const Vec k1 = parallel_rhs(s);
    const Vec k2 = parallel_rhs(s + 0.5 * h * k1);
    const Vec k3 = parallel_rhs(s + 0.5 * h * k2);
    const Vec k4 = parallel_rhs(s + h * k3);
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  LieAlgebra g_;
  NormPtr norm_;
  ChartOptions opts_;
};

struct OracleCheck {
  std::string name;
  double max_residual = 0.0;
  double tolerance = 0.0;
  bool pass() const { return max_residual <= tolerance; }
};

struct OracleReport {
  int samples = 0;
  std::uint64_t seed = 0;
  std::vector<OracleCheck> checks;
  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass()) return false;
    return true;
  }
};

/// Origin comparisons of the homogeneous formulas against the chart oracle
/// over `samples` seeded unit directions y (and flag directions w):
///   eta         compare_eta residual                          <= 1e-5
///   riemann     |R - R_chart| / max(|R|, |y|^2)               <= 1e-4
///   s_curvature |S - S_chart|                                 <= 1e-5
///   landsberg   |L - L_chart|                                 <= 1e-4
///   transport   linear and nonlinear along exp(t y).o, t <= 0.4 <= 1e-5
inline OracleReport oracle_compare(const SprayModel& spray, int samples = 20, std::uint64_t seed = 42,
                                   ChartOptions opts = {}, bool transports = true) {
  if (!spray.is_finsler()) throw UnsupportedConfiguration("oracle_compare needs a Finsler source");
  const ChartMetric chart(spray, opts);
  const int n = spray.dim();
  OracleReport r;
  r.samples = samples;
  r.seed = seed;
  OracleCheck eta{"eta", 0.0, 1e-5}, riem{"riemann", 0.0, 1e-4}, s{"s_curvature", 0.0, 1e-5},
      lands{"landsberg", 0.0, 1e-4}, lin{"linear_transport", 0.0, 1e-5}, nonlin{"nonlinear_transport", 0.0, 1e-5};
  const auto ys = sample_directions(n, samples, seed);
  const auto ws = sample_directions(n, samples, seed + 1);
  const Vec origin = Vec::Zero(n);
  const double t_end = 0.4;
  for (int k = 0; k < samples; ++k) {
    const Vec y = ys[k] / ys[k].norm();
    const Vec w = ws[k] / ws[k].norm();
    eta.max_residual = std::max(eta.max_residual, chart.compare_eta(spray, y));
    const Mat R = spray.riemann_operator(y);
    riem.max_residual = std::max(riem.max_residual, (R - chart.riemann_coeffs(origin, y)).norm() /
                                                        std::max(R.norm(), y.squaredNorm()));
    s.max_residual = std::max(s.max_residual, std::abs(spray.s_curvature(y) - chart.s_curvature_chart(origin, y)));
    lands.max_residual = std::max(lands.max_residual, std::abs(spray.landsberg(y, w) - chart.landsberg_chart(y, w)));
    if (transports && k < 3) {
      const Trajectory a = linear_transport(spray, CurveFn([&y](double) { return y; }), w, t_end);
      const Trajectory b = chart.transport_chart(TransportMode::Linear, y, w, t_end);
      lin.max_residual = std::max(lin.max_residual, (a.back() - b.back()).norm());
      const Trajectory c = nonlinear_transport(spray, CurveFn([&w](double) { return w; }), y, t_end);
      const Trajectory d = chart.transport_chart(TransportMode::Nonlinear, w, y, t_end);
      nonlin.max_residual = std::max(nonlin.max_residual, (c.back() - d.back()).norm());
    }
  }
  r.checks = {eta, riem, s, lands};
  if (transports) {
    r.checks.push_back(lin);
    r.checks.push_back(nonlin);
  }
  return r;
}

}  // namespace homspray
