#pragma once

// ODE layer on m: geodesics (integral curves of -eta), linear and nonlinear
// parallel transport, group-curve reconstruction and the lift of a curve in G
// to one whose left-trivialized velocity stays in m.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "homspray/errors.hpp"
#include "homspray/homogeneous_spray.hpp"
#include "homspray/lie_algebra.hpp"

namespace homspray {

enum class Integrator { RK4, DormandPrince };

struct IntegratorOptions {
  Integrator method = Integrator::RK4;
  double dt = 1e-3;     ///< fixed step (RK4) or initial step (Dormand-Prince)
  double rtol = 1e-10;  ///< Dormand-Prince only
  double atol = 1e-12;  ///< Dormand-Prince only
  int max_steps = 50'000'000;
};

struct TrajectoryMeta {
  std::string integrator;
  double dt = 0.0;
  long accepted = 0;
  long rejected = 0;
};

/// Time-sampled curve in m. Times strictly increasing.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  TrajectoryMeta meta;

  std::size_t size() const { return times.size(); }
  const Vec& back() const { return states.back(); }
};

struct GroupTrajectory {
  std::vector<double> times;
  std::vector<Mat> matrices;
  double orthogonality_drift = 0.0;  ///< max |C^T C - I|, meaningful for orthogonal representations
};

using CurveFn = std::function<Vec(double)>;
using OdeRhs = std::function<Vec(double, const Vec&)>;
using StateGuard = std::function<void(double, const Vec&)>;

namespace detail {

inline void check_finite(double t, const Vec& y) {
  if (!y.allFinite()) throw NumericalError("ODE state became non-finite at t = " + std::to_string(t));
}

inline Trajectory integrate_rk4(const OdeRhs& f, Vec y, double t0, double t_end, double dt,
                                const StateGuard& guard) {
  Trajectory tr;
  tr.meta.integrator = "rk4";
  tr.meta.dt = dt;
  const long steps = std::max<long>(1, std::lround(std::ceil((t_end - t0) / dt - 1e-9)));
  const double h = (t_end - t0) / static_cast<double>(steps);
  tr.meta.dt = h;
  tr.times.reserve(steps + 1);
  tr.states.reserve(steps + 1);
  tr.times.push_back(t0);
  tr.states.push_back(y);
  for (long s = 0; s < steps; ++s) {
    const double t = t0 + s * h;
    const Vec k1 = f(t, y);
    const Vec k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const Vec k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const Vec k4 = f(t + h, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double tn = (s + 1 == steps) ? t_end : t0 + (s + 1) * h;
    check_finite(tn, y);
    if (guard) guard(tn, y);
    tr.times.push_back(tn);
    tr.states.push_back(y);
    ++tr.meta.accepted;
  }
  return tr;
}

// Dormand-Prince 5(4) with standard step control.
inline Trajectory integrate_dp45(const OdeRhs& f, Vec y, double t0, double t_end, const IntegratorOptions& o,
                                 const StateGuard& guard) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // b - b* (embedded 4th-order weights)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  Trajectory tr;
  tr.meta.integrator = "dormand_prince";
  tr.meta.dt = o.dt;
  tr.times.push_back(t0);
  tr.states.push_back(y);
  double t = t0;
  double h = std::min(o.dt, t_end - t0);
  Vec k1 = f(t, y);
  for (int step = 0; t < t_end; ++step) {
    if (step > o.max_steps) throw NumericalError("Dormand-Prince: step budget exhausted");
    if (t + h > t_end) h = t_end - t;
    const Vec k2 = f(t + c2 * h, y + h * (a21 * k1));
    const Vec k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec yn = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = f(t + h, yn);
    const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = o.atol + o.rtol * std::max(std::abs(y[i]), std::abs(yn[i]));
      en = std::max(en, std::abs(err[i]) / sc);
    }
    if (en <= 1.0) {
      t = (t_end - (t + h) < 1e-14 * std::max(1.0, std::abs(t_end))) ? t_end : t + h;
      y = yn;
      k1 = k7;
      check_finite(t, y);
      if (guard) guard(t, y);
      tr.times.push_back(t);
      tr.states.push_back(y);
      ++tr.meta.accepted;
    } else {
      ++tr.meta.rejected;
    }
    const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    h *= fac;
    if (h < 1e-14 * std::max(1.0, std::abs(t))) throw NumericalError("Dormand-Prince: step size underflow");
  }
  return tr;
}

}  // namespace detail

/// Integrates y' = f(t, y) on [t0, t_end]; guard may throw to abort.
inline Trajectory integrate_ode(const OdeRhs& f, const Vec& y0, double t0, double t_end,
                                const IntegratorOptions& opts = {}, const StateGuard& guard = {}) {
  if (!(t_end > t0)) throw InputError("integrate_ode: need t_end > t0");
  if (!(opts.dt > 0.0)) throw InputError("integrate_ode: dt must be positive");
  if (opts.method == Integrator::RK4) return detail::integrate_rk4(f, y0, t0, t_end, opts.dt, guard);
  return detail::integrate_dp45(f, y0, t0, t_end, opts, guard);
}

/// Cubic (4-point Lagrange) interpolation of samples. Throws outside the
/// sampled interval.
inline CurveFn interpolate(const Trajectory& tr) {
  if (tr.size() < 2) throw InputError("interpolate: need at least two samples");
  auto times = std::make_shared<const std::vector<double>>(tr.times);
  auto states = std::make_shared<const std::vector<Vec>>(tr.states);
  return [times, states](double t) -> Vec {
    const auto& T = *times;
    const auto& S = *states;
    const double slack = 1e-9 * std::max(1.0, std::abs(T.back() - T.front()));
    if (t < T.front() - slack || t > T.back() + slack)
      throw InputError("interpolate: t = " + std::to_string(t) + " outside [" + std::to_string(T.front()) + ", " +
                       std::to_string(T.back()) + "]");
    const std::size_t n = T.size();
    if (n < 4) {
      const std::size_t i = (n == 3 && t >= T[1]) ? 1 : 0;
      const double a = (t - T[i]) / (T[i + 1] - T[i]);
      return (1.0 - a) * S[i] + a * S[i + 1];
    }
    auto it = std::upper_bound(T.begin(), T.end(), t);
    std::size_t hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - T.begin(), 1, n - 1));
    std::size_t start = hi >= 2 ? hi - 2 : 0;
    start = std::min(start, n - 4);
    Vec out = Vec::Zero(S[start].size());
    for (std::size_t i = start; i < start + 4; ++i) {
      double w = 1.0;
      for (std::size_t j = start; j < start + 4; ++j)
        if (j != i) w *= (t - T[j]) / (T[i] - T[j]);
      out += w * S[i];
    }
    return out;
  };
}

inline StateGuard cone_guard(double threshold, const char* what) {
  return [threshold, what](double t, const Vec& y) {
    if (y.norm() < threshold)
      throw ConeExitError(std::string(what) + ": |y| fell below " + std::to_string(threshold) + " at t = " +
                          std::to_string(t) + " (left the slit cone)");
  };
}

/// Integral curve of -eta from y0.
inline Trajectory integrate_geodesic(const SprayModel& spray, const Vec& y0, double t_end,
                                     const IntegratorOptions& opts = {}) {
  detail::require_nonzero(y0, "integrate_geodesic");
  return integrate_ode([&](double, const Vec& y) { return Vec(-spray.eta(y)); }, y0, 0.0, t_end, opts,
                       cone_guard(1e-9 * y0.norm(), "integrate_geodesic"));
}

/// w' + N(y(t), w) + [y(t), w]_m = 0 along the base velocity curve y(t).
inline Trajectory linear_transport(const SprayModel& spray, const CurveFn& y_curve, const Vec& w0, double t_end,
                                   const IntegratorOptions& opts = {}) {
  const LieAlgebra& g = spray.algebra();
  auto rhs = [&](double t, const Vec& w) -> Vec {
    const Vec y = y_curve(t);
    if (y.norm() == 0.0) throw ConeExitError("linear_transport: base velocity vanishes at t = " + std::to_string(t));
    return -spray.connection(y, w) - g.bracket_m(y, w);
  };
  return integrate_ode(rhs, w0, 0.0, t_end, opts);
}

inline Trajectory linear_transport(const SprayModel& spray, const Trajectory& y_curve, const Vec& w0, double t_end,
                                   const IntegratorOptions& opts = {}) {
  return linear_transport(spray, interpolate(y_curve), w0, t_end, opts);
}

/// y' + N(y, w(t)) = 0 for the base velocity curve w(t).
inline Trajectory nonlinear_transport(const SprayModel& spray, const CurveFn& w_curve, const Vec& y0, double t_end,
                                      const IntegratorOptions& opts = {}) {
  detail::require_nonzero(y0, "nonlinear_transport");
  return integrate_ode([&](double t, const Vec& y) { return Vec(-spray.connection(y, w_curve(t))); }, y0, 0.0,
                       t_end, opts, cone_guard(1e-9 * y0.norm(), "nonlinear_transport"));
}

inline Trajectory nonlinear_transport(const SprayModel& spray, const Trajectory& w_curve, const Vec& y0,
                                      double t_end, const IntegratorOptions& opts = {}) {
  return nonlinear_transport(spray, interpolate(w_curve), y0, t_end, opts);
}

struct GeodesicTransport {
  Trajectory y;  ///< geodesic velocity
  Trajectory w;  ///< linearly parallel field along it
};

/// Geodesic and a linearly parallel field integrated as one coupled system.
inline GeodesicTransport transport_along_geodesic(const SprayModel& spray, const Vec& y0, const Vec& w0,
                                                  double t_end, const IntegratorOptions& opts = {}) {
  detail::require_nonzero(y0, "transport_along_geodesic");
  const int n = spray.dim();
  const LieAlgebra& g = spray.algebra();
  Vec s0(2 * n);
  s0 << y0, w0;
  auto rhs = [&](double, const Vec& s) -> Vec {
    const Vec y = s.head(n), w = s.tail(n);
    Vec out(2 * n);
    out << -spray.eta(y), -spray.connection(y, w) - g.bracket_m(y, w);
    return out;
  };
  const double thr = 1e-9 * y0.norm();
  Trajectory joint = integrate_ode(rhs, s0, 0.0, t_end, opts, [thr](double t, const Vec& s) {
    if (s.head(s.size() / 2).norm() < thr)
      throw ConeExitError("transport_along_geodesic: left the slit cone at t = " + std::to_string(t));
  });
  GeodesicTransport out;
  out.y.times = out.w.times = joint.times;
  out.y.meta = out.w.meta = joint.meta;
  for (const Vec& s : joint.states) {
    out.y.states.push_back(s.head(n));
    out.w.states.push_back(s.tail(n));
  }
  return out;
}

struct RhoFlowReport {
  double max_deviation = 0.0;
  int samples = 0;
};

/// Compares the flow of the autonomous field -N(., w) (generic ODE entry) with
/// nonlinear transport along constant velocity w, from sampled start points.
inline RhoFlowReport rho_flow_check(const SprayModel& spray, const Vec& w, double t_end, int samples = 8,
                                    std::uint64_t seed = 42, const IntegratorOptions& opts = {}) {
  detail::require_nonzero(w, "rho_flow_check");
  RhoFlowReport r;
  for (const Vec& raw : sample_directions(spray.dim(), samples, seed)) {
    const Vec y0 = raw / raw.norm();
    const Trajectory flow =
        integrate_ode([&](double, const Vec& y) { return Vec(-spray.connection(y, w)); }, y0, 0.0, t_end, opts);
    const Trajectory nl = nonlinear_transport(spray, CurveFn([&w](double) { return w; }), y0, t_end, opts);
    for (std::size_t i = 0; i < flow.size(); ++i)
      r.max_deviation = std::max(r.max_deviation, (flow.states[i] - nl.states[i]).norm());
    ++r.samples;
  }
  return r;
}

namespace detail {

inline double orthogonality_drift(const std::vector<Mat>& Cs) {
  double d = 0.0;
  for (const Mat& C : Cs) d = std::max(d, (C.transpose() * C - Mat::Identity(C.rows(), C.cols())).norm());
  return d;
}

// 4th-order central differences on a uniform grid, one-sided 4th order at the
// two samples nearest each end.
template <class T>
std::vector<T> differentiate_samples(const std::vector<double>& times, const std::vector<T>& x) {
  const std::size_t n = x.size();
  if (n < 5) throw InputError("differentiate_samples: need at least five samples");
  const double h = (times.back() - times.front()) / static_cast<double>(n - 1);
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs((times[i] - times[i - 1]) - h) > 1e-8 * h)
      throw InputError("differentiate_samples: sample grid must be uniform");
  std::vector<T> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= 2 && i + 2 < n) {
      d[i] = (x[i - 2] - 8.0 * x[i - 1] + 8.0 * x[i + 1] - x[i + 2]) / (12.0 * h);
    } else if (i < 2) {
      d[i] = (-25.0 * x[i] + 48.0 * x[i + 1] - 36.0 * x[i + 2] + 16.0 * x[i + 3] - 3.0 * x[i + 4]) / (12.0 * h);
    } else {
      d[i] = (25.0 * x[i] - 48.0 * x[i - 1] + 36.0 * x[i - 2] - 16.0 * x[i - 3] + 3.0 * x[i - 4]) / (12.0 * h);
    }
  }
  return d;
}

}  // namespace detail

/// Solves C' = C rep(y(t)) from the identity with RK4 on the trajectory grid.
inline GroupTrajectory reconstruct_group_curve(const MatrixRepresentation& rep, const LieAlgebra& g,
                                               const Trajectory& y_traj) {
  if (rep.dim() != g.dim()) throw InputError("reconstruct_group_curve: representation does not match algebra");
  if (y_traj.size() < 2) throw InputError("reconstruct_group_curve: need at least two samples");
  const CurveFn y_at = interpolate(y_traj);
  auto X = [&](double t) { return rep.to_matrix(g.embed_m(y_at(t))); };
  GroupTrajectory out;
  Mat C = Mat::Identity(rep.size(), rep.size());
  out.times.push_back(y_traj.times.front());
  out.matrices.push_back(C);
  for (std::size_t i = 0; i + 1 < y_traj.size(); ++i) {
    const double t = y_traj.times[i], h = y_traj.times[i + 1] - t;
    const Mat k1 = C * X(t);
    const Mat k2 = (C + 0.5 * h * k1) * X(t + 0.5 * h);
    const Mat k3 = (C + 0.5 * h * k2) * X(t + 0.5 * h);
    const Mat k4 = (C + h * k3) * X(t + h);
    C += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!C.allFinite()) throw NumericalError("reconstruct_group_curve: non-finite matrix");
    out.times.push_back(y_traj.times[i + 1]);
    out.matrices.push_back(C);
  }
  out.orthogonality_drift = detail::orthogonality_drift(out.matrices);
  return out;
}

/// Left-trivialized velocities g^{-1} g' of a uniformly sampled group curve.
inline Trajectory trivialized_velocity(const MatrixRepresentation& rep, const GroupTrajectory& curve) {
  const auto dg = detail::differentiate_samples(curve.times, curve.matrices);
  Trajectory out;
  out.times = curve.times;
  out.meta.integrator = "finite_difference";
  for (std::size_t i = 0; i < dg.size(); ++i)
    out.states.push_back(rep.from_matrix(curve.matrices[i].partialPivLu().solve(dg[i])));
  return out;
}

struct LiftResult {
  GroupTrajectory h;       ///< the H-valued factor, h(0) = identity
  Trajectory y;            ///< (Ad(h^{-1}) g^{-1} g')_m, in m coordinates
  double max_h_residual = 0.0;  ///< max |h-part of (g h)^{-1} (g h)'|
  bool blew_up = false;    ///< integration stopped early
};

/// Finds h(t) in H with h(0) = e such that g(t) h(t) has left-trivialized
/// velocity in m:  h' = -h (Ad(h^{-1}) g^{-1} g')_h.
inline LiftResult lift_curve(const MatrixRepresentation& rep, const LieAlgebra& g, const GroupTrajectory& curve) {
  if (rep.dim() != g.dim()) throw InputError("lift_curve: representation does not match algebra");
  Trajectory xi = trivialized_velocity(rep, curve);
  const CurveFn xi_at = interpolate(xi);
  auto hpart = [&](const Mat& h, double t) -> Mat {
    const Mat Xi = rep.to_matrix(xi_at(t));
    const Vec ad = rep.from_matrix(h.partialPivLu().solve(Xi * h));
    return rep.to_matrix(g.project_h(ad));
  };
  LiftResult out;
  Mat h = Mat::Identity(rep.size(), rep.size());
  out.h.times.push_back(curve.times.front());
  out.h.matrices.push_back(h);
  for (std::size_t i = 0; i + 1 < curve.times.size(); ++i) {
    const double t = curve.times[i], dt = curve.times[i + 1] - t;
    const Mat k1 = -h * hpart(h, t);
    const Mat h2 = h + 0.5 * dt * k1;
    const Mat k2 = -h2 * hpart(h2, t + 0.5 * dt);
    const Mat h3 = h + 0.5 * dt * k2;
    const Mat k3 = -h3 * hpart(h3, t + 0.5 * dt);
    const Mat h4 = h + dt * k3;
    const Mat k4 = -h4 * hpart(h4, t + dt);
    h += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!h.allFinite() || h.norm() > 1e12) {
      out.blew_up = true;
      break;
    }
    out.h.times.push_back(curve.times[i + 1]);
    out.h.matrices.push_back(h);
  }
  out.h.orthogonality_drift = detail::orthogonality_drift(out.h.matrices);

  out.y.times = out.h.times;
  out.y.meta.integrator = "rk4";
  GroupTrajectory lifted;
  lifted.times = out.h.times;
  for (std::size_t i = 0; i < out.h.times.size(); ++i) {
    const Mat& hi = out.h.matrices[i];
    const Mat Xi = rep.to_matrix(xi.states[i]);
    out.y.states.push_back(g.to_m(rep.from_matrix(hi.partialPivLu().solve(Xi * hi))));
    lifted.matrices.push_back(curve.matrices[i] * hi);
  }
  if (lifted.times.size() >= 5) {
    const Trajectory v = trivialized_velocity(rep, lifted);
    for (const Vec& s : v.states) out.max_h_residual = std::max(out.max_h_residual, g.to_h(s).norm());
  }
  return out;
}

}  // namespace homspray
