#pragma once

// Spray vector field eta, connection operator N and the curvature formulas of
// a homogeneous spray on G/H, all evaluated on m = T_o(G/H).
//
//   N(y, w)  = 1/2 D eta(y, w) - 1/2 [y, w]_m
//   R_y(w)   = [y, [w, y]_h]_m + DN(eta(y), y, w) - N(y, N(y, w))
//              + N(y, [y, w]_m) - [y, N(y, w)]_m
//   S(o, y)  = tr(N(y, .) + ad_m(y))
//   L_y(w,w,w) = 3 C_y(w, w, [w, y]_m - N(y, w)) - C_y(w, w, w, eta(y))
//
// A Finsler source obtains eta from g_y(eta(y), u) = g_y(y, [u, y]_m), and can
// also assemble N directly from g_y and the Cartan tensor (see connection()).

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "homspray/errors.hpp"
#include "homspray/finite_difference.hpp"
#include "homspray/lie_algebra.hpp"
#include "homspray/minkowski.hpp"

namespace homspray {

enum class ConnectionMode {
  Auto,          ///< FinslerSolve for Finsler sources, Definition otherwise
  Definition,    ///< 1/2 D eta - 1/2 ad_m, with D eta by finite differences
  FinslerSolve,  ///< SPD solve against g_y and the Cartan tensor
};

/// Step multiplier for D eta and DN; base step is cbrt(eps) * (1 + |y|).
struct DiffStrategy {
  double step_scale = 1.0;
};

struct RiemannTerms {
  static constexpr std::array<const char*, 5> kNames = {"isotropy", "dN_eta", "minus_N_N", "N_ad", "minus_ad_N"};
  Mat total;
  std::array<Mat, 5> terms;  // column j of each term is its contribution to R_y(e_j)
};

struct EquivarianceReport {
  bool pass = true;
  double max_residual = 0.0;
  double tolerance = 1e-6;
};

struct HomogeneityResiduals {
  double eta = 0.0;         // max |eta(l y) - l^2 eta(y)| / (l^2 (1 + |eta(y)|))
  double connection = 0.0;  // max |N(l y, w) - l N(y, w)| / (l (1 + |N(y, w)|))
};

class SprayModel {
 public:
  using EtaFn = std::function<Vec(const Vec&)>;
  using DEtaFn = std::function<Vec(const Vec&, const Vec&)>;

  /// Geodesic spray of an Ad(H)-invariant Minkowski norm. Requires a reductive
  /// splitting; checks strong convexity and invariance on 64 sampled directions.
  static SprayModel finsler(LieAlgebra g, NormPtr norm, DiffStrategy diff = {}) {
    if (!norm) throw InputError("SprayModel::finsler: null norm");
    if (norm->dim() != g.dim_m())
      throw InputError("SprayModel::finsler: norm has dimension " + std::to_string(norm->dim()) +
                       " but dim m = " + std::to_string(g.dim_m()));
    if (!g.check_reductive().reductive)
      throw UnsupportedConfiguration("Finsler spray needs a reductive decomposition ([h, m] in m)");
    const auto convex = check_strong_convexity(*norm);
    if (!convex.ok)
      throw StrongConvexityError("norm fails strong convexity near y = " + detail::format_vec(convex.worst));
    const auto inv = check_ad_h_invariance(*norm, g);
    if (!inv.pass)
      throw UnsupportedConfiguration("norm is not Ad(H)-invariant: max |g_y(y, [z, y]_m)| = " +
                                     std::to_string(inv.max_violation));
    SprayModel s(std::move(g), diff);
    s.norm_ = std::move(norm);
    return s;
  }

  /// User-supplied positively 2-homogeneous eta; d_eta optional.
  static SprayModel direct(LieAlgebra g, EtaFn eta, DEtaFn d_eta = {}, DiffStrategy diff = {}) {
    if (!eta) throw InputError("SprayModel::direct: empty eta");
    SprayModel s(std::move(g), diff);
    s.eta_fn_ = std::move(eta);
    s.d_eta_fn_ = std::move(d_eta);
    return s;
  }

  /// eta = 0: the spray of the canonical (Nomizu) connection.
  static SprayModel canonical(LieAlgebra g) {
    const int n = g.dim_m();
    return direct(
        std::move(g), [n](const Vec&) { return Vec::Zero(n).eval(); },
        [n](const Vec&, const Vec&) { return Vec::Zero(n).eval(); });
  }

  const LieAlgebra& algebra() const { return g_; }
  int dim() const { return g_.dim_m(); }
  bool is_finsler() const { return static_cast<bool>(norm_); }
  const MinkowskiNorm& norm() const {
    if (!norm_) throw UnsupportedConfiguration("direct spray has no Minkowski norm");
    return *norm_;
  }
  NormPtr norm_ptr() const { return norm_; }
  const DiffStrategy& diff() const { return diff_; }

  Vec eta(const Vec& y) const {
    check_y(y, "eta");
    if (!norm_) {
      Vec out = eta_fn_(y);
      if (out.size() != dim()) throw InputError("eta callback returned wrong length");
      return out;
    }
    const Mat G = norm_->fundamental_tensor(y);
    const Vec Gy = G * y;
    Vec b(dim());
    for (int i = 0; i < dim(); ++i) b[i] = Gy.dot(g_.bracket_m(Vec::Unit(dim(), i), y));
    return solve_spd(G, b, y);
  }

  Vec d_eta(const Vec& y, const Vec& u) const {
    check_y(y, "d_eta");
    check_len(u, "d_eta");
    if (d_eta_fn_) return d_eta_fn_(y, u);
    return directional(y, u, [this](const Vec& p) { return eta(p); });
  }

  Vec connection(const Vec& y, const Vec& w, ConnectionMode mode = ConnectionMode::Auto) const {
    check_y(y, "connection_N");
    check_len(w, "connection_N");
    if (mode == ConnectionMode::Auto) mode = norm_ ? ConnectionMode::FinslerSolve : ConnectionMode::Definition;
    if (mode == ConnectionMode::Definition) return 0.5 * d_eta(y, w) - 0.5 * g_.bracket_m(y, w);
    if (!norm_) throw UnsupportedConfiguration("connection_N: Finsler solve needs a Finsler source");
    return connection_finsler(y, w, eta(y));
  }

  /// Columns N(y, e_j).
  Mat connection_matrix(const Vec& y, ConnectionMode mode = ConnectionMode::Auto) const {
    check_y(y, "connection_matrix");
    Mat out(dim(), dim());
    if (norm_ && mode != ConnectionMode::Definition) {
      const Vec e = eta(y);
      for (int j = 0; j < dim(); ++j) out.col(j) = connection_finsler(y, Vec::Unit(dim(), j), e);
    } else {
      for (int j = 0; j < dim(); ++j) out.col(j) = connection(y, Vec::Unit(dim(), j), ConnectionMode::Definition);
    }
    return out;
  }

  /// d/ds N(y + s direction, w) at s = 0.
  Vec dN_along(const Vec& y, const Vec& direction, const Vec& w, ConnectionMode mode = ConnectionMode::Auto) const {
    check_y(y, "dN_along");
    check_len(direction, "dN_along");
    check_len(w, "dN_along");
    return directional(y, direction, [&](const Vec& p) { return connection(p, w, mode); });
  }

  RiemannTerms riemann_terms(const Vec& y, ConnectionMode mode = ConnectionMode::Auto) const {
    check_y(y, "riemann_operator");
    const int n = dim();
    const Vec e = eta(y);
    const Mat N = connection_matrix(y, mode);
    Mat dN = Mat::Zero(n, n);
    const double en = e.norm();
    if (en > 0.0) {
      const Vec dir = e / en;
      dN = en * directional_matrix(y, dir, [&](const Vec& p) { return connection_matrix(p, mode); });
    }
    RiemannTerms r;
    for (auto& t : r.terms) t = Mat::Zero(n, n);
    const Vec yg = g_.embed_m(y);
    for (int j = 0; j < n; ++j) {
      const Vec w = Vec::Unit(n, j);
      const Vec wh = g_.bracket_h(w, y);
      r.terms[0].col(j) = g_.dim_h() ? g_.to_m(g_.bracket(yg, g_.embed_h(wh))) : Vec::Zero(n);
      r.terms[1].col(j) = dN.col(j);
      const Vec Nw = N.col(j);
      r.terms[2].col(j) = -N * Nw;
      r.terms[3].col(j) = N * g_.bracket_m(y, w);
      r.terms[4].col(j) = -g_.bracket_m(y, Nw);
    }
    r.total = r.terms[0] + r.terms[1] + r.terms[2] + r.terms[3] + r.terms[4];
    return r;
  }

  Mat riemann_operator(const Vec& y, ConnectionMode mode = ConnectionMode::Auto) const {
    return riemann_terms(y, mode).total;
  }

  /// tr(N(y, .) + ad_m(y)). Meaningful when is_unimodular() holds.
  double s_curvature(const Vec& y, ConnectionMode mode = ConnectionMode::Auto) const {
    check_y(y, "s_curvature");
    return (connection_matrix(y, mode) + g_.ad_m_matrix(y)).trace();
  }

  bool is_unimodular() const { return g_.is_unimodular(); }

  double landsberg(const Vec& y, const Vec& w) const {
    check_y(y, "landsberg");
    check_len(w, "landsberg");
    if (!norm_) throw UnsupportedConfiguration("landsberg: Cartan tensor is undefined for a direct spray");
    const Vec arg = g_.bracket_m(w, y) - connection(y, w);
    return 3.0 * norm_->cartan(y, w, w, arg) - norm_->cartan4(y, w, w, w, eta(y));
  }

  /// K(y, w) = g_y(R_y w, w) / (F(y)^2 g_y(w, w) - g_y(y, w)^2).
  double flag_curvature(const Vec& y, const Vec& w) const {
    check_y(y, "flag_curvature");
    check_len(w, "flag_curvature");
    if (!norm_) throw UnsupportedConfiguration("flag_curvature needs a Finsler source");
    const Mat G = norm_->fundamental_tensor(y);
    const double F = norm_->value(y);
    const double gyw = y.dot(G * w);
    const double den = F * F * w.dot(G * w) - gyw * gyw;
    if (den <= 1e-12) throw DegenerateFlagError("flag_curvature: y and w are (nearly) parallel");
    return (riemann_operator(y) * w).dot(G * w) / den;
  }

  /// D eta(y, [z, y]) = [z, eta(y)] for each h-basis z (reductive case).
  EquivarianceReport check_equivariance(int samples = 32, std::uint64_t seed = 42, double tol = 1e-6) const {
    if (!g_.check_reductive().reductive)
      throw UnsupportedConfiguration("check_equivariance: decomposition is not reductive");
    EquivarianceReport r;
    r.tolerance = tol;
    if (g_.dim_h() == 0) return r;
    for (const Vec& raw : sample_directions(dim(), samples, seed)) {
      const Vec y = raw / raw.norm();
      const Vec e = eta(y);
      for (int a = 0; a < g_.dim_h(); ++a) {
        const Vec z = g_.embed_h(Vec::Unit(g_.dim_h(), a));
        const Vec zy = g_.to_m(g_.bracket(z, g_.embed_m(y)));
        const Vec ze = g_.to_m(g_.bracket(z, g_.embed_m(e)));
        r.max_residual = std::max(r.max_residual, (d_eta(y, zy) - ze).norm());
      }
    }
    r.pass = r.max_residual <= tol;
    return r;
  }

  HomogeneityResiduals homogeneity(const Vec& y, const Vec& w,
                                   const std::vector<double>& lambdas = {0.5, 2.0, 3.7}) const {
    HomogeneityResiduals r;
    const Vec e = eta(y);
    const Vec N = connection(y, w);
    for (double l : lambdas) {
      r.eta = std::max(r.eta, (eta(l * y) - l * l * e).norm() / (l * l * (1.0 + e.norm())));
      r.connection = std::max(r.connection, (connection(l * y, w) - l * N).norm() / (l * (1.0 + N.norm())));
    }
    return r;
  }

 private:
  SprayModel(LieAlgebra g, DiffStrategy diff) : g_(std::move(g)), diff_(diff) {}

  void check_len(const Vec& v, const char* op) const {
    if (v.size() != dim())
      throw InputError(std::string(op) + ": expected m-vector of length " + std::to_string(dim()) + ", got " +
                       std::to_string(v.size()));
  }
  void check_y(const Vec& y, const char* op) const {
    check_len(y, op);
    detail::require_nonzero(y, op);
  }

  // 2 g_y(N(y, v), u) = g_y([u, v]_m, y) + g_y([u, y]_m, v) + g_y([v, y]_m, u) - 2 C_y(u, v, eta(y))
  Vec connection_finsler(const Vec& y, const Vec& v, const Vec& e) const {
    const Mat G = norm_->fundamental_tensor(y);
    const Vec Gy = G * y, Gv = G * v;
    const Vec Gvy = G * g_.bracket_m(v, y);
    Vec rhs(dim());
    for (int i = 0; i < dim(); ++i) {
      const Vec u = Vec::Unit(dim(), i);
      rhs[i] = Gy.dot(g_.bracket_m(u, v)) + Gv.dot(g_.bracket_m(u, y)) + Gvy[i] - 2.0 * norm_->cartan(y, u, v, e);
    }
    return solve_spd(2.0 * G, rhs, y);
  }

  static Vec solve_spd(const Mat& A, const Vec& b, const Vec& y) {
    Eigen::LLT<Mat> llt(A);
    if (llt.info() != Eigen::Success)
      throw StrongConvexityError("fundamental tensor is not positive definite at y = " + detail::format_vec(y));
    return llt.solve(b);
  }

  double base_step(const Vec& y) const {
    double h = fd::step(1, 1.0 + y.norm()) * diff_.step_scale;
    while (h > 0.25 * y.norm()) {
      h *= 0.5;
      if (h < std::numeric_limits<double>::min())
        throw NumericalError("finite difference: no valid step away from the cone tip");
    }
    return h;
  }

  template <class Fn>
  Vec directional(const Vec& y, const Vec& u, Fn&& f) const {
    const double s = u.norm();
    if (s == 0.0) return Vec::Zero(dim());
    const Vec d = u / s;
    return s * fd::derivative([&](double t) { return f((y + t * d).eval()); }, base_step(y));
  }

  template <class Fn>
  Mat directional_matrix(const Vec& y, const Vec& d, Fn&& f) const {
    return fd::derivative([&](double t) { return f((y + t * d).eval()); }, base_step(y));
  }

  LieAlgebra g_;
  DiffStrategy diff_;
  NormPtr norm_;
  EtaFn eta_fn_;
  DEtaFn d_eta_fn_;
};

/// Quadratic direct spray eta_k(y) = sum_ij q[i][j][k] y_i y_j, with exact D eta.
inline SprayModel quadratic_spray(LieAlgebra g, std::vector<double> q) {
  const int n = g.dim_m();
  if (q.size() != static_cast<std::size_t>(n) * n * n) throw InputError("quadratic_spray: q must have n^3 entries");
  auto coeffs = std::make_shared<const std::vector<double>>(std::move(q));
  auto bilinear = [n, coeffs](const Vec& a, const Vec& b) {
    Vec out = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) out[k] += (*coeffs)[(static_cast<std::size_t>(i) * n + j) * n + k] * a[i] * b[j];
    return out;
  };
  return SprayModel::direct(
      std::move(g), [bilinear](const Vec& y) { return bilinear(y, y); },
      [bilinear](const Vec& y, const Vec& u) { return (bilinear(y, u) + bilinear(u, y)).eval(); });
}

struct SprayPreset {
  std::string name;
  AlgebraPreset algebra;
  SprayModel spray;
};

/// Named spray configurations:
///   flat                abelian R^3, Euclidean a = I
///   sphere              su2_u1, a = I (round S^2, K = 1)
///   su2_biinvariant     su2, H = {e}, a = I
///   euler_top           su2, H = {e}, a = diag(1, 2, 3)
///   randers_heisenberg  heisenberg3, a = I, b = (0, 0, 0.4)
///   randers_se2         se2, a = diag(1, 2, 1.5), b = (0.2, -0.1, 0.3)
///   sl2_left_invariant  sl2_r, a = diag(1, 2, 0.5)
///   canonical_heisenberg heisenberg3 with eta = 0 (direct)
inline SprayPreset spray_preset(const std::string& name) {
  auto diag = [](std::initializer_list<double> d) {
    Vec v(static_cast<Eigen::Index>(d.size()));
    Eigen::Index i = 0;
    for (double x : d) v[i++] = x;
    return Mat(v.asDiagonal());
  };
  auto make = [&](const std::string& alg, NormPtr F) {
    AlgebraPreset a = preset(alg);
    SprayModel s = SprayModel::finsler(a.algebra, std::move(F));
    return SprayPreset{name, std::move(a), std::move(s)};
  };
  if (name == "flat") return make("abelian", std::make_shared<EuclideanNorm>(Mat::Identity(3, 3)));
  if (name == "sphere") return make("su2_u1", std::make_shared<EuclideanNorm>(Mat::Identity(2, 2)));
  if (name == "su2_biinvariant") return make("su2", std::make_shared<EuclideanNorm>(Mat::Identity(3, 3)));
  if (name == "euler_top") return make("su2", std::make_shared<EuclideanNorm>(diag({1.0, 2.0, 3.0})));
  if (name == "randers_heisenberg") {
    Vec b(3);
    b << 0.0, 0.0, 0.4;
    return make("heisenberg3", std::make_shared<RandersNorm>(Mat::Identity(3, 3), b));
  }
  if (name == "randers_se2") {
    Vec b(3);
    b << 0.2, -0.1, 0.3;
    return make("se2", std::make_shared<RandersNorm>(diag({1.0, 2.0, 1.5}), b));
  }
  if (name == "sl2_left_invariant") return make("sl2_r", std::make_shared<EuclideanNorm>(diag({1.0, 2.0, 0.5})));
  if (name == "canonical_heisenberg") {
    AlgebraPreset a = preset("heisenberg3");
    SprayModel s = SprayModel::canonical(a.algebra);
    return {name, std::move(a), std::move(s)};
  }
  throw InputError("unknown spray preset '" + name + "'");
}

inline const std::vector<std::string>& spray_preset_names() {
  static const std::vector<std::string> names = {"flat",         "sphere",           "su2_biinvariant",
                                                 "euler_top",    "randers_heisenberg", "randers_se2",
                                                 "sl2_left_invariant", "canonical_heisenberg"};
  return names;
}

}  // namespace homspray
