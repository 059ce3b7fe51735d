#pragma once

// Minkowski norms on m and their y-derivative tensors:
//   g_y(u, v)          = 1/2 d^2/ds dt F^2(y + s u + t v)
//   C_y(u, v, w)       = 1/4 d^3 F^2 (y)[u, v, w]
//   C_y(u, v, w, z)    = d/dt C_{y + t z}(u, v, w)
// Euclidean and Randers norms use closed forms; CallbackNorm differentiates a
// user-supplied F by finite differences.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "homspray/errors.hpp"
#include "homspray/finite_difference.hpp"
#include "homspray/lie_algebra.hpp"

namespace homspray {

namespace detail {

inline std::string format_vec(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")";
  return os.str();
}

inline void require_nonzero(const Vec& y, const char* op) {
  if (y.size() == 0 || y.norm() == 0.0) throw InputError(std::string(op) + ": y must be nonzero");
}

}  // namespace detail

class MinkowskiNorm {
 public:
  virtual ~MinkowskiNorm() = default;

  virtual int dim() const = 0;
  virtual std::string kind() const = 0;
  /// True when F^2 is a quadratic form (Cartan tensor identically zero).
  virtual bool is_euclidean() const { return false; }

  virtual double value(const Vec& y) const = 0;

  /// Symmetric positive definite Hessian of F^2 / 2 at y != 0.
  Mat fundamental_tensor(const Vec& y) const {
    check_dim(y, "fundamental_tensor");
    detail::require_nonzero(y, "fundamental_tensor");
    Mat g = raw_tensor(y);
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::LLT<Mat> llt(g);
    if (llt.info() != Eigen::Success || !g.allFinite())
      throw StrongConvexityError("fundamental tensor is not positive definite at y = " + detail::format_vec(y));
    return g;
  }

  double inner(const Vec& y, const Vec& u, const Vec& v) const { return u.dot(fundamental_tensor(y) * v); }

  virtual double cartan(const Vec& y, const Vec& u, const Vec& v, const Vec& w) const = 0;
  virtual double cartan4(const Vec& y, const Vec& u, const Vec& v, const Vec& w, const Vec& z) const = 0;

  /// k-th component is C_y(u, v, e_k).
  Vec cartan_covector(const Vec& y, const Vec& u, const Vec& v) const {
    Vec out(dim());
    for (int k = 0; k < dim(); ++k) out[k] = cartan(y, u, v, Vec::Unit(dim(), k));
    return out;
  }

 protected:
  virtual Mat raw_tensor(const Vec& y) const = 0;

  void check_dim(const Vec& y, const char* op) const {
    if (y.size() != dim())
      throw InputError(std::string(op) + ": expected vector of length " + std::to_string(dim()) + ", got " +
                       std::to_string(y.size()));
  }
};

using NormPtr = std::shared_ptr<const MinkowskiNorm>;

namespace detail {

inline void require_spd(const Mat& a, const char* who) {
  if (a.rows() != a.cols() || a.rows() == 0) throw InputError(std::string(who) + ": matrix must be square");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + a.cwiseAbs().maxCoeff()))
    throw InputError(std::string(who) + ": matrix must be symmetric");
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) throw InputError(std::string(who) + ": matrix must be positive definite");
}

}  // namespace detail

/// F(y) = sqrt(y^T a y).
class EuclideanNorm final : public MinkowskiNorm {
 public:
  explicit EuclideanNorm(Mat a) : a_(std::move(a)) { detail::require_spd(a_, "EuclideanNorm"); }

  int dim() const override { return static_cast<int>(a_.rows()); }
  std::string kind() const override { return "euclidean"; }
  bool is_euclidean() const override { return true; }
  const Mat& matrix() const { return a_; }

  double value(const Vec& y) const override {
    check_dim(y, "value");
    return std::sqrt(std::max(0.0, y.dot(a_ * y)));
  }
  double cartan(const Vec&, const Vec&, const Vec&, const Vec&) const override { return 0.0; }
  double cartan4(const Vec&, const Vec&, const Vec&, const Vec&, const Vec&) const override { return 0.0; }

 protected:
  Mat raw_tensor(const Vec&) const override { return a_; }

 private:
  Mat a_;
};

/// F(y) = sqrt(y^T a y) + b.y with |b|_a < 1.
///
/// Closed forms come from writing F = alpha + beta and differentiating alpha:
/// with alpha_1(u) = (y^T a u)/alpha and A(u,v) = (u^T a v - alpha_1(u) alpha_1(v))/alpha,
/// the third and fourth derivatives of alpha follow by the product rule.
class RandersNorm final : public MinkowskiNorm {
 public:
  RandersNorm(Mat a, Vec b) : a_(std::move(a)), b_(std::move(b)) {
    detail::require_spd(a_, "RandersNorm");
    if (b_.size() != a_.rows()) throw InputError("RandersNorm: b has wrong length");
    const double bnorm = std::sqrt(b_.dot(a_.llt().solve(b_)));
    if (!(bnorm < 1.0))
      throw InputError("RandersNorm: a-norm of b must be < 1, got " + std::to_string(bnorm));
  }

  int dim() const override { return static_cast<int>(a_.rows()); }
  std::string kind() const override { return "randers"; }
  bool is_euclidean() const override { return b_.isZero(0.0); }
  const Mat& matrix() const { return a_; }
  const Vec& drift() const { return b_; }

  double value(const Vec& y) const override {
    check_dim(y, "value");
    return std::sqrt(std::max(0.0, y.dot(a_ * y))) + b_.dot(y);
  }

  double cartan(const Vec& y, const Vec& u, const Vec& v, const Vec& w) const override {
    check_dim(y, "cartan");
    detail::require_nonzero(y, "cartan");
    const Jet j(*this, y);
    return 0.5 * (j.F1(w) * j.F2(u, v) + j.F1(u) * j.F2(v, w) + j.F1(v) * j.F2(u, w) + j.F * j.A3(u, v, w));
  }

  double cartan4(const Vec& y, const Vec& u, const Vec& v, const Vec& w, const Vec& z) const override {
    check_dim(y, "cartan4");
    detail::require_nonzero(y, "cartan4");
    const Jet j(*this, y);
    return 0.5 * (j.F2(w, z) * j.F2(u, v) + j.F1(w) * j.A3(u, v, z) + j.F2(u, z) * j.F2(v, w) +
                  j.F1(u) * j.A3(v, w, z) + j.F2(v, z) * j.F2(u, w) + j.F1(v) * j.A3(u, w, z) +
                  j.F1(z) * j.A3(u, v, w) + j.F * j.A4(u, v, w, z));
  }

 protected:
  Mat raw_tensor(const Vec& y) const override {
    const double alpha = std::sqrt(y.dot(a_ * y));
    const double F = alpha + b_.dot(y);
    const Vec ay = a_ * y / alpha;
    const Vec l = ay + b_;
    return (F / alpha) * (a_ - ay * ay.transpose()) + l * l.transpose();
  }

 private:
  // Directional derivatives of alpha and F at a fixed y.
  struct Jet {
    Jet(const RandersNorm& n, const Vec& y) : a(n.a_), b(n.b_) {
      alpha = std::sqrt(y.dot(a * y));
      ay = a * y / alpha;
      F = alpha + b.dot(y);
    }
    double a1(const Vec& u) const { return ay.dot(u); }
    double A(const Vec& u, const Vec& v) const { return (u.dot(a * v) - a1(u) * a1(v)) / alpha; }
    double A3(const Vec& u, const Vec& v, const Vec& w) const {
      return -(A(u, v) * a1(w) + A(v, w) * a1(u) + A(w, u) * a1(v)) / alpha;
    }
    double A4(const Vec& u, const Vec& v, const Vec& w, const Vec& z) const {
      const double d = A3(u, v, z) * a1(w) + A(u, v) * A(w, z) + A3(v, w, z) * a1(u) + A(v, w) * A(u, z) +
                       A3(w, u, z) * a1(v) + A(w, u) * A(v, z);
      return -d / alpha - A3(u, v, w) * a1(z) / alpha;
    }
    double F1(const Vec& u) const { return a1(u) + b.dot(u); }
    double F2(const Vec& u, const Vec& v) const { return A(u, v); }

    const Mat& a;
    const Vec& b;
    double alpha = 0.0;
    double F = 0.0;
    Vec ay;
  };

  Mat a_;
  Vec b_;
};

/// Norm given by an arbitrary callable; tensors by central differences of F^2
/// with the shared step rule (order-k step, scaled by max(1, |y|)).
class CallbackNorm final : public MinkowskiNorm {
 public:
  using Fn = std::function<double(const Vec&)>;

  CallbackNorm(int dim, Fn f) : dim_(dim), f_(std::move(f)) {
    if (dim <= 0) throw InputError("CallbackNorm: dim must be positive");
    if (!f_) throw InputError("CallbackNorm: empty callable");
  }

  int dim() const override { return dim_; }
  std::string kind() const override { return "callback"; }

  double value(const Vec& y) const override {
    check_dim(y, "value");
    return f_(y);
  }

  double cartan(const Vec& y, const Vec& u, const Vec& v, const Vec& w) const override {
    check_dim(y, "cartan");
    detail::require_nonzero(y, "cartan");
    const std::array<const Vec*, 3> d{&u, &v, &w};
    return 0.25 * fd::mixed_partial<3>([&](const std::array<double, 3>& s) { return sq(y, d, s); },
                                       step_for(3, y));
  }

  double cartan4(const Vec& y, const Vec& u, const Vec& v, const Vec& w, const Vec& z) const override {
    check_dim(y, "cartan4");
    detail::require_nonzero(y, "cartan4");
    const std::array<const Vec*, 4> d{&u, &v, &w, &z};
    return 0.25 * fd::mixed_partial<4>([&](const std::array<double, 4>& s) { return sq(y, d, s); },
                                       step_for(4, y));
  }

 protected:
  Mat raw_tensor(const Vec& y) const override {
    Mat g(dim_, dim_);
    const double h = step_for(2, y);
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j) {
        const Vec ei = Vec::Unit(dim_, i), ej = Vec::Unit(dim_, j);
        const std::array<const Vec*, 2> d{&ei, &ej};
        g(i, j) = g(j, i) =
            0.5 * fd::mixed_partial<2>([&](const std::array<double, 2>& s) { return sq(y, d, s); }, h);
      }
    return g;
  }

 private:
  template <std::size_t K>
  double sq(const Vec& y, const std::array<const Vec*, K>& dirs, const std::array<double, K>& s) const {
    Vec p = y;
    for (std::size_t i = 0; i < K; ++i) p += s[i] * (*dirs[i]);
    const double f = f_(p);
    return f * f;
  }

  // Steps never reach the cone tip: shrink until the stencil stays in the
  // half-ball around y.
  static double step_for(int order, const Vec& y) {
    double h = fd::step(order, std::max(1.0, y.norm()));
    while (2.0 * order * h > 0.5 * y.norm()) h *= 0.5;
    return h;
  }

  int dim_;
  Fn f_;
};

inline std::vector<Vec> sample_directions(int n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Vec> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = nd(rng);
    if (v.norm() > 1e-3) out.push_back(v);
  }
  return out;
}

struct ConvexityReport {
  bool ok = true;
  double min_eigenvalue = 0.0;  // smallest eigenvalue of g_y over samples with F(y) = 1
  Vec worst;
};

/// Samples unit directions and checks g_y is SPD; default 64 directions.
inline ConvexityReport check_strong_convexity(const MinkowskiNorm& F, int samples = 64, std::uint64_t seed = 42) {
  ConvexityReport r;
  r.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const Vec& raw : sample_directions(F.dim(), samples, seed)) {
    const double f = F.value(raw);
    if (!(f > 0.0)) {
      r.ok = false;
      r.worst = raw;
      r.min_eigenvalue = 0.0;
      continue;
    }
    const Vec y = raw / f;
    try {
      const Mat g = F.fundamental_tensor(y);
      const double lo = Eigen::SelfAdjointEigenSolver<Mat>(g, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
      if (lo < r.min_eigenvalue) {
        r.min_eigenvalue = lo;
        r.worst = y;
      }
    } catch (const StrongConvexityError&) {
      r.ok = false;
      r.min_eigenvalue = std::min(r.min_eigenvalue, 0.0);
      r.worst = y;
    }
  }
  r.ok = r.ok && r.min_eigenvalue > 0.0;
  return r;
}

struct InvarianceReport {
  bool pass = true;
  double max_violation = 0.0;
  double tolerance = 1e-8;
};

/// Infinitesimal Ad(H)-invariance: g_y(y, [z, y]_m) = 0 for h-basis z and
/// sampled y (normalized to F(y) = 1). Refuses non-reductive splittings.
inline InvarianceReport check_ad_h_invariance(const MinkowskiNorm& F, const LieAlgebra& g, int samples = 64,
                                              std::uint64_t seed = 42, double tol = 1e-8) {
  if (F.dim() != g.dim_m()) throw InputError("check_ad_h_invariance: norm dimension differs from dim m");
  if (!g.check_reductive().reductive)
    throw UnsupportedConfiguration("check_ad_h_invariance: decomposition is not reductive");
  InvarianceReport r;
  r.tolerance = tol;
  if (g.dim_h() == 0) return r;
  for (const Vec& raw : sample_directions(g.dim_m(), samples, seed)) {
    const Vec y = raw / F.value(raw);
    const Mat G = F.fundamental_tensor(y);
    for (int a = 0; a < g.dim_h(); ++a) {
      const Vec zy = g.to_m(g.bracket(g.embed_h(Vec::Unit(g.dim_h(), a)), g.embed_m(y)));
      r.max_violation = std::max(r.max_violation, std::abs(y.dot(G * zy)));
    }
  }
  r.pass = r.max_violation <= tol;
  return r;
}

}  // namespace homspray
