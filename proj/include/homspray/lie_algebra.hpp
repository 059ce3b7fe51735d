#pragma once

// Finite-dimensional real Lie algebras given by structure constants, with a
// coordinate splitting g = m + h. Basis indices 0..n-1 span m and n..dim-1
// span h; any other splitting is reached through change_basis().

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include "homspray/errors.hpp"

namespace homspray {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct StructureReport {
  double antisymmetry = 0.0;  ///< max |c[i][j][k] + c[j][i][k]|
  double jacobi = 0.0;        ///< max component of the cyclic Jacobi sum
  double subalgebra = 0.0;    ///< max |m-component of [h, h]|
  bool ok(double tol = 1e-12) const {
    return antisymmetry == 0.0 && jacobi <= tol && subalgebra <= tol;
  }
};

struct ReductivityViolation {
  int h_index;  // alpha
  int m_index;  // i
  int h_out;    // beta
  double value; // c[alpha][i][beta]
};

struct ReductivityReport {
  bool reductive = true;
  double max_violation = 0.0;
  std::vector<ReductivityViolation> violations;
};

class LieAlgebra {
 public:
  /// `constants` is dense row-major c[i][j][k], size dim^3.
  LieAlgebra(int dim, int dim_m, std::vector<double> constants)
      : dim_(dim), dim_m_(dim_m), c_(std::move(constants)) {
    if (dim <= 0 || dim_m <= 0 || dim_m > dim)
      throw InputError("LieAlgebra: need 0 < dim_m <= dim_g, got dim_g=" + std::to_string(dim) +
                       " dim_m=" + std::to_string(dim_m));
    if (c_.size() != static_cast<std::size_t>(dim) * dim * dim)
      throw InputError("LieAlgebra: structure constant array has wrong size");
  }

  int dim() const { return dim_; }
  int dim_m() const { return dim_m_; }
  int dim_h() const { return dim_ - dim_m_; }

  double c(int i, int j, int k) const { return c_[(static_cast<std::size_t>(i) * dim_ + j) * dim_ + k]; }
  const std::vector<double>& constants() const { return c_; }

  /// Same constants, different split point.
  LieAlgebra with_dim_m(int n) const { return LieAlgebra(dim_, n, c_); }

  Vec bracket(const Vec& x, const Vec& y) const {
    require_len(x, dim_, "bracket");
    require_len(y, dim_, "bracket");
    Vec out = Vec::Zero(dim_);
    for (int i = 0; i < dim_; ++i) {
      if (x[i] == 0.0) continue;
      for (int j = 0; j < dim_; ++j) {
        const double xy = x[i] * y[j];
        if (xy == 0.0) continue;
        const double* row = &c_[(static_cast<std::size_t>(i) * dim_ + j) * dim_];
        for (int k = 0; k < dim_; ++k) out[k] += xy * row[k];
      }
    }
    return out;
  }

  /// Full-length projections; project_m(x) + project_h(x) == x.
  Vec project_m(const Vec& x) const {
    require_len(x, dim_, "project_m");
    Vec out = x;
    out.tail(dim_h()).setZero();
    return out;
  }
  Vec project_h(const Vec& x) const {
    require_len(x, dim_, "project_h");
    Vec out = x;
    out.head(dim_m_).setZero();
    return out;
  }

  // Coordinate maps between g and the m / h blocks.
  Vec to_m(const Vec& x) const { return x.head(dim_m_); }
  Vec to_h(const Vec& x) const { return x.tail(dim_h()); }
  Vec embed_m(const Vec& y) const {
    require_len(y, dim_m_, "embed_m");
    Vec out = Vec::Zero(dim_);
    out.head(dim_m_) = y;
    return out;
  }
  Vec embed_h(const Vec& z) const {
    require_len(z, dim_h(), "embed_h");
    Vec out = Vec::Zero(dim_);
    out.tail(dim_h()) = z;
    return out;
  }

  /// [x, y]_m for x, y in m (length n in, length n out).
  Vec bracket_m(const Vec& x, const Vec& y) const { return to_m(bracket(embed_m(x), embed_m(y))); }
  /// [x, y]_h for x, y in m (length dim_h out).
  Vec bracket_h(const Vec& x, const Vec& y) const { return to_h(bracket(embed_m(x), embed_m(y))); }

  /// Matrix of w -> [y, w]_m on m.
  Mat ad_m_matrix(const Vec& y) const {
    require_len(y, dim_m_, "ad_m_matrix");
    Mat out(dim_m_, dim_m_);
    for (int j = 0; j < dim_m_; ++j) out.col(j) = bracket_m(y, Vec::Unit(dim_m_, j));
    return out;
  }

  /// Matrix of w -> [x, w] on g.
  Mat ad_matrix(const Vec& x) const {
    require_len(x, dim_, "ad_matrix");
    Mat out(dim_, dim_);
    for (int j = 0; j < dim_; ++j) out.col(j) = bracket(x, Vec::Unit(dim_, j));
    return out;
  }

  /// Left-trivialized differential of exp:
  /// exp(-x) d/dt exp(x + t v)|_0 = sum_k (-ad_x)^k v / (k+1)!.
  Vec dexp_trivialized(const Vec& x, const Vec& v, double tol = 1e-16) const {
    require_len(x, dim_, "dexp_trivialized");
    require_len(v, dim_, "dexp_trivialized");
    if (!(tol > 0.0)) throw InputError("dexp_trivialized: tol must be positive");
    const double vnorm = v.norm();
    Vec sum = v;
    if (vnorm == 0.0) return sum;
    Vec term = v;
    for (int k = 1; k <= kDexpTermCap; ++k) {
      term = -bracket(x, term) / static_cast<double>(k + 1);
      sum += term;
      if (term.norm() <= tol * vnorm) return sum;
    }
    throw NumericalError("dexp_trivialized: series did not converge in " +
                         std::to_string(kDexpTermCap) + " terms; rescale x");
  }

  StructureReport check_structure() const {
    StructureReport r;
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k)
          r.antisymmetry = std::max(r.antisymmetry, std::abs(c(i, j, k) + c(j, i, k)));
    for (int i = 0; i < dim_; ++i) {
      const Vec ei = Vec::Unit(dim_, i);
      for (int j = 0; j < dim_; ++j) {
        const Vec ej = Vec::Unit(dim_, j);
        for (int k = 0; k < dim_; ++k) {
          const Vec ek = Vec::Unit(dim_, k);
          const Vec cyc = bracket(bracket(ei, ej), ek) + bracket(bracket(ej, ek), ei) +
                          bracket(bracket(ek, ei), ej);
          r.jacobi = std::max(r.jacobi, cyc.cwiseAbs().maxCoeff());
        }
      }
    }
    for (int a = dim_m_; a < dim_; ++a)
      for (int b = dim_m_; b < dim_; ++b)
        for (int k = 0; k < dim_m_; ++k) r.subalgebra = std::max(r.subalgebra, std::abs(c(a, b, k)));
    return r;
  }

  /// Infinitesimal reductivity: [h, m] subset of m, i.e. c[alpha][i][beta] == 0.
  ReductivityReport check_reductive(double tol = 1e-12) const {
    ReductivityReport r;
    for (int a = dim_m_; a < dim_; ++a)
      for (int i = 0; i < dim_m_; ++i)
        for (int b = dim_m_; b < dim_; ++b) {
          const double v = c(a, i, b);
          r.max_violation = std::max(r.max_violation, std::abs(v));
          if (std::abs(v) > tol) r.violations.push_back({a, i, b, v});
        }
    r.reductive = r.violations.empty();
    return r;
  }

  /// Traces of w -> [z, w]_m for each h-basis z; all zero iff the isotropy
  /// action on g/h is unimodular.
  std::vector<double> isotropy_traces() const {
    std::vector<double> out;
    for (int a = dim_m_; a < dim_; ++a) {
      double tr = 0.0;
      for (int i = 0; i < dim_m_; ++i) tr += c(a, i, i);
      out.push_back(tr);
    }
    return out;
  }

  bool is_unimodular(double tol = 1e-12) const {
    const auto tr = isotropy_traces();
    return std::all_of(tr.begin(), tr.end(), [&](double t) { return std::abs(t) <= tol; });
  }

  /// New basis f_i = sum_k P(k, i) e_k. P must be invertible.
  LieAlgebra change_basis(const Mat& P) const {
    if (P.rows() != dim_ || P.cols() != dim_) throw InputError("change_basis: P must be dim_g x dim_g");
    Eigen::FullPivLU<Mat> lu(P);
    if (!lu.isInvertible()) throw InputError("change_basis: P is singular");
    const Mat Pinv = lu.inverse();
    std::vector<double> out(c_.size(), 0.0);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) {
        const Vec b = bracket(P.col(i), P.col(j));
        const Vec coords = Pinv * b;
        for (int k = 0; k < dim_; ++k) out[(static_cast<std::size_t>(i) * dim_ + j) * dim_ + k] = coords[k];
      }
    // Exact antisymmetry survives only up to rounding; restore it.
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k) {
          auto& a = out[(static_cast<std::size_t>(i) * dim_ + j) * dim_ + k];
          auto& b = out[(static_cast<std::size_t>(j) * dim_ + i) * dim_ + k];
          const double v = 0.5 * (a - b);
          a = (i == j) ? 0.0 : v;
          b = (i == j) ? 0.0 : -v;
        }
    return LieAlgebra(dim_, dim_m_, std::move(out));
  }

  static constexpr int kDexpTermCap = 200;

 private:
  static void require_len(const Vec& v, int n, const char* op) {
    if (v.size() != n) {
      std::ostringstream os;
      os << op << ": expected vector of length " << n << ", got " << v.size();
      throw InputError(os.str());
    }
  }

  int dim_;
  int dim_m_;
  std::vector<double> c_;
};

/// Builds a dense constant array from [e_i, e_j] = v e_k triplets, filling in
/// the antisymmetric partner. Conflicting duplicates throw.
inline std::vector<double> constants_from_triplets(int dim, const std::vector<std::tuple<int, int, int, double>>& t) {
  std::vector<double> c(static_cast<std::size_t>(dim) * dim * dim, 0.0);
  std::vector<char> set(c.size(), 0);
  auto idx = [dim](int i, int j, int k) { return (static_cast<std::size_t>(i) * dim + j) * dim + k; };
  auto put = [&](int i, int j, int k, double v) {
    auto p = idx(i, j, k);
    if (set[p] && c[p] != v)
      throw InputError("structure constants: conflicting entries for [" + std::to_string(i) + "," +
                       std::to_string(j) + "," + std::to_string(k) + "]");
    c[p] = v;
    set[p] = 1;
  };
  for (const auto& [i, j, k, v] : t) {
    if (i < 0 || j < 0 || k < 0 || i >= dim || j >= dim || k >= dim)
      throw InputError("structure constants: index out of range");
    if (i == j) {
      if (v != 0.0) throw InputError("structure constants: [e_i, e_i] must vanish");
      continue;
    }
    put(i, j, k, v);
    put(j, i, k, -v);
  }
  return c;
}

/// Faithful (or at least commutator-consistent) matrix representation.
class MatrixRepresentation {
 public:
  explicit MatrixRepresentation(std::vector<Mat> basis) : basis_(std::move(basis)) {
    if (basis_.empty()) throw InputError("MatrixRepresentation: empty basis");
    d_ = static_cast<int>(basis_.front().rows());
    for (const auto& E : basis_)
      if (E.rows() != d_ || E.cols() != d_) throw InputError("MatrixRepresentation: matrices must be d x d");
    Mat stacked(d_ * d_, basis_.size());
    for (std::size_t i = 0; i < basis_.size(); ++i) stacked.col(i) = basis_[i].reshaped();
    qr_ = stacked.colPivHouseholderQr();
  }

  int size() const { return d_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  const std::vector<Mat>& basis() const { return basis_; }

  Mat to_matrix(const Vec& x) const {
    if (x.size() != dim()) throw InputError("MatrixRepresentation::to_matrix: length mismatch");
    Mat out = Mat::Zero(d_, d_);
    for (int i = 0; i < dim(); ++i) out += x[i] * basis_[i];
    return out;
  }

  /// Least-squares coordinates of a matrix in the span of the basis.
  Vec from_matrix(const Mat& X) const {
    const Vec flat = X.reshaped();
    return qr_.solve(flat);
  }

  /// max entry of E_i E_j - E_j E_i - sum_k c[i][j][k] E_k.
  double commutator_residual(const LieAlgebra& g) const {
    if (g.dim() != dim()) throw InputError("MatrixRepresentation: dimension differs from algebra");
    double worst = 0.0;
    for (int i = 0; i < dim(); ++i)
      for (int j = 0; j < dim(); ++j) {
        Mat r = basis_[i] * basis_[j] - basis_[j] * basis_[i];
        for (int k = 0; k < dim(); ++k) r -= g.c(i, j, k) * basis_[k];
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
      }
    return worst;
  }

  MatrixRepresentation change_basis(const Mat& P) const {
    std::vector<Mat> out;
    for (int i = 0; i < dim(); ++i) out.push_back(to_matrix(P.col(i)));
    return MatrixRepresentation(std::move(out));
  }

 private:
  std::vector<Mat> basis_;
  int d_ = 0;
  Eigen::ColPivHouseholderQR<Mat> qr_;
};

struct AlgebraPreset {
  LieAlgebra algebra;
  std::optional<MatrixRepresentation> rep;
};

namespace detail {

inline Mat unit_matrix(int d, int r, int c) {
  Mat m = Mat::Zero(d, d);
  m(r, c) = 1.0;
  return m;
}

inline std::vector<Mat> adjoint_matrices(const LieAlgebra& g) {
  std::vector<Mat> out;
  for (int i = 0; i < g.dim(); ++i) out.push_back(g.ad_matrix(Vec::Unit(g.dim(), i)));
  return out;
}

}  // namespace detail

/// Preset catalog:
///   abelian      R^n, H = {e}; nilpotent (n+1)x(n+1) representation
///   su2          [e1,e2]=e3 cyclic, H = {e}; 3x3 adjoint (rotation) representation
///   su2_u1       su2 with m = span{e1,e2}, h = span{e3} (round S^2)
///   sl2_r        [H,E]=2E, [H,F]=-2F, [E,F]=H, H = {e}; 2x2 representation
///   heisenberg3  [e1,e2]=e3, H = {e}; 3x3 upper-triangular representation
///   se2          [e3,e1]=e2, [e3,e2]=-e1, H = {e}; 3x3 homogeneous representation
inline AlgebraPreset preset(const std::string& name, int n = 3) {
  using T = std::tuple<int, int, int, double>;
  using detail::unit_matrix;
  if (name == "abelian") {
    if (n <= 0) throw InputError("preset abelian: n must be positive");
    LieAlgebra g(n, n, std::vector<double>(static_cast<std::size_t>(n) * n * n, 0.0));
    std::vector<Mat> rep;
    for (int i = 0; i < n; ++i) rep.push_back(unit_matrix(n + 1, 0, i + 1));
    return {g, MatrixRepresentation(rep)};
  }
  if (name == "su2" || name == "su2_u1") {
    const auto c = constants_from_triplets(3, {T{0, 1, 2, 1.0}, T{1, 2, 0, 1.0}, T{2, 0, 1, 1.0}});
    LieAlgebra g(3, name == "su2" ? 3 : 2, c);
    return {g, MatrixRepresentation(detail::adjoint_matrices(g))};
  }
  if (name == "sl2_r") {
    const auto c = constants_from_triplets(3, {T{0, 1, 1, 2.0}, T{0, 2, 2, -2.0}, T{1, 2, 0, 1.0}});
    Mat H(2, 2), E(2, 2), F(2, 2);
    H << 1, 0, 0, -1;
    E << 0, 1, 0, 0;
    F << 0, 0, 1, 0;
    return {LieAlgebra(3, 3, c), MatrixRepresentation({H, E, F})};
  }
  if (name == "heisenberg3") {
    const auto c = constants_from_triplets(3, {T{0, 1, 2, 1.0}});
    return {LieAlgebra(3, 3, c),
            MatrixRepresentation({unit_matrix(3, 0, 1), unit_matrix(3, 1, 2), unit_matrix(3, 0, 2)})};
  }
  if (name == "se2") {
    const auto c = constants_from_triplets(3, {T{2, 0, 1, 1.0}, T{2, 1, 0, -1.0}});
    Mat J = Mat::Zero(3, 3);
    J(0, 1) = -1.0;
    J(1, 0) = 1.0;
    return {LieAlgebra(3, 3, c), MatrixRepresentation({unit_matrix(3, 0, 2), unit_matrix(3, 1, 2), J})};
  }
  throw InputError("unknown algebra preset '" + name + "'");
}

}  // namespace homspray
