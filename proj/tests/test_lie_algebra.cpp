#include <gtest/gtest.h>

#include "homspray/lie_algebra.hpp"
#include "support.hpp"

using namespace homspray;
using testing_support::expm;
using testing_support::Gen;

namespace {

const std::vector<std::string> kPresets = {"abelian", "su2", "su2_u1", "sl2_r", "heisenberg3", "se2"};

// Left-trivialized differential of the matrix exponential by central
// differences: exp(X)^{-1} d/ds exp(X + s V).
Vec dexp_by_matrices(const MatrixRepresentation& rep, const Vec& x, const Vec& v) {
  const Mat X = rep.to_matrix(x), V = rep.to_matrix(v);
  const double h = 1e-4;
  const Mat d = (-expm(X + 2 * h * V) + 8 * expm(X + h * V) - 8 * expm(X - h * V) + expm(X - 2 * h * V)) / (12 * h);
  return rep.from_matrix(expm(X).inverse() * d);
}

}  // namespace

TEST(LieAlgebra, PresetsSatisfyStructureAndRepresentation) {
  for (const auto& name : kPresets) {
    const AlgebraPreset p = preset(name);
    const StructureReport r = p.algebra.check_structure();
    EXPECT_TRUE(r.ok()) << name;
    ASSERT_TRUE(p.rep.has_value()) << name;
    EXPECT_LT(p.rep->commutator_residual(p.algebra), 1e-14) << name;
  }
}

TEST(LieAlgebra, Su2Brackets) {
  const LieAlgebra g = preset("su2").algebra;
  const Vec e0 = Vec::Unit(3, 0), e1 = Vec::Unit(3, 1), e2 = Vec::Unit(3, 2);
  EXPECT_TRUE(g.bracket(e0, e1).isApprox(e2));
  EXPECT_TRUE(g.bracket(e1, e2).isApprox(e0));
  EXPECT_TRUE(g.bracket(e2, e0).isApprox(e1));
}

TEST(LieAlgebra, BracketIsBilinearAntisymmetricAndJacobi) {
  Gen gen(7);
  for (const auto& name : kPresets) {
    const LieAlgebra g = preset(name).algebra;
    for (int k = 0; k < 20; ++k) {
      const Vec x = gen.vec(g.dim()), y = gen.vec(g.dim()), z = gen.vec(g.dim());
      const double a = gen.normal();
      EXPECT_LT((g.bracket(x, y) + g.bracket(y, x)).norm(), 1e-13);
      EXPECT_LT((g.bracket(a * x + z, y) - a * g.bracket(x, y) - g.bracket(z, y)).norm(), 1e-12);
      const Vec jac = g.bracket(g.bracket(x, y), z) + g.bracket(g.bracket(y, z), x) + g.bracket(g.bracket(z, x), y);
      EXPECT_LT(jac.norm(), 1e-12) << name;
    }
  }
}

TEST(LieAlgebra, DexpZeroIsIdentity) {
  const LieAlgebra g = preset("sl2_r").algebra;
  const Vec v(Vec::LinSpaced(3, 1.0, 3.0));
  EXPECT_TRUE(g.dexp_trivialized(Vec::Zero(3), v).isApprox(v));
}

TEST(LieAlgebra, DexpNilpotentTwoTerms) {
  const LieAlgebra g = preset("heisenberg3").algebra;
  const Vec x = 0.2 * Vec::Unit(3, 0), v = Vec::Unit(3, 1);
  Vec expect(3);
  expect << 0.0, 1.0, -0.1;
  EXPECT_LT((g.dexp_trivialized(x, v) - expect).norm(), 1e-16);
}

// Pins the sign convention of the series against the matrix exponential.
TEST(LieAlgebra, DexpMatchesMatrixExponential) {
  Gen gen(11);
  for (const auto& name : {"su2", "sl2_r", "heisenberg3", "se2"}) {
    const AlgebraPreset p = preset(name);
    for (int k = 0; k < 10; ++k) {
      const Vec x = 0.7 * gen.vec(3), v = gen.vec(3);
      EXPECT_LT((p.algebra.dexp_trivialized(x, v) - dexp_by_matrices(*p.rep, x, v)).norm(), 1e-8) << name;
    }
  }
}

TEST(LieAlgebra, DexpSeriesCapThrows) {
  const LieAlgebra g = preset("su2").algebra;
  EXPECT_THROW(g.dexp_trivialized(1e3 * Vec::Unit(3, 0), Vec::Unit(3, 1)), NumericalError);
  EXPECT_THROW(g.dexp_trivialized(Vec::Zero(2), Vec::Unit(3, 1)), InputError);
}

TEST(LieAlgebra, ProjectionsAndEmbeddings) {
  const LieAlgebra g = preset("su2_u1").algebra;
  EXPECT_EQ(g.dim_m(), 2);
  EXPECT_EQ(g.dim_h(), 1);
  const Vec x(Vec::LinSpaced(3, 1.0, 3.0));
  EXPECT_TRUE((g.project_m(x) + g.project_h(x)).isApprox(x));
  EXPECT_TRUE(g.embed_m(g.to_m(x)).isApprox(g.project_m(x)));
  EXPECT_TRUE(g.embed_h(g.to_h(x)).isApprox(g.project_h(x)));
}

TEST(LieAlgebra, SphereIsReductiveAndUnimodular) {
  const LieAlgebra g = preset("su2_u1").algebra;
  EXPECT_TRUE(g.check_reductive().reductive);
  EXPECT_TRUE(g.is_unimodular());
}

// Brute force: Ad(exp(s z)) maps m into m for every isotropy generator z.
TEST(LieAlgebra, ReductivityAgreesWithGroupAdjointAction) {
  struct Case {
    LieAlgebra g;
    MatrixRepresentation rep;
  };
  const AlgebraPreset sphere = preset("su2_u1");
  const AlgebraPreset sl2 = preset("sl2_r");
  Mat P(3, 3);  // columns e1, e2, e1 + e3: h = span{e1 + e3}
  P << 1, 0, 1, 0, 1, 0, 0, 0, 1;
  const LieAlgebra skew = sl2.algebra.change_basis(P).with_dim_m(2);
  const MatrixRepresentation skew_rep = sl2.rep->change_basis(P);
  const std::vector<Case> cases = {{sphere.algebra, *sphere.rep}, {skew, skew_rep}};
  for (const auto& c : cases) {
    double leak = 0.0;
    for (int a = 0; a < c.g.dim_h(); ++a) {
      const Mat Z = c.rep.to_matrix(c.g.embed_h(Vec::Unit(c.g.dim_h(), a)));
      for (double s : {0.3, -0.7}) {
        const Mat E = expm(s * Z);
        for (int i = 0; i < c.g.dim_m(); ++i) {
          const Mat X = c.rep.to_matrix(Vec::Unit(c.g.dim(), i));
          leak = std::max(leak, c.g.to_h(c.rep.from_matrix(E * X * E.inverse())).norm());
        }
      }
    }
    EXPECT_EQ(c.g.check_reductive().reductive, leak < 1e-10) << "leak " << leak;
  }
  EXPECT_FALSE(skew.check_reductive().reductive);
  EXPECT_FALSE(skew.check_reductive().violations.empty());
  EXPECT_TRUE(skew.check_structure().ok(1e-12));
}

TEST(LieAlgebra, ChangeBasisTransportsBrackets) {
  Gen gen(3);
  const LieAlgebra g = preset("se2").algebra;
  Mat P = Mat::Identity(3, 3);
  for (int c = 0; c < 3; ++c) P.col(c) += 0.3 * gen.vec(3);
  const LieAlgebra f = g.change_basis(P);
  EXPECT_TRUE(f.check_structure().ok(1e-12));
  for (int k = 0; k < 10; ++k) {
    const Vec u = gen.vec(3), v = gen.vec(3);
    EXPECT_LT((P * f.bracket(u, v) - g.bracket(P * u, P * v)).norm(), 1e-12);
  }
  EXPECT_THROW(g.change_basis(Mat::Zero(3, 3)), InputError);
}

TEST(LieAlgebra, TripletsFillPartnersAndRejectConflicts) {
  using T = std::tuple<int, int, int, double>;
  const auto c = constants_from_triplets(3, {T{0, 1, 2, 1.0}});
  const LieAlgebra g(3, 3, c);
  EXPECT_EQ(g.c(1, 0, 2), -1.0);
  EXPECT_THROW(constants_from_triplets(3, {T{0, 1, 2, 1.0}, T{1, 0, 2, 1.0}}), InputError);
  EXPECT_THROW(constants_from_triplets(3, {T{0, 0, 2, 1.0}}), InputError);
}

TEST(LieAlgebra, JacobiViolationDetected) {
  using T = std::tuple<int, int, int, double>;
  // Two of the su2 relations plus [e0, e2] = e2.
  const LieAlgebra g(3, 3, constants_from_triplets(3, {T{0, 1, 2, 1.0}, T{1, 2, 0, 1.0}, T{0, 2, 2, 1.0}}));
  EXPECT_GT(g.check_structure().jacobi, 1e-3);
  EXPECT_FALSE(g.check_structure().ok());
}

TEST(LieAlgebra, NonUnimodularIsotropy) {
  using T = std::tuple<int, int, int, double>;
  // m = span{X}, h = span{H}, [H, X] = X.
  const LieAlgebra g(2, 1, constants_from_triplets(2, {T{1, 0, 0, 1.0}}));
  EXPECT_TRUE(g.check_reductive().reductive);
  EXPECT_FALSE(g.is_unimodular());
  EXPECT_DOUBLE_EQ(g.isotropy_traces().front(), 1.0);
}

TEST(LieAlgebra, AbelianAnyDimension) {
  const AlgebraPreset p = preset("abelian", 4);
  EXPECT_EQ(p.algebra.dim(), 4);
  EXPECT_EQ(p.rep->size(), 5);
  EXPECT_LT(p.rep->commutator_residual(p.algebra), 1e-15);
  EXPECT_THROW(preset("abelian", 0), InputError);
  EXPECT_THROW(preset("e8"), InputError);
}

TEST(LieAlgebra, RepresentationRoundTrip) {
  Gen gen(5);
  const AlgebraPreset p = preset("sl2_r");
  const Vec x = gen.vec(3);
  EXPECT_LT((p.rep->from_matrix(p.rep->to_matrix(x)) - x).norm(), 1e-14);
}
