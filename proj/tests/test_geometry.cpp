#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "safebandit/campaign.hpp"
#include "safebandit/geometry.hpp"
#include "support.hpp"

using namespace safebandit;
using geometry::Norm;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testing_support::random_polytope;
using testing_support::random_unit;
using testing_support::simplex_2d;
using testing_support::unit_square;

namespace {

geometry::Polytope eb1() { return campaign::build_eb_safety(VectorXd::Constant(3, 0.1)); }

bool has_point(const std::vector<geometry::Vertex>& vs, const VectorXd& p, double tol = 1e-6) {
  return std::any_of(vs.begin(), vs.end(), [&](const auto& v) { return (v.point - p).norm() <= tol; });
}

/// Points of the closed `norm` ball of radius delta: extreme points for 1 and
/// ∞, a dense random sample of the sphere for 2.
std::vector<VectorXd> ball_sample(Eigen::Index m, double delta, Norm norm, std::mt19937_64& rng) {
  std::vector<VectorXd> out;
  if (norm == Norm::kLinf) {
    for (int mask = 0; mask < (1 << m); ++mask) {
      VectorXd v(m);
      for (Eigen::Index k = 0; k < m; ++k) v(k) = (mask >> k) & 1 ? delta : -delta;
      out.push_back(v);
    }
  } else if (norm == Norm::kL1) {
    for (Eigen::Index k = 0; k < m; ++k)
      for (double s : {-1.0, 1.0}) out.push_back(s * delta * VectorXd::Unit(m, k));
  } else {
    for (int k = 0; k < 20000; ++k) out.push_back(delta * random_unit(m, rng));
  }
  return out;
}

}  // namespace

TEST(Norms, ConstantsAndDuals) {
  EXPECT_DOUBLE_EQ(geometry::norm_constant(Norm::kL2, 3), 1.0);
  EXPECT_DOUBLE_EQ(geometry::norm_constant(Norm::kL1, 3), 1.0);
  EXPECT_DOUBLE_EQ(geometry::norm_constant(Norm::kLinf, 4), 2.0);
  EXPECT_EQ(geometry::dual(Norm::kL1), Norm::kLinf);
  EXPECT_EQ(geometry::dual(Norm::kLinf), Norm::kL1);
  EXPECT_EQ(geometry::dual(Norm::kL2), Norm::kL2);
  EXPECT_EQ(geometry::parse_norm("inf"), Norm::kLinf);
  EXPECT_THROW(geometry::parse_norm("3"), std::invalid_argument);
}

TEST(PolytopeType, RejectsZeroRowsAndBadSizes) {
  MatrixXd A(2, 2);
  A << 1, 0, 0, 0;
  EXPECT_THROW(geometry::Polytope(A, VectorXd::Ones(2)), std::invalid_argument);
  EXPECT_THROW(geometry::Polytope(MatrixXd::Identity(2, 2), VectorXd::Ones(3)), std::invalid_argument);
}

TEST(Shrink, UnitSquareInfinityNorm) {
  const auto s = geometry::shrink(unit_square(), 0.5, Norm::kLinf);
  EXPECT_TRUE(s.b().isApprox(VectorXd::Constant(4, 0.5)));
  EXPECT_EQ(s.A(), unit_square().A());
}

TEST(Shrink, ZeroDeltaKeepsOffsets) {
  EXPECT_EQ(geometry::shrink(eb1(), 0.0, Norm::kL2).b(), eb1().b());
}

TEST(Shrink, Eb1InfinityOffsetsMatchGridOracle) {
  const auto s = geometry::shrink(eb1(), 1.0, Norm::kLinf);
  for (Eigen::Index j = 0; j < s.rows(); ++j) EXPECT_NEAR(s.b()(j), 0.7, 1e-15);
  // Grid oracle: x is in the shrunk set iff x + v ∈ E for v on a grid of the unit ∞-ball.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int rep = 0; rep < 300; ++rep) {
    const VectorXd x = (VectorXd(3) << u(rng), u(rng), u(rng)).finished();
    bool all_inside = true;
    for (int i = 0; i <= 10 && all_inside; ++i)
      for (int j = 0; j <= 10 && all_inside; ++j)
        for (int k = 0; k <= 10 && all_inside; ++k) {
          const VectorXd v = (VectorXd(3) << -1 + 0.2 * i, -1 + 0.2 * j, -1 + 0.2 * k).finished();
          all_inside = 0.1 * (x + v).lpNorm<1>() <= 1.0 + 1e-12;
        }
    EXPECT_EQ(s.contains(x, 1e-12), all_inside) << x.transpose();
  }
}

TEST(Shrink, OffsetCorrectnessOnRandomPolytopes) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (Norm norm : {Norm::kL1, Norm::kL2, Norm::kLinf}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto poly = random_polytope(2 + rep % 2, 7, rng);
      const double delta = 0.2;
      const auto shrunk = geometry::shrink(poly, delta, norm);
      const auto ball = ball_sample(poly.dim(), delta, norm, rng);
      for (int k = 0; k < 30; ++k) {
        VectorXd x(poly.dim());
        for (Eigen::Index c = 0; c < x.size(); ++c) x(c) = u(rng);
        const double slack = shrunk.max_violation(x);
        bool sampled_inside = true;
        for (const VectorXd& v : ball) sampled_inside = sampled_inside && poly.contains(x + v, 1e-12);
        if (slack <= 0.0) EXPECT_TRUE(sampled_inside);
        if (slack > 1e-3) EXPECT_FALSE(sampled_inside);
      }
    }
  }
}

TEST(Emptiness, Examples) {
  EXPECT_FALSE(geometry::is_empty(unit_square()));
  MatrixXd A(2, 1);
  A << 1, -1;
  EXPECT_TRUE(geometry::is_empty(geometry::Polytope(A, Eigen::Vector2d(-1, -1))));
  EXPECT_TRUE(geometry::is_empty(geometry::shrink(unit_square(), 1.2, Norm::kL2)));
  EXPECT_FALSE(geometry::is_empty(geometry::shrink(unit_square(), 1.0, Norm::kL2)));
}

TEST(Boundedness, HalfPlaneIsUnbounded) {
  MatrixXd A(1, 2);
  A << 1, 0;
  const geometry::Polytope half(A, VectorXd::Ones(1));
  EXPECT_FALSE(geometry::is_bounded(half));
  EXPECT_TRUE(geometry::is_bounded(unit_square()));
  try {
    geometry::max_shrinkage(half, Norm::kL2);
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), GeometryError::Kind::kUnbounded);
  }
}

TEST(MaxShrinkage, Examples) {
  EXPECT_NEAR(geometry::max_shrinkage(unit_square(), Norm::kL2), 1.0, 1e-12);
  EXPECT_NEAR(geometry::max_shrinkage(unit_square(), Norm::kLinf), 1.0, 1e-12);
  EXPECT_NEAR(geometry::max_shrinkage(eb1(), Norm::kLinf), 10.0 / 3.0, 1e-9);
  EXPECT_NEAR(geometry::max_shrinkage(eb1(), Norm::kL1), 10.0, 1e-9);
  EXPECT_NEAR(geometry::max_shrinkage(eb1(), Norm::kL2), 1.0 / std::sqrt(0.03), 1e-9);
}

TEST(MaxShrinkage, Eb1InfinityByBisectionOracle) {
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (geometry::is_empty(geometry::shrink(eb1(), mid, Norm::kLinf)) ? hi : lo) = mid;
  }
  EXPECT_NEAR(geometry::max_shrinkage(eb1(), Norm::kLinf), lo, 1e-9);
}

TEST(MaxShrinkage, EmptyInputRaises) {
  MatrixXd A(2, 1);
  A << 1, -1;
  try {
    geometry::max_shrinkage(geometry::Polytope(A, Eigen::Vector2d(-1, -1)), Norm::kL2);
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), GeometryError::Kind::kEmptySet);
  }
}

TEST(MaxShrinkage, PositiveExactlyWhenInteriorIsNonempty) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const auto poly = random_polytope(2, 6, rng);
    const auto h = geometry::max_shrinkage_with_center(poly, Norm::kL2);
    EXPECT_GT(h.value, 0.0);
    // The center is an interior witness: a ball of radius h fits around it.
    EXPECT_LE(poly.max_violation(h.center) + h.value, 1e-9);
  }
  // A flat polytope (a segment in the plane) has no interior.
  MatrixXd A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  const geometry::Polytope flat(A, Eigen::Vector4d(1, 1, 0, 0));
  EXPECT_NEAR(geometry::max_shrinkage(flat, Norm::kL2), 0.0, 1e-12);
}

TEST(MaxShrinkage, ShrunkSetNonemptyOnWholeRange) {
  std::mt19937_64 rng(4);
  for (Norm norm : {Norm::kL1, Norm::kL2, Norm::kLinf}) {
    const auto poly = random_polytope(3, 8, rng);
    const double h = geometry::max_shrinkage(poly, norm);
    for (int k = 0; k < 50; ++k)
      EXPECT_FALSE(geometry::is_empty(geometry::shrink(poly, h * k / 49.0, norm)));
    EXPECT_TRUE(geometry::is_empty(geometry::shrink(poly, h * 1.01 + 1e-9, norm)));
  }
}

TEST(MaxShrinkage, MonotoneUnderInclusion) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> cut(0.2, 0.9);
  for (int rep = 0; rep < 50; ++rep) {
    const auto outer = random_polytope(2 + rep % 2, 6, rng);
    MatrixXd A(outer.rows() + 1, outer.dim());
    A << outer.A(), random_unit(outer.dim(), rng).transpose();
    VectorXd b(outer.rows() + 1);
    b << outer.b(), cut(rng);
    const geometry::Polytope inner(A, b);
    for (const auto& v : geometry::vertices(inner)) ASSERT_TRUE(outer.contains(v.point, 1e-9));
    for (Norm norm : {Norm::kL1, Norm::kL2, Norm::kLinf})
      EXPECT_LE(geometry::max_shrinkage(inner, norm), geometry::max_shrinkage(outer, norm) + 1e-10);
  }
}

TEST(Vertices, Examples) {
  const auto sq = geometry::vertices(unit_square());
  EXPECT_EQ(sq.size(), 4u);
  for (double x : {-1.0, 1.0})
    for (double y : {-1.0, 1.0}) EXPECT_TRUE(has_point(sq, Eigen::Vector2d(x, y)));

  const auto tri = geometry::vertices(simplex_2d());
  EXPECT_EQ(tri.size(), 3u);
  EXPECT_TRUE(has_point(tri, Eigen::Vector2d(0, 0)));
  EXPECT_TRUE(has_point(tri, Eigen::Vector2d(1, 0)));
  EXPECT_TRUE(has_point(tri, Eigen::Vector2d(0, 1)));

  const auto e = geometry::vertices(eb1());
  EXPECT_EQ(e.size(), 6u);
  for (int k = 0; k < 3; ++k)
    for (double s : {-10.0, 10.0}) EXPECT_TRUE(has_point(e, s * VectorXd::Unit(3, k)));
}

TEST(Vertices, ActiveRowsAreTight) {
  std::mt19937_64 rng(6);
  const auto poly = random_polytope(3, 9, rng);
  for (const auto& v : geometry::vertices(poly)) {
    ASSERT_EQ(v.active_rows.size(), 3u);
    for (int j : v.active_rows) EXPECT_NEAR(poly.A().row(j).dot(v.point), poly.b()(j), 1e-9);
    EXPECT_LE(poly.max_violation(v.point), 1e-8);
  }
}

TEST(Vertices, RedundantRowsAreTolerated) {
  MatrixXd A(6, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1, 1, 0, 1, 1;
  VectorXd b(6);
  b << 1, 1, 1, 1, 1, 5;
  EXPECT_EQ(geometry::vertices(geometry::Polytope(A, b)).size(), 4u);
}

TEST(Vertices, BudgetErrors) {
  geometry::GeometryOptions opt;
  opt.subset_budget = 10;
  try {
    geometry::vertices(eb1(), opt);
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), GeometryError::Kind::kBudget);
  }
  const geometry::Polytope big(MatrixXd::Identity(13, 13), VectorXd::Ones(13));
  EXPECT_THROW(geometry::vertices(big), GeometryError);
}

TEST(Projection, Examples) {
  EXPECT_EQ(geometry::project(Eigen::Vector2d(0.3, -0.2), unit_square()), Eigen::Vector2d(0.3, -0.2));
  EXPECT_LT((geometry::project(Eigen::Vector2d(2, 0), unit_square()) - Eigen::Vector2d(1, 0)).norm(), 1e-9);
  const auto shrunk = geometry::shrink(unit_square(), 0.25, Norm::kL2);
  const VectorXd p = geometry::project(Eigen::Vector2d(2, 2), shrunk);
  EXPECT_LT((p - Eigen::Vector2d(0.75, 0.75)).norm(), 1e-8);
}

TEST(Projection, MatchesActiveSetOracleIn2D) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    const auto poly = random_polytope(2, 6, rng);
    const VectorXd x = Eigen::Vector2d(u(rng), u(rng));
    const VectorXd p = geometry::project(x, poly);
    EXPECT_LE(poly.max_violation(p), 1e-8);
    EXPECT_NEAR((x - p).norm(), testing_support::polygon_distance(x, poly.A(), poly.b()), 1e-7);
  }
}

TEST(Projection, KktEnumerationMatchesDykstra) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index m = 2 + rep % 2;
    const auto poly = random_polytope(m, static_cast<int>(2 * m + 2), rng);
    VectorXd x(m);
    for (Eigen::Index k = 0; k < m; ++k) x(k) = u(rng);
    const VectorXd exact = geometry::project_active_set(x, poly);
    EXPECT_NEAR((exact - geometry::project(x, poly)).norm(), 0.0, 1e-7);
    if (m == 2) EXPECT_NEAR((x - exact).norm(), testing_support::polygon_distance(x, poly.A(), poly.b()), 1e-9);
  }
}

TEST(Sharpness, CollapsedShrunkSetUsesCenterDistance) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 20; ++rep) {
    const auto poly = random_polytope(2 + rep % 2, 7, rng);
    const Norm norm = static_cast<Norm>(rep % 3);
    const auto s = geometry::max_shrinkage_with_center(poly, norm);
    // A generic polytope shrinks to the single LP center at Δ = H.
    double far = 0.0;
    for (const auto& v : geometry::vertices(poly)) far = std::max(far, (v.point - s.center).norm());
    EXPECT_NEAR(geometry::sharpness(poly, s.value, norm), far, 1e-6 * (1.0 + far));
  }
}

TEST(Projection, BudgetExhaustionCarriesIterate) {
  MatrixXd A(2, 2);
  A << 1, 0.001, 1, -0.001;
  const geometry::Polytope wedge(A, VectorXd::Zero(2));
  try {
    geometry::project(Eigen::Vector2d(5, 0), wedge, 1e-15, 2);
    FAIL();
  } catch (const ProjectionError& e) {
    EXPECT_EQ(e.last_iterate().size(), 2);
    EXPECT_GE(e.residual(), 0.0);
  }
}

TEST(Sharpness, Examples) {
  EXPECT_EQ(geometry::sharpness(eb1(), 0.0, Norm::kL2), 0.0);
  EXPECT_NEAR(geometry::sharpness(unit_square(), 0.5, Norm::kL2), 0.5 * std::sqrt(2.0), 1e-8);
  const double bound = std::sqrt(2.0) * geometry::norm_constant(Norm::kL2, 2) *
                       geometry::condition_constant(unit_square()) * 0.5;
  EXPECT_NEAR(geometry::sharpness(unit_square(), 0.5, Norm::kL2), bound, 1e-8);
}

TEST(Sharpness, DomainError) {
  try {
    geometry::sharpness(unit_square(), 1.5, Norm::kL2);
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), GeometryError::Kind::kDomain);
  }
}

TEST(Sharpness, MatchesGridSupInfOracleIn2D) {
  std::mt19937_64 rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const auto poly = random_polytope(2, 5 + rep % 3, rng);
    const Norm norm = rep % 3 == 0 ? Norm::kL1 : (rep % 3 == 1 ? Norm::kL2 : Norm::kLinf);
    const double delta = 0.6 * geometry::max_shrinkage(poly, norm);
    const auto shrunk = geometry::shrink(poly, delta, norm);
    VectorXd lo = VectorXd::Constant(2, INFINITY), hi = -lo;
    for (const auto& v : geometry::vertices(poly)) {
      lo = lo.cwiseMin(v.point);
      hi = hi.cwiseMax(v.point);
    }
    double sup = 0.0;
    const int k = 200;
    for (int i = 0; i <= k; ++i)
      for (int j = 0; j <= k; ++j) {
        const Eigen::Vector2d x(lo(0) + (hi(0) - lo(0)) * i / k, lo(1) + (hi(1) - lo(1)) * j / k);
        if (!poly.contains(x, 1e-12)) continue;
        sup = std::max(sup, testing_support::polygon_distance(x, shrunk.A(), shrunk.b()));
      }
    EXPECT_NEAR(geometry::sharpness(poly, delta, norm), sup, 1e-2 * geometry::diameter(poly));
  }
}

TEST(Sharpness, LinearBoundOnRandomPolytopes) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index m = 2 + rep % 2;
    const auto poly = random_polytope(m, static_cast<int>(2 * m + rep % 4), rng);
    const Norm norm = static_cast<Norm>(rep % 3);
    const double k = geometry::condition_constant(poly);
    const double h = geometry::max_shrinkage(poly, norm);
    for (int s = 1; s <= 10; ++s) {
      const double delta = h * s / 10.0;
      EXPECT_LE(geometry::sharpness(poly, delta, norm),
                std::sqrt(static_cast<double>(m)) * geometry::norm_constant(norm, m) * k * delta * (1 + 1e-9) + 1e-9);
    }
  }
}

TEST(Sharpness, CurveStartsAtOriginAndIsNondecreasing) {
  const auto square = geometry::sharpness_curve(unit_square(), Norm::kL2, 11);
  ASSERT_EQ(square.size(), 11u);
  EXPECT_EQ(square.front().delta, 0.0);
  EXPECT_EQ(square.front().sharpness, 0.0);
  for (const auto& p : square) EXPECT_NEAR(p.sharpness, std::sqrt(2.0) * p.delta, 1e-8);
  for (Norm norm : {Norm::kL1, Norm::kL2, Norm::kLinf}) {
    const auto curve = geometry::sharpness_curve(eb1(), norm, 9);
    for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_GE(curve[i].sharpness, curve[i - 1].sharpness - 1e-9);
  }
}

TEST(Sharpness, NestedShrunkSets) {
  std::mt19937_64 rng(10);
  const auto poly = random_polytope(3, 8, rng);
  const double h = geometry::max_shrinkage(poly, Norm::kL2);
  const auto small = geometry::shrink(poly, 0.6 * h, Norm::kL2);
  const auto large = geometry::shrink(poly, 0.3 * h, Norm::kL2);
  for (const auto& v : geometry::vertices(small)) EXPECT_TRUE(large.contains(v.point, 1e-9));
}

TEST(ConditionConstant, Examples) {
  EXPECT_NEAR(geometry::condition_constant(unit_square()), 1.0, 1e-12);
  MatrixXd A(2, 2);
  A << 1, 1, 2, 2;
  try {
    geometry::condition_constant(geometry::Polytope(A, VectorXd::Ones(2)));
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), GeometryError::Kind::kDegenerate);
  }
}

TEST(ConditionConstant, Eb1MatchesSignMatrixEnumeration) {
  // Independent oracle: integer sign matrices, invertibility by exact determinant.
  std::vector<Eigen::Vector3d> signs;
  for (int mask = 0; mask < 8; ++mask)
    signs.emplace_back(mask & 1 ? -1 : 1, mask & 2 ? -1 : 1, mask & 4 ? -1 : 1);
  double worst = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j)
      for (int k = j + 1; k < 8; ++k) {
        Eigen::Matrix3d m;
        m << signs[i].transpose(), signs[j].transpose(), signs[k].transpose();
        if (std::lround(m.determinant()) == 0) continue;
        const Eigen::JacobiSVD<Eigen::Matrix3d> svd(m);
        worst = std::max(worst, svd.singularValues()(0) / svd.singularValues()(2));
      }
  EXPECT_NEAR(geometry::condition_constant(eb1()), worst, 1e-9);
  EXPECT_NEAR(worst, 2.0, 1e-12);
}

TEST(Diameter, Examples) {
  EXPECT_NEAR(geometry::diameter(unit_square()), 2.0 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(geometry::diameter(simplex_2d()), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(geometry::diameter(eb1()), 20.0, 1e-9);
}
