#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "seqkrig/kernels.hpp"

using namespace seqkrig;

namespace {

DesignMatrix random_design(Rng& rng, int n, int m) {
  Eigen::MatrixXd pts(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) pts(i, j) = rng.uniform01();
  return DesignMatrix(std::move(pts));
}

}  // namespace

TEST_CASE("gaussian correlation values", "[kernels]") {
  const auto spec = KernelSpec::gaussian(Eigen::Vector2d(1.0, 1.0), 0.01);
  const Eigen::RowVector2d x(0.3, 0.7);
  REQUIRE(correlation(spec, x, x) == Catch::Approx(1.01).margin(1e-15));

  const auto spec0 = KernelSpec::gaussian(Eigen::Vector2d(1.0, 1.0), 0.0);
  const Eigen::RowVector2d a(0.0, 0.4), b(1.0, 0.4);
  REQUIRE(correlation(spec0, a, b) == Catch::Approx(std::exp(-1.0)).epsilon(1e-14));

  REQUIRE_THROWS_AS(correlation(spec0, a, Eigen::RowVector3d(0, 0, 0)), ArgumentError);
  REQUIRE_THROWS_AS(
      correlation(spec0, Eigen::RowVector3d(0, 0, 0), Eigen::RowVector3d(0, 0, 0)),
      ArgumentError);
}

TEST_CASE("matern correlation matches its half-integer closed forms", "[kernels]") {
  // nu = 1/2: exp(-2 sqrt(nu) phi r)
  for (const double r : {0.1, 0.5, 1.0, 2.0}) {
    const auto s = KernelSpec::matern(0.5, 0.5, 0.0);
    const Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(1);
    Eigen::RowVectorXd y(1);
    y << r;
    REQUIRE(correlation(s, x, y) ==
            Catch::Approx(std::exp(-std::sqrt(2.0) * 0.5 * r)).epsilon(1e-10));
  }
  // nu = 3/2: (1 + z) exp(-z), z = 2 sqrt(nu) phi r
  {
    const auto s = KernelSpec::matern(1.5, 0.7, 0.0);
    const double r = 0.9, z = 2.0 * std::sqrt(1.5) * 0.7 * r;
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(1), y(1);
    y << r;
    REQUIRE(correlation(s, x, y) == Catch::Approx((1 + z) * std::exp(-z)).epsilon(1e-10));
  }
  // nu = 5/2: (1 + z + z^2/3) exp(-z)
  {
    const auto s = KernelSpec::matern(2.5, 1.3, 0.0);
    const double r = 0.4, z = 2.0 * std::sqrt(2.5) * 1.3 * r;
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(1), y(1);
    y << r;
    REQUIRE(correlation(s, x, y) ==
            Catch::Approx((1 + z + z * z / 3.0) * std::exp(-z)).epsilon(1e-10));
  }
  // x = y limit is 1 + g
  {
    const auto s = KernelSpec::matern(1.5, 2.0, 0.05);
    const Eigen::RowVector2d x(0.2, 0.8);
    REQUIRE(correlation(s, x, x) == Catch::Approx(1.05).margin(1e-15));
  }
}

TEST_CASE("correlation symmetry and range", "[kernels]") {
  Rng rng(31);
  const auto gauss = KernelSpec::gaussian(Eigen::Vector3d(0.5, 2.0, 7.0), 0.0);
  const auto matern = KernelSpec::matern(1.5, 1.1, 0.0);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::RowVector3d x(rng.uniform01(), rng.uniform01(), rng.uniform01());
    Eigen::RowVector3d y(rng.uniform01(), rng.uniform01(), rng.uniform01());
    const double kg = correlation(gauss, x, y);
    REQUIRE(kg == correlation(gauss, y, x));
    REQUIRE(kg > 0.0);
    REQUIRE(kg <= 1.0);
    const double km = correlation(matern, x, y);
    REQUIRE(km == correlation(matern, y, x));
    REQUIRE(km > 0.0);
    REQUIRE(km <= 1.0);
  }
}

TEST_CASE("cross correlations against a design", "[kernels]") {
  Rng rng(5);
  auto design = random_design(rng, 6, 2);
  const auto spec = KernelSpec::gaussian(Eigen::Vector2d(3.0, 4.0), 0.1);

  SECTION("at a design row the vector is the matching correlation-matrix column") {
    const Eigen::MatrixXd K = correlation_matrix(spec, design);
    const Eigen::VectorXd r = cross_correlations(spec, design.row(3), design);
    REQUIRE((r - K.col(3)).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE(r(3) == Catch::Approx(1.1).margin(1e-15));
  }

  SECTION("single-point design closed form") {
    Eigen::MatrixXd one(1, 1);
    one << 0.0;
    const DesignMatrix d(one);
    const auto s = KernelSpec::gaussian(Eigen::VectorXd::Constant(1, 2.0), 0.0);
    Eigen::RowVectorXd x(1);
    x << 0.5;
    const Eigen::VectorXd r = cross_correlations(s, x, d);
    REQUIRE(r(0) == Catch::Approx(std::exp(-0.5)).epsilon(1e-14));
  }

  SECTION("far points decay below 1e-10") {
    const auto tight = KernelSpec::gaussian(Eigen::Vector2d(200.0, 200.0), 0.0);
    Eigen::MatrixXd corner(1, 2);
    corner << 0.0, 0.0;
    const DesignMatrix d(corner);
    const Eigen::VectorXd r = cross_correlations(tight, Eigen::RowVector2d(1.0, 1.0), d);
    REQUIRE(r(0) < 1e-10);
  }
}

TEST_CASE("jacobian analytic values", "[kernels]") {
  SECTION("column vanishes where x coincides with a design row") {
    Rng rng(9);
    auto design = random_design(rng, 5, 3);
    const auto spec = KernelSpec::gaussian(Eigen::Vector3d(1.0, 2.0, 3.0), 0.05);
    const Eigen::MatrixXd jac = cross_correlation_jacobian(spec, design.row(2), design);
    REQUIRE(jac.col(2).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("one-dimensional hand value") {
    Eigen::MatrixXd one(1, 1);
    one << 0.0;
    const DesignMatrix d(one);
    const auto spec = KernelSpec::gaussian(Eigen::VectorXd::Constant(1, 1.0), 0.0);
    Eigen::RowVectorXd x(1);
    x << 0.5;
    const Eigen::MatrixXd jac = cross_correlation_jacobian(spec, x, d);
    REQUIRE(jac(0, 0) == Catch::Approx(-std::exp(-0.25)).epsilon(1e-14));
  }

  SECTION("matern below the differentiability threshold is rejected") {
    Eigen::MatrixXd one(1, 1);
    one << 0.3;
    const DesignMatrix d(one);
    Eigen::RowVectorXd x(1);
    x << 0.6;
    REQUIRE_THROWS_AS(cross_correlation_jacobian(KernelSpec::matern(0.8, 1.0, 0.0), x, d),
                      UnsupportedOperationError);
    REQUIRE_NOTHROW(cross_correlation_jacobian(KernelSpec::matern(1.5, 1.0, 0.0), x, d));
  }
}

TEST_CASE("jacobian matches central finite differences", "[kernels]") {
  Rng rng(77);
  const double h = 1e-5;
  int checked = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(2, 8));
    const int m = static_cast<int>(rng.uniform_int(1, 4));
    auto design = random_design(rng, n, m);
    Eigen::VectorXd theta(m);
    for (int j = 0; j < m; ++j) theta(j) = std::exp(rng.uniform(std::log(0.5), std::log(50.0)));
    const bool use_matern = rep % 4 == 3;
    const KernelSpec spec = use_matern
                                ? KernelSpec::matern(rep % 8 == 3 ? 1.5 : 2.5, 1.2, 0.0)
                                : KernelSpec::gaussian(theta, 0.0);
    Eigen::RowVectorXd x(m);
    for (int j = 0; j < m; ++j) x(j) = rng.uniform01();

    const Eigen::MatrixXd jac = cross_correlation_jacobian(spec, x, design);
    for (int col = 0; col < n; ++col) {
      for (int i = 0; i < m; ++i) {
        const double fd = oracles::central_diff(
            [&](const Eigen::RowVectorXd& p) { return correlation(spec, p, design.row(col)); },
            x, i, h);
        const double denom = std::max(std::abs(jac(i, col)), 1.0);
        REQUIRE(std::abs(fd - jac(i, col)) / denom < 1e-4);
        ++checked;
      }
    }
  }
  REQUIRE(checked > 100);
}

TEST_CASE("second derivative diagonal", "[kernels]") {
  REQUIRE(second_derivative_diagonal(KernelSpec::gaussian(Eigen::Vector2d(1, 1))) ==
          Eigen::Vector2d(2, 2));
  REQUIRE(second_derivative_diagonal(KernelSpec::gaussian(Eigen::Vector3d(0.5, 3, 7))) ==
          Eigen::Vector3d(1, 6, 14));

  SECTION("scaling theta scales the diagonal exactly") {
    const Eigen::Vector3d theta(0.7, 1.3, 9.0);
    const Eigen::VectorXd base = second_derivative_diagonal(KernelSpec::gaussian(theta));
    const Eigen::VectorXd scaled = second_derivative_diagonal(KernelSpec::gaussian(3.0 * theta));
    REQUIRE((scaled - 3.0 * base).cwiseAbs().maxCoeff() == 0.0);
  }

  SECTION("matches numerically differentiating the correlation twice") {
    const Eigen::Vector2d theta(0.8, 12.0);
    const auto spec = KernelSpec::gaussian(theta, 0.0);
    const Eigen::RowVector2d x(0.4, 0.6);
    const double h = 1e-4;
    for (int i = 0; i < 2; ++i) {
      // d/dy_i of (d/dx_i k)(x, y) at y = x via nested central differences.
      auto dk_dxi = [&](const Eigen::RowVectorXd& y) {
        Eigen::RowVectorXd xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        return (correlation(spec, xp, y) - correlation(spec, xm, y)) / (2.0 * h);
      };
      const double mixed = oracles::central_diff(dk_dxi, x, i, h);
      REQUIRE(std::abs(mixed - 2.0 * theta(i)) / (2.0 * theta(i)) < 1e-3);
    }
  }

  REQUIRE_THROWS_AS(second_derivative_diagonal(KernelSpec::matern(2.5, 1.0)),
                    UnsupportedOperationError);
}
