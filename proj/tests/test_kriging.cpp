#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "seqkrig/kriging.hpp"
#include "seqkrig/testbed.hpp"

using namespace seqkrig;

namespace {

DesignMatrix random_design(Rng& rng, int n, int m) {
  Eigen::MatrixXd pts(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) pts(i, j) = rng.uniform01();
  return DesignMatrix(std::move(pts));
}

KrigingModel branin_model(int n, std::uint64_t seed) {
  const auto fn = TestFunction::by_id(TestFunctionId::F1Branin);
  const auto design = latin_hypercube(n, 2, seed);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = evaluate(fn, design.row(i));
  return fit(design, y, KernelFamily::GaussianSeparable, seed + 1);
}

}  // namespace

TEST_CASE("interpolation and zero variance at the data", "[kriging]") {
  Rng rng(12);
  const auto design = random_design(rng, 12, 3);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) y(i) = std::sin(6.0 * design.points()(i, 0)) + design.points()(i, 2);
  const auto spec = KernelSpec::gaussian(Eigen::Vector3d(4.0, 2.0, 9.0), 0.1);
  const auto model = KrigingModel::with_hyperparameters(design, y, spec);
  for (int i = 0; i < 12; ++i) {
    REQUIRE(model.predict(design.row(i)) == Catch::Approx(y(i)).margin(1e-6));
    REQUIRE(model.predict_variance(design.row(i)) <= 1e-8 * model.tau_squared());
  }
}

TEST_CASE("single-point closed forms", "[kriging]") {
  Eigen::MatrixXd one(1, 1);
  one << 0.0;
  const DesignMatrix d(one);
  Eigen::VectorXd y(1);
  y << 2.0;
  const auto spec = KernelSpec::gaussian(Eigen::VectorXd::Constant(1, 1.0), 0.0);
  const auto model = KrigingModel::with_hyperparameters(d, y, spec, 1.0);

  Eigen::RowVectorXd x(1);
  x << 0.7;
  REQUIRE(model.predict(x) == Catch::Approx(2.0 * std::exp(-0.49)).epsilon(1e-12));
  x << 1.0;
  REQUIRE(model.predict_variance(x) == Catch::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));

  SECTION("far from the data the variance tends to tau^2 (1+g)") {
    const auto nspec = KernelSpec::gaussian(Eigen::VectorXd::Constant(1, 400.0), 0.02);
    const auto nmodel = KrigingModel::with_hyperparameters(d, y, nspec, 3.0);
    x << 1.0;
    REQUIRE(nmodel.predict_variance(x) == Catch::Approx(3.0 * 1.02).margin(1e-8 * 3.0));
    REQUIRE(std::abs(nmodel.predict(x)) < 1e-8 * y.norm());
  }
}

TEST_CASE("zero observations give the zero predictor", "[kriging]") {
  Eigen::MatrixXd pts(2, 1);
  pts << 0.05, 0.95;
  const DesignMatrix d(pts);
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  const auto model = fit(d, y, KernelFamily::GaussianSeparable, 4);
  REQUIRE(model.kinv_y().cwiseAbs().maxCoeff() == 0.0);
  Eigen::RowVectorXd x(1);
  x << 0.4;
  REQUIRE(model.predict(x) == 0.0);
}

TEST_CASE("prediction is linear in the observations", "[kriging]") {
  Rng rng(44);
  const auto design = random_design(rng, 9, 2);
  Eigen::VectorXd y1(9), y2(9);
  for (int i = 0; i < 9; ++i) {
    y1(i) = rng.uniform(-2, 2);
    y2(i) = rng.uniform(-2, 2);
  }
  const auto spec = KernelSpec::gaussian(Eigen::Vector2d(6.0, 3.0), 0.01);
  const auto ma = KrigingModel::with_hyperparameters(design, y1, spec, 1.0);
  const auto mb = KrigingModel::with_hyperparameters(design, y2, spec, 1.0);
  const auto mc = KrigingModel::with_hyperparameters(design, y1 + y2, spec, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::RowVector2d x(rng.uniform01(), rng.uniform01());
    REQUIRE(mc.predict(x) == Catch::Approx(ma.predict(x) + mb.predict(x)).margin(1e-10));
  }
}

TEST_CASE("interpolating fit on a two-point line", "[kriging]") {
  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 1.0;
  const DesignMatrix d(pts);
  Eigen::VectorXd y(2);
  y << 0.0, 1.0;
  const auto model = fit(d, y, KernelFamily::GaussianSeparable, 7);
  Eigen::RowVectorXd x(1);
  x << 0.0;
  REQUIRE(model.predict(x) == Catch::Approx(0.0).margin(1e-6));
  x << 1.0;
  REQUIRE(model.predict(x) == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("fitted surrogate beats the constant-mean predictor on branin", "[kriging]") {
  const auto fn = TestFunction::by_id(TestFunctionId::F1Branin);
  const auto design = latin_hypercube(20, 2, 303);
  Eigen::VectorXd y(20);
  for (int i = 0; i < 20; ++i) y(i) = evaluate(fn, design.row(i));
  const auto model = fit(design, y, KernelFamily::GaussianSeparable, 304);

  const auto test_matrix = latin_hypercube(2000, 2, 999);
  double sq_model = 0.0, sq_const = 0.0;
  const double ybar = y.mean();
  for (int i = 0; i < test_matrix.n(); ++i) {
    const double truth = evaluate(fn, test_matrix.row(i));
    sq_model += std::pow(model.predict(test_matrix.row(i)) - truth, 2);
    sq_const += std::pow(ybar - truth, 2);
  }
  REQUIRE(sq_model < sq_const);
}

TEST_CASE("fit is deterministic and accepts warm starts", "[kriging]") {
  Rng rng(55);
  const auto design = random_design(rng, 14, 2);
  Eigen::VectorXd y(14);
  for (int i = 0; i < 14; ++i)
    y(i) = std::cos(6.0 * design.points()(i, 0)) * design.points()(i, 1);
  const auto a = fit(design, y, KernelFamily::GaussianSeparable, 9);
  const auto b = fit(design, y, KernelFamily::GaussianSeparable, 9);
  REQUIRE(a.kernel().theta == b.kernel().theta);
  REQUIRE(a.kernel().nugget == b.kernel().nugget);

  const auto warm = fit(design, y, KernelFamily::GaussianSeparable, 10, a.kernel());
  REQUIRE(warm.log_likelihood() >= a.log_likelihood() - 1e-9);

  Eigen::MatrixXd single(1, 2);
  single << 0.5, 0.5;
  REQUIRE_THROWS_AS(fit(DesignMatrix(single), Eigen::VectorXd::Zero(1),
                        KernelFamily::GaussianSeparable, 1),
                    ArgumentError);
}

TEST_CASE("nugget escalation recovers from a singular correlation matrix", "[kriging]") {
  // A long-lengthscale kernel on many points makes K numerically rank one.
  const auto design = latin_hypercube(80, 1, 66);
  Eigen::VectorXd y(80);
  for (int i = 0; i < 80; ++i) y(i) = design.points()(i, 0);
  const auto spec = KernelSpec::gaussian(Eigen::VectorXd::Constant(1, 1e-3), 0.0);
  const auto model = KrigingModel::with_hyperparameters(design, y, spec);
  REQUIRE(model.nugget_escalations() >= 1);
  REQUIRE(model.kernel().nugget > 0.0);
  REQUIRE(std::isfinite(model.log_likelihood()));
}

TEST_CASE("predictor gradient", "[kriging]") {
  SECTION("zero observations give a zero gradient") {
    Eigen::MatrixXd pts(3, 2);
    pts << 0.1, 0.1, 0.5, 0.6, 0.9, 0.2;
    const auto model = KrigingModel::with_hyperparameters(
        DesignMatrix(pts), Eigen::VectorXd::Zero(3),
        KernelSpec::gaussian(Eigen::Vector2d(2, 2), 0.0), 1.0);
    REQUIRE(model.predict_gradient(Eigen::RowVector2d(0.3, 0.3)).norm() == 0.0);
  }

  SECTION("at the sole design point of a one-point design") {
    Eigen::MatrixXd one(1, 2);
    one << 0.4, 0.6;
    const auto model = KrigingModel::with_hyperparameters(
        DesignMatrix(one), Eigen::VectorXd::Constant(1, 5.0),
        KernelSpec::gaussian(Eigen::Vector2d(3, 3), 0.0), 1.0);
    REQUIRE(model.predict_gradient(Eigen::RowVector2d(0.4, 0.6)).norm() == 0.0);
  }

  SECTION("matches central finite differences of the predictor") {
    const auto model = branin_model(18, 71);
    Rng rng(72);
    const double h = 1e-5;
    for (int rep = 0; rep < 100; ++rep) {
      const Eigen::RowVector2d x(rng.uniform01(), rng.uniform01());
      const Eigen::VectorXd grad = model.predict_gradient(x);
      for (int i = 0; i < 2; ++i) {
        const double fd = oracles::central_diff(
            [&](const Eigen::RowVectorXd& p) { return model.predict(p); }, x, i, h);
        REQUIRE(std::abs(fd - grad(i)) / std::max(1.0, std::abs(grad(i))) < 1e-4);
      }
    }
  }
}

TEST_CASE("gradient variance diagonal", "[kriging]") {
  SECTION("far from the data the prior 2 theta_i remains") {
    Eigen::MatrixXd one(1, 2);
    one << 0.0, 0.0;
    const auto model = KrigingModel::with_hyperparameters(
        DesignMatrix(one), Eigen::VectorXd::Constant(1, 1.0),
        KernelSpec::gaussian(Eigen::Vector2d(150.0, 250.0), 0.0), 1.0);
    const Eigen::VectorXd g = model.gradient_variance_diagonal(Eigen::RowVector2d(1.0, 1.0));
    REQUIRE(g(0) == Catch::Approx(300.0).margin(1e-8));
    REQUIRE(g(1) == Catch::Approx(500.0).margin(1e-8));
  }

  SECTION("at the sole design point the jacobian column vanishes") {
    Eigen::MatrixXd one(1, 2);
    one << 0.5, 0.5;
    const auto model = KrigingModel::with_hyperparameters(
        DesignMatrix(one), Eigen::VectorXd::Constant(1, 2.0),
        KernelSpec::gaussian(Eigen::Vector2d(4.0, 6.0), 0.0), 1.0);
    const Eigen::VectorXd g = model.gradient_variance_diagonal(Eigen::RowVector2d(0.5, 0.5));
    REQUIRE(g(0) == Catch::Approx(8.0).margin(1e-12));
    REQUIRE(g(1) == Catch::Approx(12.0).margin(1e-12));
  }

  SECTION("a dense surrounding design cuts the gradient variance") {
    Eigen::MatrixXd pts(11, 1);
    for (int i = 0; i < 11; ++i) pts(i, 0) = i / 10.0;
    Eigen::VectorXd y(11);
    for (int i = 0; i < 11; ++i) y(i) = std::sin(pts(i, 0));
    const auto model = KrigingModel::with_hyperparameters(
        DesignMatrix(pts), y, KernelSpec::gaussian(Eigen::VectorXd::Constant(1, 10.0), 1e-8));
    Eigen::RowVectorXd mid(1);
    mid << 0.55;
    REQUIRE(model.gradient_variance_diagonal(mid)(0) < 0.5 * 20.0);
  }

  SECTION("posterior gradient variance never exceeds the prior") {
    const auto model = branin_model(15, 81);
    Rng rng(82);
    const double prior_sum = (2.0 * model.kernel().theta).sum();
    for (int rep = 0; rep < 50; ++rep) {
      const Eigen::RowVector2d x(rng.uniform01(), rng.uniform01());
      REQUIRE(model.gradient_variance_diagonal(x).sum() <= prior_sum + 1e-8);
    }
  }
}

TEST_CASE("expected squared gradient norm", "[kriging]") {
  SECTION("prior value at a one-point design's own location") {
    Eigen::MatrixXd one(1, 1);
    one << 0.5;
    const auto model = KrigingModel::with_hyperparameters(
        DesignMatrix(one), Eigen::VectorXd::Zero(1),
        KernelSpec::gaussian(Eigen::VectorXd::Constant(1, 1.0), 0.0), 2.5);
    Eigen::RowVectorXd x(1);
    x << 0.5;
    REQUIRE(model.gradient_norm_expectation(x) == Catch::Approx(2.5 * 2.0).margin(1e-12));
  }

  SECTION("dominates the squared predictor gradient and is internally consistent") {
    const auto model = branin_model(16, 91);
    Rng rng(92);
    for (int rep = 0; rep < 40; ++rep) {
      const Eigen::RowVector2d x(rng.uniform01(), rng.uniform01());
      const double e = model.gradient_norm_expectation(x);
      const double g2 = model.predict_gradient(x).squaredNorm();
      REQUIRE(e >= g2);
      const double trace = model.tau_squared() * model.gradient_variance_diagonal(x).sum();
      REQUIRE(e - g2 == Catch::Approx(trace).margin(1e-10 * std::max(1.0, e)));
    }
  }
}

TEST_CASE("adding a design point never increases the prediction variance", "[kriging]") {
  Rng rng(123);
  const auto design = random_design(rng, 10, 2);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) y(i) = rng.uniform(-1, 1);
  const auto spec = KernelSpec::gaussian(Eigen::Vector2d(8.0, 5.0), 1e-6);
  const auto before = KrigingModel::with_hyperparameters(design, y, spec, 1.0);

  const Eigen::RowVector2d extra(0.333, 0.777);
  Eigen::VectorXd y2(11);
  y2 << y, 0.25;
  const auto after =
      KrigingModel::with_hyperparameters(design.appended(extra), y2, spec, 1.0);

  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::RowVector2d x(rng.uniform01(), rng.uniform01());
    REQUIRE(after.predict_variance(x) <= before.predict_variance(x) + 1e-8 * 1.0);
  }
}

TEST_CASE("monte-carlo check of the expected gradient norm", "[kriging][slow]") {
  // Posterior sampling over finite-difference stencils; the full ten-probe
  // version runs in the acceptance suite.
  const auto model = branin_model(20, 140);
  const double theta_max = model.kernel().theta.maxCoeff();
  const double h = std::min(0.01, 0.05 / std::sqrt(theta_max));
  Rng rng(141);
  const auto probes = latin_hypercube(3, 2, 142);
  std::mt19937_64 gen(143);
  std::normal_distribution<double> normal;

  for (int p = 0; p < probes.n(); ++p) {
    const Eigen::RowVector2d x = probes.row(p);
    // Stencil: x, x +- h e1, x +- h e2.
    Eigen::MatrixXd stencil(5, 2);
    stencil.row(0) = x;
    stencil.row(1) = x + Eigen::RowVector2d(h, 0);
    stencil.row(2) = x - Eigen::RowVector2d(h, 0);
    stencil.row(3) = x + Eigen::RowVector2d(0, h);
    stencil.row(4) = x - Eigen::RowVector2d(0, h);

    // Posterior of the smooth component at the stencil (no nugget between
    // distinct points; the data-side K keeps its nugget).
    KernelSpec smooth = model.kernel();
    smooth.nugget = 0.0;
    Eigen::MatrixXd cross(5, model.n());
    for (int s = 0; s < 5; ++s)
      cross.row(s) =
          cross_correlations(smooth, stencil.row(s), model.design()).transpose();
    Eigen::MatrixXd self(5, 5);
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b)
        self(a, b) = correlation(smooth, stencil.row(a), stencil.row(b));
    const Eigen::MatrixXd K = correlation_matrix(model.kernel(), model.design());
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    const Eigen::VectorXd mu = cross * llt.solve(model.observations());
    const Eigen::MatrixXd cov =
        model.tau_squared() * (self - cross * llt.solve(cross.transpose()));

    oracles::PosteriorSampler sampler(mu, cov);
    const int n_samples = 2000;
    double sum = 0.0, sumsq = 0.0;
    for (int s = 0; s < n_samples; ++s) {
      const Eigen::VectorXd f = sampler.sample([&] { return normal(gen); });
      const double g1 = (f(1) - f(2)) / (2.0 * h);
      const double g2 = (f(3) - f(4)) / (2.0 * h);
      const double norm2 = g1 * g1 + g2 * g2;
      sum += norm2;
      sumsq += norm2 * norm2;
    }
    const double mc_mean = sum / n_samples;
    const double mc_var = (sumsq / n_samples - mc_mean * mc_mean) / n_samples;
    const double mc_se = std::sqrt(std::max(mc_var, 0.0));
    const double analytic = model.gradient_norm_expectation(x);
    INFO("probe " << p << ": mc=" << mc_mean << " analytic=" << analytic << " se=" << mc_se);
    REQUIRE(std::abs(mc_mean - analytic) <= 3.0 * mc_se + 1e-12);
  }
}
