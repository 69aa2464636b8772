#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "notekit/glm.hpp"
#include "oracles.hpp"

using namespace notekit;
using namespace testkit;

namespace {

DesignMatrix make_design(std::vector<std::string> names, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, std::vector<std::string> cluster,
                         std::vector<std::string> group = {}) {
  DesignMatrix d;
  d.names = std::move(names);
  d.X = X;
  d.y = y;
  d.cluster = std::move(cluster);
  d.group = std::move(group);
  return d;
}

std::vector<std::string> alternating_clusters(int n, int k = 2) {
  std::vector<std::string> c;
  for (int i = 0; i < n; ++i) c.push_back("c" + std::to_string(i % k));
  return c;
}

std::vector<std::string> singleton_clusters(int n) {
  std::vector<std::string> c;
  for (int i = 0; i < n; ++i) c.push_back("row" + std::to_string(i));
  return c;
}

}  // namespace

TEST_SUITE_BEGIN("glm");

TEST_CASE("ols reproduces an exact linear relationship") {
  const int n = 8;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i;
    y[i] = 1.0 + 2.0 * i;
  }
  auto fit = fit_ols(make_design({"const", "x"}, X, y, alternating_clusters(n)));
  CHECK(fit.coefficients[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.coefficients[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.se[1] == doctest::Approx(0.0));
  // Zero residual variance: a nonzero estimate is unambiguous, p collapses.
  CHECK(fit.p[1] == 0.0);
  CHECK(fit.n_obs == 8);
  CHECK(fit.n_clusters == 2);
  CHECK(fit.term("x") == 1);
  CHECK(fit.term("absent") == -1);
}

TEST_CASE("ols matches the normal equations on random designs") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 30, k = 4;
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      for (int j = 1; j < k; ++j) X(i, j) = g(rng);
      y[i] = g(rng);
    }
    auto fit = fit_ols(make_design({"const", "a", "b", "c"}, X, y,
                                   alternating_clusters(n, 5)));
    auto oracle = ols_normal_equations(X, y);
    CHECK((fit.coefficients - oracle).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("gaussian fixed effects absorb group constants") {
  // y = big per-group shift + 0.5 x, no intercept column: demeaning must
  // recover the slope exactly.
  const int n = 12;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  std::vector<std::string> group;
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double shift = (i % 3 == 0) ? 100.0 : (i % 3 == 1 ? -40.0 : 7.0);
    X(i, 0) = g(rng);
    y[i] = shift + 0.5 * X(i, 0);
    group.push_back("g" + std::to_string(i % 3));
  }
  auto fit = fit_ols(make_design({"x"}, X, y, alternating_clusters(n, 4), group));
  CHECK(fit.coefficients.size() == 1);
  CHECK(fit.coefficients[0] == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(fit.names == std::vector<std::string>{"x"});
}

TEST_CASE("poisson intercept-only equals the log mean") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd y(4);
  y << 2, 3, 4, 3;
  auto fit = fit_poisson(make_design({"const"}, X, y, alternating_clusters(4)));
  CHECK(fit.coefficients[0] == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(fit.family == Family::Poisson);
}

TEST_CASE("poisson matches a newton oracle on random designs") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 40;
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = g(rng);
      X(i, 2) = g(rng);
      double eta = 0.8 + 0.4 * X(i, 1) - 0.3 * X(i, 2);
      y[i] = std::poisson_distribution<int>(std::exp(eta))(rng);
    }
    auto fit = fit_poisson(make_design({"const", "a", "b"}, X, y,
                                       alternating_clusters(n, 6)));
    auto oracle = newton_glm(X, y, true);
    CHECK((fit.coefficients - oracle).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("logistic balanced outcome has zero intercept") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(10, 1);
  Eigen::VectorXd y(10);
  for (int i = 0; i < 10; ++i) y[i] = i < 5 ? 0.0 : 1.0;
  auto fit = fit_logistic(make_design({"const"}, X, y, alternating_clusters(10)));
  CHECK(std::abs(fit.coefficients[0]) < 1e-10);
}

TEST_CASE("logistic matches a newton oracle on random designs") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 60;
    Eigen::MatrixXd X(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = g(rng);
      X(i, 2) = g(rng);
      double eta = 0.2 + 0.5 * X(i, 1) - 0.4 * X(i, 2);
      y[i] = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    auto fit = fit_logistic(make_design({"const", "a", "b"}, X, y,
                                        alternating_clusters(n, 6)));
    auto oracle = newton_glm(X, y, false);
    CHECK((fit.coefficients - oracle).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("singleton clusters reduce to the het-robust estimator") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 40;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = g(rng);
    X(i, 2) = g(rng);
    y[i] = 1.0 + X(i, 1) + 0.5 * g(rng) * (1.0 + std::abs(X(i, 2)));
  }
  auto design = make_design({"const", "a", "b"}, X, y, singleton_clusters(n));
  auto fit = fit_ols(design);
  auto oracle = hc1_ols(X, y);
  double scale = oracle.cwiseAbs().maxCoeff();
  CHECK((fit.covariance - oracle).cwiseAbs().maxCoeff() / scale < 1e-10);
}

TEST_CASE("duplicated rows shift the covariance only via the correction") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 24, k = 2;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  std::vector<std::string> cluster;
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = g(rng);
    y[i] = 0.3 + 0.7 * X(i, 1) + g(rng);
    cluster.push_back("c" + std::to_string(i % 6));
  }
  auto base = fit_ols(make_design({"const", "x"}, X, y, cluster));

  Eigen::MatrixXd X2(2 * n, k);
  Eigen::VectorXd y2(2 * n);
  std::vector<std::string> cluster2;
  for (int i = 0; i < n; ++i) {
    X2.row(2 * i) = X.row(i);
    X2.row(2 * i + 1) = X.row(i);
    y2[2 * i] = y[i];
    y2[2 * i + 1] = y[i];
    cluster2.push_back(cluster[i]);
    cluster2.push_back(cluster[i]);
  }
  auto doubled = fit_ols(make_design({"const", "x"}, X2, y2, cluster2));
  CHECK((doubled.coefficients - base.coefficients).cwiseAbs().maxCoeff() < 1e-9);

  const double G = 6;
  auto correction = [&](double rows) {
    return G / (G - 1.0) * (rows - 1.0) / (rows - static_cast<double>(k));
  };
  double ratio = correction(2.0 * n) / correction(n);
  Eigen::MatrixXd expected = base.covariance * ratio;
  double scale = expected.cwiseAbs().maxCoeff();
  CHECK((doubled.covariance - expected).cwiseAbs().maxCoeff() / scale < 1e-9);
}

TEST_CASE("cluster relabeling and row order leave the fit alone") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 30;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  std::vector<std::string> cluster;
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = g(rng);
    y[i] = 1.0 - X(i, 1) + g(rng);
    cluster.push_back("c" + std::to_string(i % 5));
  }
  auto base = fit_ols(make_design({"const", "x"}, X, y, cluster));

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd Xp(n, 2);
  Eigen::VectorXd yp(n);
  std::vector<std::string> clusterp;
  for (int i = 0; i < n; ++i) {
    Xp.row(i) = X.row(perm[i]);
    yp[i] = y[perm[i]];
    clusterp.push_back("renamed_" + cluster[perm[i]]);
  }
  auto shuffled = fit_ols(make_design({"const", "x"}, Xp, yp, clusterp));
  CHECK((shuffled.coefficients - base.coefficients).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((shuffled.covariance - base.covariance).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(shuffled.n_clusters == base.n_clusters);
}

TEST_CASE("rank deficiency names the collinear columns") {
  Eigen::MatrixXd X(6, 3);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i;
    X(i, 2) = 1.0 + i;  // const + slope
    y[i] = i;
  }
  CHECK_THROWS_WITH_AS(
      fit_ols(make_design({"const", "slope", "dup"}, X, y, alternating_clusters(6))),
      doctest::Contains("collinear"), EstimationError);
}

TEST_CASE("perfect separation is detected and named") {
  Eigen::MatrixXd X(6, 2);
  Eigen::VectorXd y(6);
  double xs[] = {-3, -2, -1, 1, 2, 3};
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = xs[i];
    y[i] = xs[i] > 0 ? 1.0 : 0.0;
  }
  CHECK_THROWS_WITH_AS(
      fit_logistic(make_design({"const", "x"}, X, y, alternating_clusters(6))),
      doctest::Contains("separation"), EstimationError);
}

TEST_CASE("poisson overflow reports divergence") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(4, 1e200);
  CHECK_THROWS_WITH_AS(
      fit_poisson(make_design({"const"}, X, y, alternating_clusters(4))),
      doctest::Contains("diverged"), EstimationError);
}

TEST_CASE("input validation rejects malformed problems") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(4);

  auto short_y = make_design({"const"}, X, Eigen::VectorXd::Ones(3),
                             alternating_clusters(4));
  CHECK_THROWS_WITH_AS(fit_ols(short_y), doctest::Contains("mismatch"),
                       EstimationError);

  Eigen::VectorXd neg(4);
  neg << 1, 2, -1, 0;
  CHECK_THROWS_WITH_AS(
      fit_poisson(make_design({"const"}, X, neg, alternating_clusters(4))),
      doctest::Contains("non-negative"), EstimationError);

  Eigen::VectorXd frac(4);
  frac << 1, 2, 2.5, 0;
  CHECK_THROWS_AS(
      fit_poisson(make_design({"const"}, X, frac, alternating_clusters(4))),
      EstimationError);

  Eigen::VectorXd not01(4);
  not01 << 0, 1, 0.3, 1;
  CHECK_THROWS_WITH_AS(
      fit_logistic(make_design({"const"}, X, not01, alternating_clusters(4))),
      doctest::Contains("0/1"), EstimationError);

  Eigen::MatrixXd wide = Eigen::MatrixXd::Random(3, 5);
  CHECK_THROWS_WITH_AS(
      fit_ols(make_design({"a", "b", "c", "d", "e"}, wide, Eigen::VectorXd::Ones(3),
                          alternating_clusters(3))),
      doctest::Contains("more parameters"), EstimationError);

  std::vector<std::string> one_cluster(4, "only");
  CHECK_THROWS_WITH_AS(fit_ols(make_design({"const"}, X, y, one_cluster)),
                       doctest::Contains("at least 2 clusters"), EstimationError);
}

TEST_CASE("non-finite rows are dropped and counted") {
  Eigen::MatrixXd X(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i;
    y[i] = 2.0 * i;
  }
  y[2] = std::numeric_limits<double>::quiet_NaN();
  X(4, 1) = std::numeric_limits<double>::infinity();
  auto fit = fit_ols(make_design({"const", "x"}, X, y, alternating_clusters(6)));
  CHECK(fit.dropped_rows == 2);
  CHECK(fit.n_obs == 4);
  CHECK(fit.coefficients[1] == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("poisson fixed effects drop constant-zero groups") {
  // Groups: big (4 rows, varying counts), zero (3 rows, all-zero counts),
  // mid (2 rows). Reference should be the largest surviving group.
  const int n = 9;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  std::vector<std::string> group;
  double xs[] = {0.1, -0.2, 0.3, 0.5, 0.2, -0.1, 0.4, 0.0, -0.3};
  double ys[] = {2, 3, 1, 4, 0, 0, 0, 2, 5};
  const char* gs[] = {"big", "big", "big", "big", "zero", "zero", "zero", "mid", "mid"};
  for (int i = 0; i < n; ++i) {
    X(i, 0) = xs[i];
    y[i] = ys[i];
    group.push_back(gs[i]);
  }
  auto fit = fit_poisson(
      make_design({"x"}, X, y, alternating_clusters(n, 3), group));
  CHECK(fit.dropped_groups == 1);
  CHECK(fit.n_obs == 6);
  bool has_mid = false, has_big = false, has_zero = false;
  for (const auto& name : fit.names) {
    if (name == "fe:mid") has_mid = true;
    if (name == "fe:big") has_big = true;
    if (name == "fe:zero") has_zero = true;
  }
  CHECK(has_mid);
  CHECK_FALSE(has_big);   // reference group
  CHECK_FALSE(has_zero);  // dropped group
}

TEST_CASE("binomial fixed effects drop any constant group") {
  const int n = 8;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  std::vector<std::string> group;
  double xs[] = {0.5, -0.5, 1.0, -1.0, 0.3, -0.3, 0.8, -0.8};
  double ys[] = {1, 0, 0, 1, 1, 1, 0, 1};
  const char* gs[] = {"a", "a", "a", "a", "ones", "ones", "b", "b"};
  for (int i = 0; i < n; ++i) {
    X(i, 0) = xs[i];
    y[i] = ys[i];
    group.push_back(gs[i]);
  }
  auto fit = fit_logistic(
      make_design({"x"}, X, y, alternating_clusters(n, 4), group));
  CHECK(fit.dropped_groups == 1);
  CHECK(fit.n_obs == 6);
  for (const auto& name : fit.names) CHECK(name != "fe:ones");
}

TEST_CASE("percent transform and p values") {
  CHECK(percent_effect(0.0) == 0.0);
  CHECK(percent_effect(std::log(2.0)) == doctest::Approx(1.0));
  CHECK(percent_effect(0.3314) == doctest::Approx(0.393).epsilon(2e-3));
  CHECK(percent_effect(0.0354) == doctest::Approx(0.036).epsilon(2e-2));
  CHECK(percent_effect(-0.1) < 0.0);

  CHECK(normal_two_sided_p(0.0) == doctest::Approx(1.0));
  CHECK(normal_two_sided_p(1.959964) == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(normal_two_sided_p(-1.959964) == doctest::Approx(0.05).epsilon(1e-4));
  CHECK(normal_two_sided_p(5.0) < 1e-6);
}

TEST_CASE("confidence intervals bracket the estimate") {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> g(0.0, 1.0);
  const int n = 50;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = g(rng);
    y[i] = 0.4 + 0.9 * X(i, 1) + g(rng);
  }
  auto fit = fit_ols(make_design({"const", "x"}, X, y, alternating_clusters(n, 8)));
  for (int j = 0; j < 2; ++j) {
    CHECK(fit.ci_low[j] == doctest::Approx(fit.coefficients[j] - 1.96 * fit.se[j]));
    CHECK(fit.ci_high[j] == doctest::Approx(fit.coefficients[j] + 1.96 * fit.se[j]));
    CHECK(fit.ci_low[j] <= fit.coefficients[j]);
    CHECK(fit.coefficients[j] <= fit.ci_high[j]);
  }
}

TEST_CASE("cluster_robust rejects a mismatched design") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(6, 1);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) y[i] = i % 2;
  auto design = make_design({"const"}, X, y, alternating_clusters(6));
  auto fit = fit_ols(design);
  Eigen::MatrixXd X2 = Eigen::MatrixXd::Ones(6, 2);
  X2.col(1).setLinSpaced(6, 0, 5);
  auto other = make_design({"const", "x"}, X2, y, alternating_clusters(6));
  CHECK_THROWS_AS(cluster_robust(fit, other), EstimationError);
}

TEST_SUITE_END();
