#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace notekit {

struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Family { Gaussian, Poisson, Binomial };

// One regression problem. `cluster` drives the robust covariance; `group`,
// when non-empty, adds a fixed effect per label (absorbed by demeaning for
// gaussian fits, indicator block with the largest group as reference
// otherwise). Rows with non-finite values are dropped and counted.
struct DesignMatrix {
  std::vector<std::string> names;    // one per column of X
  Eigen::MatrixXd X;                 // n x k
  Eigen::VectorXd y;                 // n
  std::vector<std::string> cluster;  // n labels
  std::vector<std::string> group;    // n labels or empty
};

struct FitResult {
  Family family = Family::Gaussian;
  std::vector<std::string> names;  // reported columns, fixed effects included
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;  // cluster-robust
  Eigen::VectorXd se;
  Eigen::VectorXd z;
  Eigen::VectorXd p;
  Eigen::VectorXd ci_low;   // estimate - 1.96 se
  Eigen::VectorXd ci_high;  // estimate + 1.96 se
  std::size_t n_obs = 0;
  std::size_t n_clusters = 0;
  double fit_metric = 0.0;  // SSR for gaussian, log-likelihood otherwise
  int iterations = 0;
  std::size_t dropped_rows = 0;    // non-finite rows removed
  std::size_t dropped_groups = 0;  // no-variation fixed-effect groups removed

  std::ptrdiff_t term(const std::string& name) const;  // -1 when absent
};

FitResult fit_ols(const DesignMatrix& design);
FitResult fit_poisson(const DesignMatrix& design);
FitResult fit_logistic(const DesignMatrix& design);

// Sandwich covariance with the G/(G-1) * (N-1)/(N-K) correction, recomputed
// from a converged fit. With every row its own cluster this is the plain
// heteroskedasticity-robust estimator.
Eigen::MatrixXd cluster_robust(const FitResult& fit, const DesignMatrix& design);

double percent_effect(double beta);        // exp(beta) - 1
double normal_two_sided_p(double z);

}  // namespace notekit
