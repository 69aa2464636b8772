#include "notekit/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace notekit {

std::ptrdiff_t FitResult::term(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return -1;
  return it - names.begin();
}

double percent_effect(double beta) { return std::expm1(beta); }

double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

namespace {

struct Prepared {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;
  std::vector<std::string> cluster;
  std::size_t k_dof = 0;  // parameters charged against N in the correction
  std::size_t dropped_rows = 0;
  std::size_t dropped_groups = 0;
};

void check_shape(const DesignMatrix& d) {
  const auto n = d.X.rows();
  if (d.y.size() != n) throw EstimationError("design outcome length mismatch");
  if (static_cast<Eigen::Index>(d.cluster.size()) != n)
    throw EstimationError("design cluster length mismatch");
  if (!d.group.empty() && static_cast<Eigen::Index>(d.group.size()) != n)
    throw EstimationError("design group length mismatch");
  if (static_cast<Eigen::Index>(d.names.size()) != d.X.cols())
    throw EstimationError("design column name count mismatch");
}

// Drops non-finite rows, then handles fixed effects: demeaning for gaussian,
// indicator block (largest group as reference, no-variation groups removed)
// for the exponential families.
Prepared prepare(const DesignMatrix& d, Family family) {
  check_shape(d);
  const Eigen::Index n = d.X.rows();
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    bool ok = std::isfinite(d.y[i]);
    for (Eigen::Index j = 0; ok && j < d.X.cols(); ++j)
      ok = std::isfinite(d.X(i, j));
    if (ok) keep.push_back(i);
  }

  Prepared p;
  p.dropped_rows = static_cast<std::size_t>(n) - keep.size();
  p.names = d.names;

  const bool has_fe = !d.group.empty();
  if (has_fe && family != Family::Gaussian) {
    // Inspect outcome variation per group; a constant-outcome group pins its
    // own fixed effect at an infinite value, so those rows are removed.
    std::map<std::string, std::pair<double, double>> range;  // min, max of y
    std::map<std::string, std::size_t> size;
    for (Eigen::Index i : keep) {
      const auto& g = d.group[static_cast<std::size_t>(i)];
      auto [it, inserted] = range.try_emplace(g, d.y[i], d.y[i]);
      if (!inserted) {
        it->second.first = std::min(it->second.first, d.y[i]);
        it->second.second = std::max(it->second.second, d.y[i]);
      }
      ++size[g];
    }
    std::set<std::string> degenerate;
    for (const auto& [g, mm] : range) {
      bool constant = mm.first == mm.second;
      bool bad = family == Family::Poisson ? (constant && mm.first == 0.0) : constant;
      if (bad) degenerate.insert(g);
    }
    if (!degenerate.empty()) {
      p.dropped_groups = degenerate.size();
      std::vector<Eigen::Index> filtered;
      for (Eigen::Index i : keep)
        if (!degenerate.count(d.group[static_cast<std::size_t>(i)]))
          filtered.push_back(i);
      keep.swap(filtered);
      for (const auto& g : degenerate) size.erase(g);
    }
    if (keep.empty()) throw EstimationError("no usable rows after filtering");

    std::string reference;
    std::size_t best = 0;
    for (const auto& [g, s] : size)
      if (s > best) { best = s; reference = g; }
    std::vector<std::string> indicator_groups;
    for (const auto& [g, s] : size)
      if (g != reference) indicator_groups.push_back(g);

    const auto rows = static_cast<Eigen::Index>(keep.size());
    const Eigen::Index base = d.X.cols();
    p.X.setZero(rows, base + static_cast<Eigen::Index>(indicator_groups.size()));
    p.y.resize(rows);
    p.cluster.resize(static_cast<std::size_t>(rows));
    std::map<std::string, Eigen::Index> col_of;
    for (std::size_t j = 0; j < indicator_groups.size(); ++j) {
      col_of[indicator_groups[j]] = base + static_cast<Eigen::Index>(j);
      p.names.push_back("fe:" + indicator_groups[j]);
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      Eigen::Index i = keep[static_cast<std::size_t>(r)];
      p.X.block(r, 0, 1, base) = d.X.row(i);
      const auto& g = d.group[static_cast<std::size_t>(i)];
      if (auto it = col_of.find(g); it != col_of.end()) p.X(r, it->second) = 1.0;
      p.y[r] = d.y[i];
      p.cluster[static_cast<std::size_t>(r)] = d.cluster[static_cast<std::size_t>(i)];
    }
    p.k_dof = static_cast<std::size_t>(p.X.cols());
    return p;
  }

  if (keep.empty()) throw EstimationError("no usable rows after filtering");
  const auto rows = static_cast<Eigen::Index>(keep.size());
  p.X.resize(rows, d.X.cols());
  p.y.resize(rows);
  p.cluster.resize(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index i = keep[static_cast<std::size_t>(r)];
    p.X.row(r) = d.X.row(i);
    p.y[r] = d.y[i];
    p.cluster[static_cast<std::size_t>(r)] = d.cluster[static_cast<std::size_t>(i)];
  }
  p.k_dof = static_cast<std::size_t>(p.X.cols());

  if (has_fe) {  // gaussian: absorb by within-group demeaning
    std::map<std::string, std::vector<Eigen::Index>> members;
    for (Eigen::Index r = 0; r < rows; ++r)
      members[d.group[static_cast<std::size_t>(keep[static_cast<std::size_t>(r)])]]
          .push_back(r);
    for (const auto& [g, idx] : members) {
      Eigen::RowVectorXd xmean = Eigen::RowVectorXd::Zero(p.X.cols());
      double ymean = 0.0;
      for (Eigen::Index r : idx) {
        xmean += p.X.row(r);
        ymean += p.y[r];
      }
      xmean /= static_cast<double>(idx.size());
      ymean /= static_cast<double>(idx.size());
      for (Eigen::Index r : idx) {
        p.X.row(r) -= xmean;
        p.y[r] -= ymean;
      }
    }
    p.k_dof += members.size();
  }
  return p;
}

void require_full_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() == X.cols()) return;
  std::ostringstream msg;
  msg << "rank-deficient design; collinear columns:";
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index j = qr.rank(); j < X.cols(); ++j)
    msg << ' ' << names[static_cast<std::size_t>(perm[j])];
  throw EstimationError(msg.str());
}

// c * bread * (sum over clusters of score-sum outer products) * bread.
Eigen::MatrixXd sandwich(const Eigen::MatrixXd& bread, const Eigen::MatrixXd& scores,
                         std::span<const std::string> cluster, std::size_t k_dof,
                         std::size_t* n_clusters_out) {
  std::map<std::string, Eigen::RowVectorXd> sums;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    auto [it, inserted] = sums.try_emplace(cluster[static_cast<std::size_t>(i)],
                                           scores.row(i));
    if (!inserted) it->second += scores.row(i);
  }
  const auto G = static_cast<double>(sums.size());
  if (sums.size() < 2)
    throw EstimationError("clustered covariance requires at least 2 clusters");
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(scores.cols(), scores.cols());
  for (const auto& [label, s] : sums) meat += s.transpose() * s;
  const auto N = static_cast<double>(scores.rows());
  const double denom = std::max(1.0, N - static_cast<double>(k_dof));
  const double c = G / (G - 1.0) * (N - 1.0) / denom;
  Eigen::MatrixXd cov = c * bread * meat * bread;
  if (n_clusters_out) *n_clusters_out = sums.size();
  return ((cov + cov.transpose()) / 2.0).eval();
}

void finish(FitResult& fit, const Eigen::MatrixXd& bread, const Eigen::MatrixXd& scores,
            const Prepared& p) {
  fit.covariance = sandwich(bread, scores, p.cluster, p.k_dof, &fit.n_clusters);
  const Eigen::Index k = fit.coefficients.size();
  fit.se.resize(k);
  fit.z.resize(k);
  fit.p.resize(k);
  fit.ci_low.resize(k);
  fit.ci_high.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double v = std::max(0.0, fit.covariance(j, j));
    double se = std::sqrt(v);
    double b = fit.coefficients[j];
    fit.se[j] = se;
    if (se > 0) {
      fit.z[j] = b / se;
      fit.p[j] = normal_two_sided_p(fit.z[j]);
    } else {
      fit.z[j] = 0.0;
      fit.p[j] = b == 0.0 ? 1.0 : 0.0;
    }
    fit.ci_low[j] = b - 1.96 * se;
    fit.ci_high[j] = b + 1.96 * se;
  }
  fit.names = p.names;
  fit.n_obs = static_cast<std::size_t>(p.X.rows());
  fit.dropped_rows = p.dropped_rows;
  fit.dropped_groups = p.dropped_groups;
}

// IRLS for the log and logit links; shared apart from the inverse link and
// variance function.
FitResult fit_irls(const DesignMatrix& design, Family family) {
  Prepared p = prepare(design, family);
  const Eigen::Index n = p.X.rows();
  const Eigen::Index k = p.X.cols();
  if (n <= k) throw EstimationError("more parameters than observations");
  require_full_rank(p.X, p.names);

  if (family == Family::Poisson) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (p.y[i] < 0 || p.y[i] != std::floor(p.y[i]))
        throw EstimationError("poisson outcome must be non-negative integers");
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      if (p.y[i] != 0.0 && p.y[i] != 1.0)
        throw EstimationError("binomial outcome must be 0/1");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  if (family == Family::Poisson) {
    double mean = std::max(p.y.mean(), 1e-8);
    for (Eigen::Index j = 0; j < k; ++j)
      if ((p.X.col(j).array() == 1.0).all()) { beta[j] = std::log(mean); break; }
  }

  std::vector<double> grad_trace;
  const int max_iter = 100;
  const double tol = 1e-8;
  Eigen::VectorXd eta(n), mu(n), w(n);
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    eta = p.X * beta;
    if (family == Family::Poisson) {
      if ((eta.array() > 300.0).any())
        throw EstimationError("poisson fit diverged: linear predictor overflow");
      mu = eta.array().exp();
      w = mu;
    } else {
      mu = (1.0 / (1.0 + (-eta.array()).exp()));
      w = mu.array() * (1.0 - mu.array());
    }
    Eigen::VectorXd score = p.X.transpose() * (p.y - mu);
    double gnorm = score.norm();
    grad_trace.push_back(gnorm);
    if (!std::isfinite(gnorm)) {
      std::ostringstream msg;
      msg << "non-finite score at iteration " << iter << "; gradient trace:";
      for (double g : grad_trace) msg << ' ' << g;
      throw EstimationError(msg.str());
    }
    if (gnorm < tol) break;

    if (family == Family::Binomial &&
        (beta.norm() > 1e4 || eta.array().abs().maxCoeff() > 30.0)) {
      Eigen::Index worst = 0;
      double best = -1.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        double spread = p.X.col(j).maxCoeff() - p.X.col(j).minCoeff();
        double scale = std::abs(beta[j]) * (spread > 0 ? spread : 1.0);
        if (spread > 0 && scale > best) { best = scale; worst = j; }
      }
      throw EstimationError("perfect separation suspected on column '" +
                            p.names[static_cast<std::size_t>(worst)] + "'");
    }

    Eigen::VectorXd wfloor = w.array().max(1e-10);
    Eigen::VectorXd zresp = eta + (p.y - mu).cwiseQuotient(wfloor);
    Eigen::MatrixXd xw = wfloor.cwiseSqrt().asDiagonal() * p.X;
    Eigen::VectorXd zw = wfloor.cwiseSqrt().asDiagonal() * zresp;
    beta = xw.colPivHouseholderQr().solve(zw);
  }
  if (iter == max_iter) {
    std::ostringstream msg;
    msg << "IRLS did not converge in " << max_iter << " iterations; gradient trace:";
    std::size_t from = grad_trace.size() > 10 ? grad_trace.size() - 10 : 0;
    for (std::size_t i = from; i < grad_trace.size(); ++i) msg << ' ' << grad_trace[i];
    throw EstimationError(msg.str());
  }

  eta = p.X * beta;
  double loglik = 0.0;
  if (family == Family::Poisson) {
    mu = eta.array().exp();
    w = mu;
    for (Eigen::Index i = 0; i < n; ++i)
      loglik += p.y[i] * eta[i] - mu[i] - std::lgamma(p.y[i] + 1.0);
  } else {
    mu = (1.0 / (1.0 + (-eta.array()).exp()));
    w = mu.array() * (1.0 - mu.array());
    for (Eigen::Index i = 0; i < n; ++i)
      loglik += p.y[i] * eta[i] - std::log1p(std::exp(eta[i]));
  }

  FitResult fit;
  fit.family = family;
  fit.coefficients = beta;
  fit.fit_metric = loglik;
  fit.iterations = iter;
  Eigen::MatrixXd xtwx = p.X.transpose() * w.asDiagonal() * p.X;
  Eigen::MatrixXd bread = xtwx.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd scores = p.X.array().colwise() * (p.y - mu).array();
  finish(fit, bread, scores, p);
  return fit;
}

}  // namespace

FitResult fit_ols(const DesignMatrix& design) {
  Prepared p = prepare(design, Family::Gaussian);
  const Eigen::Index n = p.X.rows();
  const Eigen::Index k = p.X.cols();
  if (n < k) throw EstimationError("more parameters than observations");
  require_full_rank(p.X, p.names);

  Eigen::VectorXd beta = p.X.colPivHouseholderQr().solve(p.y);
  Eigen::VectorXd resid = p.y - p.X * beta;

  FitResult fit;
  fit.family = Family::Gaussian;
  fit.coefficients = beta;
  fit.fit_metric = resid.squaredNorm();
  fit.iterations = 0;
  Eigen::MatrixXd bread =
      (p.X.transpose() * p.X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd scores = p.X.array().colwise() * resid.array();
  finish(fit, bread, scores, p);
  return fit;
}

FitResult fit_poisson(const DesignMatrix& design) { return fit_irls(design, Family::Poisson); }

FitResult fit_logistic(const DesignMatrix& design) { return fit_irls(design, Family::Binomial); }

Eigen::MatrixXd cluster_robust(const FitResult& fit, const DesignMatrix& design) {
  Prepared p = prepare(design, fit.family);
  if (p.X.cols() != fit.coefficients.size())
    throw EstimationError("fit does not match design");
  const Eigen::Index k = p.X.cols();
  Eigen::MatrixXd bread, scores;
  if (fit.family == Family::Gaussian) {
    Eigen::VectorXd resid = p.y - p.X * fit.coefficients;
    bread = (p.X.transpose() * p.X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    scores = p.X.array().colwise() * resid.array();
  } else {
    Eigen::VectorXd eta = p.X * fit.coefficients;
    Eigen::VectorXd mu, w;
    if (fit.family == Family::Poisson) {
      mu = eta.array().exp();
      w = mu;
    } else {
      mu = (1.0 / (1.0 + (-eta.array()).exp()));
      w = mu.array() * (1.0 - mu.array());
    }
    bread = (p.X.transpose() * w.asDiagonal() * p.X)
                .ldlt()
                .solve(Eigen::MatrixXd::Identity(k, k));
    scores = p.X.array().colwise() * (p.y - mu).array();
  }
  return sandwich(bread, scores, p.cluster, p.k_dof, nullptr);
}

}  // namespace notekit
