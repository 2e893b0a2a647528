#include "hasod/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "hasod/errors.hpp"

namespace hasod {
namespace {

void check_problem(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) {
    throw Error(ErrorCode::InvalidArgument, "model matrix rows do not match response length");
  }
  if (X.rows() < 2) throw Error(ErrorCode::Degenerate, "need at least two observations");
  if (X.cols() < 1) throw Error(ErrorCode::InvalidArgument, "model matrix has no columns");
  require_finite(X, "model matrix");
  require_finite(y, "response");
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

}  // namespace

void require_finite(const Matrix& X, const char* what) {
  if (!X.allFinite()) throw Error(ErrorCode::NonFinite, std::string(what) + " has non-finite entries");
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorCode::NonFinite, std::string(what) + " has non-finite entries");
}

Coefficients elastic_net_fit(const Matrix& X, const Vector& y, double lambda, double alpha,
                             const ElasticNetOptions& options) {
  check_problem(X, y);
  if (!(lambda >= 0.0) || !(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0 and alpha in [0, 1]");
  }
  const Eigen::Index p = X.cols();
  const double y_mean = y.mean();
  Vector residual = y.array() - y_mean;
  Vector beta = Vector::Zero(p);
  const Vector col_sq = X.colwise().squaredNorm().transpose();
  const double l1 = 0.5 * lambda * alpha;
  const double l2 = lambda * (1.0 - alpha);

  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double denom = col_sq(j) + l2;
      if (denom <= 0.0) continue;
      const double old = beta(j);
      const double rho = X.col(j).dot(residual) + col_sq(j) * old;
      const double updated = soft_threshold(rho, l1) / denom;
      const double delta = updated - old;
      if (delta != 0.0) {
        residual.noalias() -= delta * X.col(j);
        beta(j) = updated;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < options.tol) break;
  }
  return {std::move(beta), y_mean};
}

RegressionDiagnostics ridge_diagnostics(const Matrix& X, const Vector& y, const Vector& beta,
                                        double lambda) {
  check_problem(X, y);
  const double n = static_cast<double>(X.rows());
  const Vector centered = y.array() - y.mean();
  const Vector fitted = X * beta;
  const double mse = (centered - fitted).squaredNorm() / n;

  Matrix normal = X.transpose() * X;
  normal.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success || llt.rcond() < std::numeric_limits<double>::epsilon()) {
    throw Error(ErrorCode::SolveFailure, "regularized normal matrix is numerically singular");
  }
  const Matrix inverse = llt.solve(Matrix::Identity(X.cols(), X.cols()));

  RegressionDiagnostics out;
  out.mse = mse;
  out.se = (mse * inverse.diagonal().array()).max(0.0).sqrt();
  const double signal = population_variance(std::span<const double>(fitted.data(), fitted.size()));
  if (signal <= 0.0) {
    out.snr = 0.0;
  } else {
    out.snr = signal / std::max(mse, std::numeric_limits<double>::min());
  }
  return out;
}

std::pair<Coefficients, RegressionDiagnostics> ridge_fit_with_se(const Matrix& X, const Vector& y,
                                                                 double lambda) {
  check_problem(X, y);
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "ridge lambda must be positive");
  Matrix normal = X.transpose() * X;
  normal.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(normal);
  if (llt.info() != Eigen::Success || llt.rcond() < std::numeric_limits<double>::epsilon()) {
    throw Error(ErrorCode::SolveFailure, "regularized normal matrix is numerically singular");
  }
  const double y_mean = y.mean();
  const Vector centered = y.array() - y_mean;
  Vector beta = llt.solve(X.transpose() * centered);
  RegressionDiagnostics diag = ridge_diagnostics(X, y, beta, lambda);
  return {Coefficients{std::move(beta), y_mean}, std::move(diag)};
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorCode::Degenerate, "Welch t-test needs at least two values per sample");
  }
  for (double v : a) if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "sample a");
  for (double v : b) if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "sample b");

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a);
  const double mb = mean(b);
  // Sample variances (n - 1).
  const double va = population_variance(a) * na / (na - 1.0);
  const double vb = population_variance(b) * nb / (nb - 1.0);
  const double qa = va / na;
  const double qb = vb / nb;
  const double se2 = qa + qb;

  TTestResult out;
  if (se2 == 0.0) {
    out.df = na + nb - 2.0;
    if (ma == mb) {
      out.t = 0.0;
      out.p = 1.0;
    } else {
      out.t = ma > mb ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
      out.p = 0.0;
    }
    return out;
  }
  out.t = (ma - mb) / std::sqrt(se2);
  out.df = se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  boost::math::students_t dist(out.df);
  out.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t))), 0.0, 1.0);
  return out;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_variance(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean(values);
  double acc = 0.0;
  for (double v : values) acc += (v - m) * (v - m);
  return acc / static_cast<double>(values.size());
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "percentile of empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double median(std::span<const double> values) { return percentile(values, 0.5); }

}  // namespace hasod
