#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hasod {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Effect estimates for the columns of a model matrix. Fits are run on the
// centered response, so `intercept` is the response mean.
struct Coefficients {
  Vector values;
  double intercept = 0.0;
};

struct RegressionDiagnostics {
  double mse = 0.0;
  Vector se;
  double snr = 0.0;
};

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

struct ElasticNetOptions {
  double tol = 1e-8;      // max absolute coordinate change per sweep
  int max_sweeps = 10000;
};

// Minimizes ||y - X b||^2 + lambda * (alpha * |b|_1 + (1 - alpha) * |b|_2^2)
// by cyclic coordinate descent on the centered response. Neither term is
// rescaled by 1/n.
Coefficients elastic_net_fit(const Matrix& X, const Vector& y, double lambda, double alpha,
                             const ElasticNetOptions& options = {});

// MSE (divisor n), ridge standard errors sqrt(mse * [(X'X + lambda I)^-1]_ii) and
// SNR = PopVar(X b) / mse, evaluated at arbitrary coefficients `beta`.
RegressionDiagnostics ridge_diagnostics(const Matrix& X, const Vector& y, const Vector& beta,
                                        double lambda);

std::pair<Coefficients, RegressionDiagnostics> ridge_fit_with_se(const Matrix& X,
                                                                 const Vector& y,
                                                                 double lambda);

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> values);
double population_variance(std::span<const double> values);
// Sorted linear interpolation at 0-based index p * (m - 1), p in [0, 1].
double percentile(std::span<const double> values, double p);
double median(std::span<const double> values);

void require_finite(const Matrix& X, const char* what);
void require_finite(const Vector& v, const char* what);

}  // namespace hasod
