#pragma once

#include <cstddef>
#include <vector>

#include "hasod/numkit.hpp"
#include "hasod/random.hpp"

namespace hasod {

struct KernelParams {
  double sigma_f2 = 1.0;  // signal variance
  double ell = 1.0;       // isotropic length-scale
  double sigma_n2 = 1e-6; // observation noise variance
};

struct GPBounds {
  double lower = 1e-4;
  double upper = 1e4;
  double noise_floor = 1e-6;  // lower bound of sigma_n2
};

struct GPFitOptions {
  int restarts = 20;
  int max_iterations = 200;
  GPBounds bounds;
};

// Matern nu = 5/2 covariance at distance r.
double matern52(double r, const KernelParams& params);
double matern52_kernel(const Vector& x, const Vector& x2, const KernelParams& params);

struct GPModel {
  KernelParams params;
  Matrix train_x;
  Vector train_y;  // centered
  double y_mean = 0.0;
  Matrix chol;     // lower factor of K + (sigma_n2 + jitter) I
  Vector alpha;    // (K + sigma_n2 I)^-1 train_y
  double jitter = 0.0;
  double log_likelihood = 0.0;
  bool variance_only = false;
};

struct GPPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Log marginal likelihood of centered targets under `params`; -inf when the
// kernel matrix cannot be factorized even with jitter.
double log_marginal_likelihood(const Matrix& X, const Vector& y_centered, const KernelParams& params);

// Builds the posterior at fixed hyperparameters.
GPModel gp_condition(const Matrix& X, const Vector& y, const KernelParams& params);

// Maximizes the log marginal likelihood over (log sigma_f2, log ell, log sigma_n2)
// by projected gradient ascent from `restarts` log-uniform starting points; the
// best restart wins, lowest restart index on ties.
GPModel gp_fit(const Matrix& X, const Vector& y, RandomStream& stream, const GPFitOptions& options = {});

// Converged log likelihood of every restart, in restart order (diagnostics and tests).
std::vector<double> gp_restart_likelihoods(const Matrix& X, const Vector& y, RandomStream& stream,
                                           const GPFitOptions& options = {});

GPPrediction gp_predict(const GPModel& model, const Vector& x);
double gp_mean(const GPModel& model, const Vector& x);
double gp_variance(const GPModel& model, const Vector& x);

// Posterior variance after observing `new_x` with unknown responses. The
// returned model answers variance queries only.
GPModel condition_on_points(const GPModel& model, const Matrix& new_x);

}  // namespace hasod
