#include "hasod/surrogate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "hasod/errors.hpp"

namespace hasod {
namespace {

const double kSqrt5 = std::sqrt(5.0);
constexpr std::array<double, 8> kJitterLadder{0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4};

Matrix pairwise_distances(const Matrix& X) {
  const Eigen::Index n = X.rows();
  Matrix r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (X.row(i) - X.row(j)).norm();
      r(i, j) = d;
      r(j, i) = d;
    }
  }
  return r;
}

Matrix kernel_from_distances(const Matrix& r, const KernelParams& p) {
  return r.unaryExpr([&p](double d) { return matern52(d, p); });
}

// Factorizes K + (sigma_n2 + jitter) I, escalating jitter on failure.
bool factorize(const Matrix& kf, double sigma_n2, Eigen::LLT<Matrix>& llt, double& jitter) {
  for (double j : kJitterLadder) {
    Matrix k = kf;
    k.diagonal().array() += sigma_n2 + j;
    llt.compute(k);
    if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) {
      jitter = j;
      return true;
    }
  }
  return false;
}

using Theta = Eigen::Vector3d;  // log sigma_f2, log ell, log sigma_n2

KernelParams from_theta(const Theta& t) { return {std::exp(t(0)), std::exp(t(1)), std::exp(t(2))}; }

struct LikelihoodEval {
  double value = -std::numeric_limits<double>::infinity();
  Theta grad = Theta::Zero();
};

class LikelihoodSurface {
 public:
  LikelihoodSurface(const Matrix& X, const Vector& y) : r_(pairwise_distances(X)), y_(y) {}

  LikelihoodEval evaluate(const Theta& theta, bool with_gradient) const {
    const KernelParams p = from_theta(theta);
    LikelihoodEval out;
    const Matrix kf = kernel_from_distances(r_, p);
    Eigen::LLT<Matrix> llt;
    double jitter = 0.0;
    if (!factorize(kf, p.sigma_n2, llt, jitter)) return out;
    const Vector alpha = llt.solve(y_);
    const double n = static_cast<double>(y_.size());
    const Matrix L = llt.matrixL();
    out.value = -0.5 * y_.dot(alpha) - L.diagonal().array().log().sum() -
                0.5 * n * std::log(2.0 * std::numbers::pi);
    if (!with_gradient) return out;

    const Matrix kinv = llt.solve(Matrix::Identity(r_.rows(), r_.cols()));
    const Matrix w = alpha * alpha.transpose() - kinv;
    const Matrix dell = r_.unaryExpr([&p](double d) {
      const double a = kSqrt5 * d / p.ell;
      return p.sigma_f2 * a * a * (1.0 + a) / 3.0 * std::exp(-a);
    });
    out.grad(0) = 0.5 * w.cwiseProduct(kf).sum();
    out.grad(1) = 0.5 * w.cwiseProduct(dell).sum();
    out.grad(2) = 0.5 * p.sigma_n2 * w.trace();
    return out;
  }

 private:
  Matrix r_;
  Vector y_;
};

struct Box {
  Theta lo;
  Theta hi;
  Theta clamp(const Theta& t) const { return t.cwiseMax(lo).cwiseMin(hi); }
};

// Projected quasi-Newton (BFGS) ascent; components pinned at a bound with the
// gradient pointing outward are frozen for the step.
std::pair<Theta, double> ascend(const LikelihoodSurface& surface, Theta theta, const Box& box,
                                int max_iterations) {
  theta = box.clamp(theta);
  LikelihoodEval cur = surface.evaluate(theta, true);
  if (!std::isfinite(cur.value)) return {theta, cur.value};
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
  for (int it = 0; it < max_iterations; ++it) {
    Theta g = cur.grad;
    for (int c = 0; c < 3; ++c) {
      if ((theta(c) <= box.lo(c) && g(c) < 0.0) || (theta(c) >= box.hi(c) && g(c) > 0.0)) g(c) = 0.0;
    }
    if (g.norm() < 1e-8) break;
    Theta dir = H * g;
    for (int c = 0; c < 3; ++c) {
      if (g(c) == 0.0) dir(c) = 0.0;
    }
    if (dir.dot(g) <= 0.0) {
      H.setIdentity();
      dir = g;
    }
    // Keep the first trial step at most a few log-units long.
    double step = std::min(1.0, 3.0 / std::max(dir.norm(), 1e-300));
    bool moved = false;
    Theta next;
    LikelihoodEval trial;
    for (int ls = 0; ls < 40; ++ls) {
      next = box.clamp(theta + step * dir);
      trial = surface.evaluate(next, false);
      if (std::isfinite(trial.value) && trial.value >= cur.value + 1e-4 * g.dot(next - theta)) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    trial = surface.evaluate(next, true);
    const Theta s = next - theta;
    const Theta yv = cur.grad - trial.grad;  // gradient change of the minimized -L
    const double improvement = trial.value - cur.value;
    theta = next;
    const LikelihoodEval prev = cur;
    cur = trial;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    if (improvement < 1e-12 * (1.0 + std::abs(prev.value)) || s.norm() < 1e-10) break;
  }
  return {theta, cur.value};
}

Box make_box(const GPBounds& b) {
  Box box;
  box.lo << std::log(b.lower), std::log(b.lower), std::log(b.noise_floor);
  box.hi << std::log(b.upper), std::log(b.upper), std::log(b.upper);
  return box;
}

void check_training(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) throw Error(ErrorCode::InvalidArgument, "GP inputs and targets differ in size");
  if (X.rows() < 3) throw Error(ErrorCode::Degenerate, "GP fitting needs at least three points");
  require_finite(X, "GP inputs");
  require_finite(y, "GP targets");
}

struct RestartResult {
  Theta theta;
  double value;
};

std::vector<RestartResult> run_restarts(const Matrix& X, const Vector& y, RandomStream& stream,
                                        const GPFitOptions& options) {
  check_training(X, y);
  const Vector centered = y.array() - y.mean();
  const LikelihoodSurface surface(X, centered);
  const Box box = make_box(options.bounds);
  std::vector<RestartResult> results;
  for (int r = 0; r < options.restarts; ++r) {
    RandomStream restart_stream = stream.child(static_cast<std::uint64_t>(r));
    Theta start;
    for (int c = 0; c < 3; ++c) start(c) = box.lo(c) + (box.hi(c) - box.lo(c)) * restart_stream.next_uniform();
    auto [theta, value] = ascend(surface, start, box, options.max_iterations);
    results.push_back({theta, value});
  }
  return results;
}

}  // namespace

double matern52(double r, const KernelParams& p) {
  const double a = kSqrt5 * r / p.ell;
  return p.sigma_f2 * (1.0 + a + a * a / 3.0) * std::exp(-a);
}

double matern52_kernel(const Vector& x, const Vector& x2, const KernelParams& params) {
  return matern52((x - x2).norm(), params);
}

double log_marginal_likelihood(const Matrix& X, const Vector& y_centered, const KernelParams& params) {
  const LikelihoodSurface surface(X, y_centered);
  Theta t(std::log(params.sigma_f2), std::log(params.ell), std::log(params.sigma_n2));
  return surface.evaluate(t, false).value;
}

GPModel gp_condition(const Matrix& X, const Vector& y, const KernelParams& params) {
  if (X.rows() != y.size()) throw Error(ErrorCode::InvalidArgument, "GP inputs and targets differ in size");
  GPModel model;
  model.params = params;
  model.train_x = X;
  model.y_mean = y.size() > 0 ? y.mean() : 0.0;
  model.train_y = y.array() - model.y_mean;
  const Matrix kf = kernel_from_distances(pairwise_distances(X), params);
  Eigen::LLT<Matrix> llt;
  if (!factorize(kf, params.sigma_n2, llt, model.jitter)) {
    throw Error(ErrorCode::FitFailure, "kernel matrix is not factorizable");
  }
  model.chol = llt.matrixL();
  model.alpha = llt.solve(model.train_y);
  const double n = static_cast<double>(y.size());
  model.log_likelihood = -0.5 * model.train_y.dot(model.alpha) -
                         model.chol.diagonal().array().log().sum() -
                         0.5 * n * std::log(2.0 * std::numbers::pi);
  return model;
}

std::vector<double> gp_restart_likelihoods(const Matrix& X, const Vector& y, RandomStream& stream,
                                           const GPFitOptions& options) {
  std::vector<double> out;
  for (const auto& r : run_restarts(X, y, stream, options)) out.push_back(r.value);
  return out;
}

GPModel gp_fit(const Matrix& X, const Vector& y, RandomStream& stream, const GPFitOptions& options) {
  const auto results = run_restarts(X, y, stream, options);
  const RestartResult* best = nullptr;
  for (const auto& r : results) {
    if (std::isfinite(r.value) && (best == nullptr || r.value > best->value)) best = &r;
  }
  if (best == nullptr) throw Error(ErrorCode::FitFailure, "every restart failed to factorize the kernel");
  return gp_condition(X, y, from_theta(best->theta));
}

namespace {

Vector cross_kernel(const GPModel& model, const Vector& x) {
  Vector k(model.train_x.rows());
  for (Eigen::Index i = 0; i < model.train_x.rows(); ++i) {
    k(i) = matern52((model.train_x.row(i).transpose() - x).norm(), model.params);
  }
  return k;
}

}  // namespace

double gp_variance(const GPModel& model, const Vector& x) {
  if (x.size() != model.train_x.cols()) throw Error(ErrorCode::InvalidArgument, "query dimension mismatch");
  const double prior = model.params.sigma_f2;
  if (model.train_x.rows() == 0) return prior;
  const Vector k = cross_kernel(model, x);
  const Vector v = model.chol.triangularView<Eigen::Lower>().solve(k);
  return std::clamp(prior - v.squaredNorm(), 0.0, prior + model.params.sigma_n2);
}

double gp_mean(const GPModel& model, const Vector& x) {
  if (model.variance_only) {
    throw Error(ErrorCode::MeanQueryOnVarianceOnlyModel, "model was conditioned on inputs without responses");
  }
  if (x.size() != model.train_x.cols()) throw Error(ErrorCode::InvalidArgument, "query dimension mismatch");
  if (model.train_x.rows() == 0) return model.y_mean;
  return model.y_mean + cross_kernel(model, x).dot(model.alpha);
}

GPPrediction gp_predict(const GPModel& model, const Vector& x) {
  return {gp_mean(model, x), gp_variance(model, x)};
}

GPModel condition_on_points(const GPModel& model, const Matrix& new_x) {
  if (new_x.rows() == 0) {
    GPModel copy = model;
    copy.variance_only = true;
    return copy;
  }
  if (new_x.cols() != model.train_x.cols()) throw Error(ErrorCode::InvalidArgument, "dimension mismatch");
  Matrix X(model.train_x.rows() + new_x.rows(), model.train_x.cols());
  X.topRows(model.train_x.rows()) = model.train_x;
  X.bottomRows(new_x.rows()) = new_x;
  GPModel out = gp_condition(X, Vector::Zero(X.rows()), model.params);
  out.variance_only = true;
  out.alpha = Vector();
  return out;
}

}  // namespace hasod
