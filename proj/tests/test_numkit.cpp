#include <doctest.h>

#include <cmath>
#include <vector>

#include "hasod/errors.hpp"
#include "hasod/numkit.hpp"
#include "hasod/random.hpp"

using namespace hasod;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Plain Gauss-Jordan elimination with partial pivoting; independent of Eigen's solvers.
std::vector<double> eliminate(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j < n; ++j) a[r][j] -= f * a[c][j];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

Matrix random_matrix(RandomStream& s, Eigen::Index n, Eigen::Index p) {
  Matrix m(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = s.next_normal();
  return m;
}

double en_objective(double beta, double lambda, double alpha) {
  // X = [[1], [-1]], y = [2, -2]
  return (2 - beta) * (2 - beta) + (-2 + beta) * (-2 + beta) +
         lambda * (alpha * std::abs(beta) + (1 - alpha) * beta * beta);
}

}  // namespace

TEST_CASE("elastic net worked examples") {
  CHECK(elastic_net_fit(col({1, -1}), vec({0, 0}), 0.01, 0.5).values(0) == doctest::Approx(0.0));
  CHECK(elastic_net_fit(col({1, -1}), vec({2, -2}), 0.0, 0.5).values(0) == doctest::Approx(2.0).epsilon(1e-12));

  // Grid-search oracle for the lambda = 1 case.
  double best_beta = 0.0;
  double best_value = INFINITY;
  for (int i = -500000; i <= 500000; ++i) {
    const double b = i * 1e-5;
    const double v = en_objective(b, 1.0, 0.5);
    if (v < best_value) {
      best_value = v;
      best_beta = b;
    }
  }
  CHECK(best_beta == doctest::Approx(1.5).epsilon(1e-5));
  CHECK(elastic_net_fit(col({1, -1}), vec({2, -2}), 1.0, 0.5).values(0) == doctest::Approx(best_beta).epsilon(1e-5));
  CHECK(elastic_net_fit(col({1, -1}), vec({2, -2}), 1.0, 0.5).values(0) == doctest::Approx(1.5).epsilon(1e-10));
}

TEST_CASE("elastic net errors") {
  CHECK_THROWS_AS(elastic_net_fit(col({1}), vec({1}), 0.1, 0.5), Error);
  Matrix bad = col({1, NAN});
  try {
    elastic_net_fit(bad, vec({1, 2}), 0.1, 0.5);
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFinite);
  }
  try {
    elastic_net_fit(col({1}), vec({1}), 0.1, 0.5);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Degenerate);
  }
}

TEST_CASE("elastic net satisfies KKT conditions") {
  RandomStream s(7);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix X = random_matrix(s, 15, 8);
    Vector y = random_matrix(s, 15, 1).col(0) * 2.0;
    y(0) += 5.0;
    const double lambda = 0.5 + rep;
    const double alpha = 0.5;
    const Coefficients fit = elastic_net_fit(X, y, lambda, alpha);
    const Vector r = (y.array() - y.mean()).matrix() - X * fit.values;
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double g = -2.0 * X.col(j).dot(r) + 2.0 * lambda * (1 - alpha) * fit.values(j);
      if (fit.values(j) != 0.0) {
        CHECK(std::abs(g + lambda * alpha * (fit.values(j) > 0 ? 1.0 : -1.0)) < 1e-6);
      } else {
        CHECK(std::abs(g) <= lambda * alpha + 1e-6);
      }
    }
  }
}

TEST_CASE("elastic net with alpha = 0 matches ridge") {
  RandomStream s(11);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix X = random_matrix(s, 12, 4);
    const Vector y = random_matrix(s, 12, 1).col(0);
    const double lambda = 0.3 * (rep + 1);
    const Vector en = elastic_net_fit(X, y, lambda, 0.0).values;
    const Vector rr = ridge_fit_with_se(X, y, lambda).first.values;
    CHECK((en - rr).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("ridge worked examples") {
  auto [coef, diag] = ridge_fit_with_se(col({1, -1}), vec({1, -1}), 0.1);
  // Closed form: beta = 2 / 2.1, residual +-(1 - beta), mse = (1 - beta)^2, se = sqrt(mse / 2.1).
  const double beta = 2.0 / 2.1;
  const double mse = (1.0 - beta) * (1.0 - beta);
  CHECK(coef.values(0) == doctest::Approx(beta).epsilon(1e-12));
  CHECK(coef.values(0) == doctest::Approx(0.952381).epsilon(1e-6));
  CHECK(diag.mse == doctest::Approx(mse).epsilon(1e-12));
  CHECK(diag.se(0) == doctest::Approx(std::sqrt(mse / 2.1)).epsilon(1e-12));
  CHECK(diag.se(0) == doctest::Approx(0.032861).epsilon(1e-5));

  RandomStream s(3);
  const Matrix X = random_matrix(s, 9, 3);
  auto [zc, zd] = ridge_fit_with_se(X, Vector::Zero(9), 0.5);
  CHECK(zc.values.isZero());
  CHECK(zd.mse == 0.0);
  CHECK(zd.se.isZero());
  CHECK(zd.snr == 0.0);

  auto [big, bd] = ridge_fit_with_se(col({1, -1}), vec({2, -2}), 1e9);
  CHECK(std::abs(big.values(0)) < 1e-8);
}

TEST_CASE("ridge matches an independent elimination solve") {
  RandomStream s(5);
  for (int rep = 0; rep < 25; ++rep) {
    const Matrix X = random_matrix(s, 10, 5);
    const Vector y = random_matrix(s, 10, 1).col(0);
    const double lambda = 0.1;
    const Vector yc = y.array() - y.mean();
    std::vector<std::vector<double>> a(5, std::vector<double>(5));
    std::vector<double> b(5);
    for (int i = 0; i < 5; ++i) {
      for (int j = 0; j < 5; ++j) a[i][j] = X.col(i).dot(X.col(j)) + (i == j ? lambda : 0.0);
      b[i] = X.col(i).dot(yc);
    }
    const auto oracle = eliminate(a, b);
    const Vector beta = ridge_fit_with_se(X, y, lambda).first.values;
    for (int i = 0; i < 5; ++i) CHECK(std::abs(beta(i) - oracle[i]) < 1e-8);
  }
}

TEST_CASE("ridge diagnostics use divisor n") {
  RandomStream s(9);
  const Matrix X = random_matrix(s, 8, 2);
  const Vector y = random_matrix(s, 8, 1).col(0);
  auto [coef, diag] = ridge_fit_with_se(X, y, 0.2);
  const Vector fitted = X * coef.values;
  const Vector resid = (y.array() - y.mean()).matrix() - fitted;
  CHECK(diag.mse == doctest::Approx(resid.squaredNorm() / 8.0));
  const double var = (fitted.array() - fitted.mean()).square().sum() / 8.0;
  CHECK(diag.snr == doctest::Approx(var / diag.mse));
}

TEST_CASE("welch t-test") {
  const std::vector<double> same{1, 2, 3};
  auto r = welch_t_test(same, same);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);

  const std::vector<double> two{1, 2};
  r = welch_t_test(two, two);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);

  // Reference values from scipy.stats.ttest_ind(equal_var=False).
  const std::vector<double> hi{10, 10.1, 9.9};
  const std::vector<double> lo{0, 0.1, -0.1};
  r = welch_t_test(hi, lo);
  CHECK(r.p < 0.001);
  CHECK(r.t == doctest::Approx(122.47448713915912).epsilon(1e-10));
  CHECK(r.df == doctest::Approx(4.0));
  CHECK(r.p == doctest::Approx(2.6654818961635828e-08).epsilon(1e-6));

  const std::vector<double> a{1.2, 3.4, 2.2, 5.1, 4.0};
  const std::vector<double> b{2.0, 2.5, 1.1, 0.3};
  r = welch_t_test(a, b);
  CHECK(r.t == doctest::Approx(2.0354068131408005).epsilon(1e-10));
  CHECK(r.df == doctest::Approx(6.773952650033726).epsilon(1e-10));
  CHECK(r.p == doctest::Approx(0.08261073821372564).epsilon(1e-8));

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(welch_t_test(one, a), Error);
}

TEST_CASE("welch t-test is antisymmetric") {
  RandomStream s(21);
  for (int rep = 0; rep < 30; ++rep) {
    std::vector<double> a(2 + s.next_index(8)), b(2 + s.next_index(8));
    for (auto& v : a) v = s.next_normal();
    for (auto& v : b) v = s.next_normal() + 0.5;
    const auto ab = welch_t_test(a, b);
    const auto ba = welch_t_test(b, a);
    CHECK(ab.t == doctest::Approx(-ba.t));
    CHECK(ab.p == doctest::Approx(ba.p));
    CHECK(ab.p >= 0.0);
    CHECK(ab.p <= 1.0);
  }
}

TEST_CASE("order statistics") {
  const std::vector<double> v{6, 1, 5, 2, 4, 3};
  CHECK(percentile(v, 0.6) == doctest::Approx(4.0));
  CHECK(median(v) == doctest::Approx(3.5));
  const std::vector<double> single{2.5};
  CHECK(percentile(single, 0.6) == 2.5);
}
