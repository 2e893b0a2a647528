#include <doctest.h>

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

#include "hasod/bench.hpp"
#include "hasod/errors.hpp"

using namespace hasod;

namespace {

// Exact maximum of a quadratic over the cube: every optimum is a stationary
// point of the objective restricted to some face, so enumerate all 3^k faces.
TrueOptimum face_enumeration(const ScenarioTruth& t) {
  const auto k = static_cast<Eigen::Index>(t.k);
  Matrix Q = Matrix::Zero(k, k);
  for (const auto& q : t.quadratics) Q(q.i, q.i) += q.coeff;
  for (const auto& it : t.interactions) {
    Q(it.i, it.j) += it.coeff / 2;
    Q(it.j, it.i) += it.coeff / 2;
  }
  TrueOptimum best{Vector::Zero(k), -INFINITY};
  std::size_t faces = 1;
  for (Eigen::Index i = 0; i < k; ++i) faces *= 3;
  for (std::size_t code = 0; code < faces; ++code) {
    Vector x = Vector::Zero(k);
    std::vector<Eigen::Index> free;
    std::size_t c = code;
    for (Eigen::Index i = 0; i < k; ++i, c /= 3) {
      if (c % 3 == 2) free.push_back(i);
      else x(i) = c % 3 == 0 ? -1.0 : 1.0;
    }
    if (!free.empty()) {
      const auto m = static_cast<Eigen::Index>(free.size());
      Matrix A(m, m);
      Vector rhs(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        double r = -t.main_coeffs(free[a]);
        for (Eigen::Index j = 0; j < k; ++j) {
          if (std::find(free.begin(), free.end(), j) == free.end()) r -= 2 * Q(free[a], j) * x(j);
        }
        rhs(a) = r;
        for (Eigen::Index b = 0; b < m; ++b) A(a, b) = 2 * Q(free[a], free[b]);
      }
      Eigen::FullPivLU<Matrix> lu(A);
      if (!lu.isInvertible()) continue;
      const Vector xf = lu.solve(rhs);
      bool inside = true;
      for (Eigen::Index a = 0; a < m; ++a) {
        inside = inside && std::abs(xf(a)) <= 1.0;
        x(free[a]) = xf(a);
      }
      if (!inside) continue;
    }
    const double v = t.mean(x);
    if (v > best.y_true) best = {x, v};
  }
  return best;
}

Metrics fake(std::string method, std::string scenario, std::uint64_t seed, double da) {
  Metrics m;
  m.method = std::move(method);
  m.scenario = std::move(scenario);
  m.seed = seed;
  m.da = da;
  m.pe = 1.0;
  m.total_runs = 10;
  return m;
}

}  // namespace

TEST_CASE("scenario table") {
  const ScenarioTruth a = make_scenario("sparse_few");
  CHECK(a.critical_set == std::vector<std::size_t>{0, 1});
  CHECK(a.main_coeffs(0) == 8.0);
  CHECK(a.main_coeffs(1) == 6.5);
  CHECK(a.main_coeffs.tail(4).isZero());
  CHECK(a.interactions.size() == 1);
  CHECK(a.quadratics.size() == 2);
  CHECK(a.noise_sigma == 2.0);

  const ScenarioTruth d = make_scenario("dense");
  Vector mains(6);
  mains << 6.0, 5.5, 5.0, 4.5, 4.0, 3.5;
  CHECK(d.main_coeffs.isApprox(mains, 1e-15));
  CHECK(make_scenario("interaction_heavy").interactions.size() == 5);

  struct Row { const char* name; std::size_t kc, ni, nq; double first, last; };
  for (const Row r : {Row{"sparse_few", 2, 1, 2, 8.0, 6.5}, Row{"sparse_many", 3, 2, 3, 8.0, 5.0},
                      Row{"moderate", 4, 2, 2, 7.0, 4.5}, Row{"dense", 6, 3, 3, 6.0, 3.5},
                      Row{"interaction_heavy", 4, 5, 1, 6.0, 4.5}, Row{"quadratic_heavy", 3, 1, 3, 7.0, 5.0}}) {
    const ScenarioTruth t = make_scenario(r.name);
    CHECK(t.k == 6);
    CHECK(t.critical_set.size() == r.kc);
    CHECK(t.interactions.size() == r.ni);
    CHECK(t.quadratics.size() == r.nq);
    CHECK(t.main_coeffs(0) == doctest::Approx(r.first));
    CHECK(t.main_coeffs(static_cast<Eigen::Index>(r.kc - 1)) == doctest::Approx(r.last));
    for (const auto& it : t.interactions) {
      CHECK(it.coeff == 3.0);
      CHECK(it.j < r.kc);
    }
    for (const auto& q : t.quadratics) CHECK(q.coeff == -2.0);
  }
  // Lexicographically first critical pairs.
  const auto ih = make_scenario("interaction_heavy").interactions;
  CHECK(ih[0].i == 0);
  CHECK(ih[0].j == 1);
  CHECK(ih[3].i == 1);
  CHECK(ih[3].j == 2);
  try {
    make_scenario("nope");
    FAIL("expected UnknownScenario");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownScenario);
  }
}

TEST_CASE("scenario evaluation and noise audit") {
  ScenarioTruth t = make_scenario("moderate");
  Vector x(6);
  x << 0.5, -0.5, 1, 0, 0, 0.3;
  const double expected = 7.0 * 0.5 + (7.0 - 2.5 / 3) * -0.5 + (7.0 - 5.0 / 3) * 1 + 3.0 * 0.5 * -0.5 +
                          3.0 * 0.5 * 1 - 2.0 * 0.25 - 2.0 * 0.25;
  CHECK(t.mean(x) == doctest::Approx(expected).epsilon(1e-12));
  RandomStream a(1), b(1);
  double z = 0.0;
  const double y1 = t.evaluate(x, a, &z);
  const double y2 = t.evaluate(x, a);
  CHECK(y1 != y2);
  CHECK(y1 - t.mean(x) == doctest::Approx(2.0 * z).epsilon(1e-12));
  CHECK(t.evaluate(x, b) == y1);
  t.noise_sigma = 0.0;
  CHECK(t.evaluate(x, a) == t.mean(x));
}

TEST_CASE("true optimum") {
  ScenarioTruth lin = make_scenario("sparse_many");
  lin.interactions.clear();
  lin.quadratics.clear();
  const TrueOptimum l = true_optimum(lin);
  for (int i = 0; i < 3; ++i) CHECK(l.x_true(i) == doctest::Approx(1.0).epsilon(1e-9));

  for (const auto& name : scenario_names()) {
    const ScenarioTruth t = make_scenario(name);
    const TrueOptimum de = true_optimum(t);
    const TrueOptimum exact = face_enumeration(t);
    CHECK(std::abs(de.y_true - exact.y_true) <= 1e-4);
    const TrueOptimum other = true_optimum(t, 987654321);
    CHECK(std::abs(de.y_true - other.y_true) <= 1e-5);
  }
}

TEST_CASE("detection accuracy and prediction error") {
  const ScenarioTruth t = build_scenario("three", {5.0, 5.0, 5.0}, 0, 0);
  CHECK(detection_accuracy({0, 1, 2}, t) == 1.0);
  CHECK(detection_accuracy({0, 1, 4}, t) == doctest::Approx(2.0 / 3.0));
  CHECK(detection_accuracy({}, t) == 0.0);
  CHECK(prediction_error(4.0, 4.0) == 0.0);
  CHECK(prediction_error(10.0 + 3.61, 10.0) == doctest::Approx(3.61));
  CHECK(prediction_error(1.0, 7.5) == prediction_error(7.5, 1.0));
}

TEST_CASE("method names") {
  for (Method m : all_methods()) CHECK(method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(method_from_string("BoxBehnken"), Error);
}

TEST_CASE("replications") {
  const ScenarioTruth t = make_scenario("sparse_few");
  const TrueOptimum opt = true_optimum(t);
  for (Method m : {Method::LHS, Method::Sobol}) {
    const Metrics r = run_replication(m, t, opt, 5);
    CHECK(r.da == 0.0);
    CHECK(r.total_runs == 17);
  }
  const Metrics trad = run_replication(Method::Traditional, t, opt, 5);
  CHECK(trad.total_runs >= 16);
  const Metrics dsd = run_replication(Method::StdDSD, t, opt, 5);
  CHECK(dsd.total_runs == 13);

  double da = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Metrics h = run_replication(Method::HASOD, t, opt, replication_seed(3, 0, seed));
    da += h.da;
    CHECK(h.total_runs >= 25);
    CHECK(h.total_runs <= 53);
    CHECK(h.variance_after <= h.variance_before + 1e-9);
  }
  CHECK(da / 10.0 >= 0.95);

  const Metrics again = run_replication(Method::HASOD, t, opt, replication_seed(3, 0, 4));
  const Metrics twice = run_replication(Method::HASOD, t, opt, replication_seed(3, 0, 4));
  CHECK(again.pe == twice.pe);
  CHECK(again.total_runs == twice.total_runs);
}

TEST_CASE("aggregate report") {
  std::vector<Metrics> rows;
  for (const auto& m : {"HASOD", "Traditional", "StdDSD", "LHS", "Sobol"})
    for (const auto& s : scenario_names())
      for (std::uint64_t r = 0; r < 10; ++r) rows.push_back(fake(m, s, r, m == std::string("HASOD") ? 1.0 : 0.5 + 0.01 * r));
  const BenchReport rep = aggregate_report(rows);
  CHECK(std::count(rep.csv.begin(), rep.csv.end(), '\n') == 301);
  CHECK(rep.csv.rfind("method,scenario,seed,da,pe,runs\n", 0) == 0);
  CHECK(rep.comparisons.size() == 4);
  CHECK(rep.summaries.front().method == "HASOD");
  CHECK(rep.markdown.find("| HASOD |") != std::string::npos);

  std::reverse(rows.begin(), rows.end());
  CHECK(aggregate_report(rows).csv == rep.csv);

  std::vector<Metrics> hasod_only = {fake("HASOD", "a", 1, 1.0), fake("HASOD", "a", 2, 0.5)};
  const BenchReport h = aggregate_report(hasod_only);
  CHECK(h.comparisons.empty());
  CHECK(h.summaries.front().mean_da == 0.75);

  try {
    aggregate_report({fake("HASOD", "a", 1, 1.0)});
    FAIL("expected InsufficientReplications");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientReplications);
  }
}

TEST_CASE("small benchmark is deterministic") {
  BenchPlan plan;
  plan.scenarios = {make_scenario("sparse_few"), make_scenario("dense")};
  plan.methods = {Method::HASOD, Method::Traditional, Method::LHS};
  plan.reps = 2;
  plan.master_seed = 77;
  const auto a = aggregate_report(run_benchmark(plan)).csv;
  const auto b = aggregate_report(run_benchmark(plan)).csv;
  CHECK(a == b);
  CHECK(std::count(a.begin(), a.end(), '\n') == 13);
}

TEST_CASE("scenario file") {
  const Json j = Json::parse(R"([{"name":"custom","main_coeffs":[4,0,2],"interactions":[[0,2,1.5]],
                                 "quadratics":[[1,-1]],"noise_sigma":0.5}])");
  const auto s = scenarios_from_json(j);
  REQUIRE(s.size() == 1);
  CHECK(s[0].k == 3);
  CHECK(s[0].critical_set == std::vector<std::size_t>{0, 2});
  CHECK(s[0].interactions[0].coeff == 1.5);
  CHECK(s[0].noise_sigma == 0.5);
  CHECK_THROWS_AS(scenarios_from_json(Json::parse(R"([{"name":"x","main_coeffs":[1,2],"interactions":[[1,0,1]]}])")),
                  Error);
  CHECK_THROWS_AS(scenarios_from_json(Json::parse(R"({"name":"x"})")), Error);
}
