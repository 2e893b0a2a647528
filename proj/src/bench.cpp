#include "hasod/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/QR>

#include "hasod/errors.hpp"

namespace hasod {

double ScenarioTruth::mean(const Vector& x) const {
  double v = main_coeffs.dot(x);
  for (const auto& t : interactions) v += t.coeff * x(static_cast<Eigen::Index>(t.i)) * x(static_cast<Eigen::Index>(t.j));
  for (const auto& q : quadratics) {
    const double xi = x(static_cast<Eigen::Index>(q.i));
    v += q.coeff * xi * xi;
  }
  return v;
}

double ScenarioTruth::evaluate(const Vector& x, RandomStream& noise, double* z_out) const {
  const double z = noise.next_normal();
  if (z_out != nullptr) *z_out = z;
  return mean(x) + noise_sigma * z;
}

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"sparse_few", "sparse_many", "moderate",
                                                 "dense",      "interaction_heavy", "quadratic_heavy"};
  return names;
}

namespace {

std::vector<double> spaced(double from, double to, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = n == 1 ? from : from + (to - from) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

void finish_truth(ScenarioTruth& t) {
  t.critical_set.clear();
  for (Eigen::Index i = 0; i < t.main_coeffs.size(); ++i) {
    if (t.main_coeffs(i) != 0.0) t.critical_set.push_back(static_cast<std::size_t>(i));
  }
}

}  // namespace

ScenarioTruth build_scenario(std::string name, const std::vector<double>& mains, std::size_t n_interactions,
                             std::size_t n_quadratics, double interaction_coeff, double quadratic_coeff,
                             double noise_sigma) {
  ScenarioTruth t;
  t.name = std::move(name);
  t.k = 6;
  t.noise_sigma = noise_sigma;
  t.main_coeffs = Vector::Zero(6);
  for (std::size_t i = 0; i < mains.size(); ++i) t.main_coeffs(static_cast<Eigen::Index>(i)) = mains[i];
  const auto pairs = interaction_pairs(mains.size());
  if (n_interactions > pairs.size() || n_quadratics > mains.size()) {
    throw Error(ErrorCode::InvalidArgument, "too many terms for " + t.name);
  }
  for (std::size_t m = 0; m < n_interactions; ++m) t.interactions.push_back({pairs[m].first, pairs[m].second, interaction_coeff});
  for (std::size_t q = 0; q < n_quadratics; ++q) t.quadratics.push_back({q, quadratic_coeff});
  finish_truth(t);
  return t;
}

ScenarioTruth make_scenario(std::string_view name) {
  if (name == "sparse_few") return build_scenario("sparse_few", {8.0, 6.5}, 1, 2);
  if (name == "sparse_many") return build_scenario("sparse_many", {8.0, 6.5, 5.0}, 2, 3);
  if (name == "moderate") return build_scenario("moderate", spaced(7.0, 4.5, 4), 2, 2);
  if (name == "dense") return build_scenario("dense", spaced(6.0, 3.5, 6), 3, 3);
  if (name == "interaction_heavy") return build_scenario("interaction_heavy", spaced(6.0, 4.5, 4), 5, 1);
  if (name == "quadratic_heavy") return build_scenario("quadratic_heavy", spaced(7.0, 5.0, 3), 1, 3);
  throw Error(ErrorCode::UnknownScenario, "unknown scenario " + std::string(name));
}

std::vector<ScenarioTruth> scenarios_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::MalformedInput, "scenario file must be a JSON list");
  std::vector<ScenarioTruth> out;
  try {
    for (const auto& e : j) {
      ScenarioTruth t;
      t.name = e.at("name").get<std::string>();
      t.main_coeffs = vector_from_json(e.at("main_coeffs"));
      t.k = static_cast<std::size_t>(t.main_coeffs.size());
      if (t.k < 2 || t.k > 20) throw Error(ErrorCode::MalformedInput, "scenario " + t.name + " needs 2..20 factors");
      for (const auto& it : e.value("interactions", Json::array())) {
        InteractionTerm term{it.at(0).get<std::size_t>(), it.at(1).get<std::size_t>(), it.at(2).get<double>()};
        if (term.i >= term.j || term.j >= t.k) throw Error(ErrorCode::MalformedInput, "bad interaction in " + t.name);
        t.interactions.push_back(term);
      }
      for (const auto& q : e.value("quadratics", Json::array())) {
        QuadraticTerm term{q.at(0).get<std::size_t>(), q.at(1).get<double>()};
        if (term.i >= t.k) throw Error(ErrorCode::MalformedInput, "bad quadratic in " + t.name);
        t.quadratics.push_back(term);
      }
      t.noise_sigma = e.value("noise_sigma", 2.0);
      if (!(t.noise_sigma >= 0.0)) throw Error(ErrorCode::MalformedInput, "noise_sigma must be >= 0");
      finish_truth(t);
      out.push_back(std::move(t));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("scenario file: ") + e.what());
  }
  return out;
}

TrueOptimum true_optimum(const ScenarioTruth& truth, std::uint64_t seed) {
  DEConfig cfg;
  cfg.population = 20 * truth.k;
  cfg.max_generations = 2000;
  cfg.tol = 1e-14;
  cfg.stall_window = 50;
  RandomStream stream(seed);
  const DEResult r = de_maximize([&](const Vector& x) { return truth.mean(x); }, SearchBox::cube(truth.k), cfg, stream);
  return {r.x, r.value};
}

double detection_accuracy(const std::vector<std::size_t>& detected, const ScenarioTruth& truth) {
  if (truth.critical_set.empty()) return 0.0;
  const std::set<std::size_t> det(detected.begin(), detected.end());
  std::size_t hit = 0;
  for (auto i : truth.critical_set) hit += det.count(i);
  return static_cast<double>(hit) / static_cast<double>(truth.critical_set.size());
}

double prediction_error(double y_pred, double y_true) { return std::abs(y_pred - y_true); }

std::string_view to_string(Method m) {
  switch (m) {
    case Method::HASOD: return "HASOD";
    case Method::Traditional: return "Traditional";
    case Method::StdDSD: return "StdDSD";
    case Method::LHS: return "LHS";
    case Method::Sobol: return "Sobol";
  }
  return "?";
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> m = {Method::HASOD, Method::Traditional, Method::StdDSD, Method::LHS, Method::Sobol};
  return m;
}

Method method_from_string(std::string_view text) {
  for (Method m : all_methods()) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::UnknownMethod, "unknown method " + std::string(text));
}

namespace {

// Replication streams: child 0 feeds observation noise, child 1 the method.
constexpr std::uint64_t kNoiseChild = 0;
constexpr std::uint64_t kMethodChild = 1;

Vector observe(const ScenarioTruth& truth, const Matrix& X, RandomStream& noise) {
  Vector y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) y(i) = truth.evaluate(X.row(i).transpose(), noise);
  return y;
}

Metrics run_hasod(const ScenarioTruth& truth, const TrueOptimum& opt, std::uint64_t seed, Metrics m) {
  RandomStream noise = RandomStream(seed).child(kNoiseChild);
  SessionConfig cfg;
  cfg.k = truth.k;
  cfg.seed = RandomStream(seed).child(kMethodChild).next_u64();
  SessionState s = create_session(cfg);
  while (s.phase != SessionPhase::Complete) {
    std::vector<Response> batch;
    for (const auto& run : propose_runs(s)) batch.push_back({run.row_id, truth.evaluate(run.levels, noise)});
    s = ingest_responses(s, batch);
  }
  const HasodResult r = finalize_report(s);
  m.da = detection_accuracy(r.critical_factors, truth);
  m.pe = prediction_error(gp_mean(current_gp(s), opt.x_true), opt.y_true);
  m.total_runs = r.total_runs;
  m.variance_before = r.variance_before;
  m.variance_after = r.variance_after_at_old_xstar;
  return m;
}

// Second-order least squares on the survivor coordinates.
Matrix quadratic_terms(const Matrix& X, const std::vector<std::size_t>& vars) {
  const std::size_t s = vars.size();
  Matrix F(X.rows(), static_cast<Eigen::Index>(1 + 2 * s + s * (s - 1) / 2));
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    Eigen::Index c = 0;
    F(r, c++) = 1.0;
    for (auto i : vars) F(r, c++) = X(r, static_cast<Eigen::Index>(i));
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b = a + 1; b < s; ++b)
        F(r, c++) = X(r, static_cast<Eigen::Index>(vars[a])) * X(r, static_cast<Eigen::Index>(vars[b]));
    for (auto i : vars) F(r, c++) = X(r, static_cast<Eigen::Index>(i)) * X(r, static_cast<Eigen::Index>(i));
  }
  return F;
}

Metrics run_traditional(const ScenarioTruth& truth, const TrueOptimum& opt, std::uint64_t seed, Metrics m) {
  RandomStream noise = RandomStream(seed).child(kNoiseChild);
  const std::size_t k = truth.k;
  const Matrix screen = sixteen_run_screen(k).rows;
  const Vector ys = observe(truth, screen, noise);

  // Main-effects OLS with an intercept; |t| > 2 survives.
  Matrix F(screen.rows(), static_cast<Eigen::Index>(k + 1));
  F.col(0).setOnes();
  F.rightCols(static_cast<Eigen::Index>(k)) = screen;
  const Matrix fitf = F.transpose() * F;
  const Eigen::LDLT<Matrix> ldlt(fitf);
  const Vector beta = ldlt.solve(F.transpose() * ys);
  const double dof = static_cast<double>(screen.rows()) - static_cast<double>(k + 1);
  const double s2 = (ys - F * beta).squaredNorm() / dof;
  const Matrix cov = ldlt.solve(Matrix::Identity(F.cols(), F.cols()));
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < k; ++i) {
    const auto c = static_cast<Eigen::Index>(i + 1);
    const double se = std::sqrt(s2 * cov(c, c));
    if (se > 0.0 ? std::abs(beta(c) / se) > 2.0 : beta(c) != 0.0) survivors.push_back(i);
  }
  m.da = detection_accuracy(survivors, truth);

  double y_pred = ys.mean();
  std::size_t runs = static_cast<std::size_t>(screen.rows());
  if (!survivors.empty() && survivors.size() <= 6) {
    const Design ccd = baseline_design(BaselineKind::CCD, survivors.size());
    Matrix embedded = Matrix::Zero(ccd.rows.rows(), static_cast<Eigen::Index>(k));
    for (std::size_t a = 0; a < survivors.size(); ++a) {
      embedded.col(static_cast<Eigen::Index>(survivors[a])) = ccd.rows.col(static_cast<Eigen::Index>(a));
    }
    const Vector yc = observe(truth, embedded, noise);
    runs += static_cast<std::size_t>(embedded.rows());
    Matrix X(screen.rows() + embedded.rows(), static_cast<Eigen::Index>(k));
    X << screen, embedded;
    Vector y(X.rows());
    y << ys, yc;
    const Matrix Q = quadratic_terms(X, survivors);
    const Vector coef = Q.colPivHouseholderQr().solve(y);
    Matrix at(1, static_cast<Eigen::Index>(k));
    at.row(0) = opt.x_true.transpose();
    y_pred = (quadratic_terms(at, survivors) * coef)(0);
  }
  m.pe = prediction_error(y_pred, opt.y_true);
  m.total_runs = runs;
  return m;
}

Metrics run_std_dsd(const ScenarioTruth& truth, const TrueOptimum& opt, std::uint64_t seed, Metrics m) {
  RandomStream noise = RandomStream(seed).child(kNoiseChild);
  const Matrix X = baseline_design(BaselineKind::StdDSD, truth.k).rows;
  const Vector y = observe(truth, X, noise);
  const ScreeningReport report = cwess_scores(X, y);
  m.da = detection_accuracy(classify_factors(report).critical_set, truth);
  const auto [coef, diag] = ridge_fit_with_se(X, y, 0.1);
  m.pe = prediction_error(coef.intercept + coef.values.dot(opt.x_true), opt.y_true);
  m.total_runs = static_cast<std::size_t>(X.rows());
  return m;
}

Metrics run_space_filling(SpaceFillingKind kind, const ScenarioTruth& truth, const TrueOptimum& opt,
                          std::uint64_t seed, Metrics m) {
  RandomStream noise = RandomStream(seed).child(kNoiseChild);
  RandomStream method = RandomStream(seed).child(kMethodChild);
  RandomStream design_stream = method.child(0);
  const Matrix X = space_filling(kind, 17, truth.k, design_stream).rows;
  const Vector y = observe(truth, X, noise);
  RandomStream fit_stream = method.child(1);
  const GPModel gp = gp_fit(X, y, fit_stream);
  m.da = 0.0;  // no screening step, nothing is ever declared critical
  m.pe = prediction_error(gp_mean(gp, opt.x_true), opt.y_true);
  m.total_runs = 17;
  return m;
}

}  // namespace

Metrics run_replication(Method method, const ScenarioTruth& truth, std::uint64_t seed) {
  return run_replication(method, truth, true_optimum(truth), seed);
}

Metrics run_replication(Method method, const ScenarioTruth& truth, const TrueOptimum& optimum, std::uint64_t seed) {
  Metrics m;
  m.method = std::string(to_string(method));
  m.scenario = truth.name;
  m.seed = seed;
  switch (method) {
    case Method::HASOD: return run_hasod(truth, optimum, seed, m);
    case Method::Traditional: return run_traditional(truth, optimum, seed, m);
    case Method::StdDSD: return run_std_dsd(truth, optimum, seed, m);
    case Method::LHS: return run_space_filling(SpaceFillingKind::LHS, truth, optimum, seed, m);
    case Method::Sobol: return run_space_filling(SpaceFillingKind::Sobol, truth, optimum, seed, m);
  }
  throw Error(ErrorCode::UnknownMethod, "unknown method");
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t scenario_index, std::size_t rep) {
  return derive_seed(derive_seed(master, scenario_index), rep);
}

std::vector<Metrics> run_benchmark(const BenchPlan& plan) {
  std::vector<Metrics> out;
  for (std::size_t s = 0; s < plan.scenarios.size(); ++s) {
    const ScenarioTruth& truth = plan.scenarios[s];
    const TrueOptimum opt = true_optimum(truth);
    for (std::size_t rep = 0; rep < plan.reps; ++rep) {
      const std::uint64_t seed = replication_seed(plan.master_seed, s, rep);
      for (Method m : plan.methods) out.push_back(run_replication(m, truth, opt, seed));
    }
  }
  return out;
}

namespace {

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

BenchReport aggregate_report(std::vector<Metrics> all) {
  std::sort(all.begin(), all.end(), [](const Metrics& a, const Metrics& b) {
    return std::tie(a.method, a.scenario, a.seed) < std::tie(b.method, b.scenario, b.seed);
  });
  std::map<std::pair<std::string, std::string>, std::size_t> group;
  for (const auto& m : all) ++group[{m.method, m.scenario}];
  for (const auto& [key, count] : group) {
    if (count < 2) {
      throw Error(ErrorCode::InsufficientReplications,
                  key.first + " on " + key.second + " has " + std::to_string(count) + " replication(s)");
    }
  }

  BenchReport rep;
  rep.rows = all;
  std::map<std::string, std::vector<const Metrics*>> by_method;
  for (const auto& m : rep.rows) by_method[m.method].push_back(&m);

  // HASOD first, then the remaining methods in name order.
  std::vector<std::string> order;
  if (by_method.count("HASOD")) order.push_back("HASOD");
  for (const auto& [name, rows] : by_method) {
    if (name != "HASOD") order.push_back(name);
  }

  std::map<std::string, std::vector<double>> da;
  for (const auto& name : order) {
    MethodSummary s;
    s.method = name;
    s.count = by_method[name].size();
    for (const Metrics* m : by_method[name]) {
      s.mean_da += m->da;
      s.mean_pe += m->pe;
      s.mean_runs += static_cast<double>(m->total_runs);
      da[name].push_back(m->da);
    }
    s.mean_da /= static_cast<double>(s.count);
    s.mean_pe /= static_cast<double>(s.count);
    s.mean_runs /= static_cast<double>(s.count);
    rep.summaries.push_back(s);
  }
  if (da.count("HASOD")) {
    for (const auto& name : order) {
      if (name == "HASOD") continue;
      WelchComparison c;
      c.method = name;
      c.test = welch_t_test(da["HASOD"], da[name]);
      c.hasod_mean = mean(da["HASOD"]);
      c.other_mean = mean(da[name]);
      rep.comparisons.push_back(c);
    }
  }

  std::ostringstream csv;
  csv << "method,scenario,seed,da,pe,runs\n";
  for (const auto& m : rep.rows) {
    csv << m.method << ',' << m.scenario << ',' << m.seed << ',' << fmt(m.da) << ',' << fmt(m.pe) << ','
        << m.total_runs << '\n';
  }
  rep.csv = csv.str();

  std::ostringstream md;
  md << "# Benchmark summary\n\n";
  md << "| Method | Detection Acc. | Pred. Error | Total Runs | Replications |\n";
  md << "|---|---|---|---|---|\n";
  for (const auto& s : rep.summaries) {
    md << "| " << s.method << " | " << fmt(s.mean_da, "%.4f") << " | " << fmt(s.mean_pe, "%.4f") << " | "
       << fmt(s.mean_runs, "%.2f") << " | " << s.count << " |\n";
  }
  md << "\n## Welch t-tests on detection accuracy (HASOD vs method)\n\n";
  if (rep.comparisons.empty()) {
    md << "No comparisons.\n";
  } else {
    md << "| Method | HASOD mean | Method mean | t | df | p |\n|---|---|---|---|---|---|\n";
    for (const auto& c : rep.comparisons) {
      md << "| " << c.method << " | " << fmt(c.hasod_mean, "%.4f") << " | " << fmt(c.other_mean, "%.4f") << " | "
         << fmt(c.test.t, "%.4g") << " | " << fmt(c.test.df, "%.4g") << " | " << fmt(c.test.p, "%.4g") << " |\n";
    }
  }
  rep.markdown = md.str();
  return rep;
}

}  // namespace hasod
