#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hasod/numkit.hpp"
#include "hasod/random.hpp"
#include "hasod/session.hpp"

namespace hasod {

struct InteractionTerm {
  std::size_t i = 0;
  std::size_t j = 0;
  double coeff = 0.0;
};

struct QuadraticTerm {
  std::size_t i = 0;
  double coeff = 0.0;
};

struct ScenarioTruth {
  std::string name;
  std::size_t k = 6;
  Vector main_coeffs;
  std::vector<InteractionTerm> interactions;
  std::vector<QuadraticTerm> quadratics;
  double noise_sigma = 2.0;
  std::vector<std::size_t> critical_set;  // factors with a nonzero main effect

  double mean(const Vector& x) const;
  // mean(x) + noise_sigma * z with z drawn from `noise`; the draw is written to
  // `z_out` when given.
  double evaluate(const Vector& x, RandomStream& noise, double* z_out = nullptr) const;
};

const std::vector<std::string>& scenario_names();
ScenarioTruth make_scenario(std::string_view name);
// Critical factors on the lowest indices, linearly spaced mains, +3 on the
// lexicographically first critical pairs, -2 quadratics on the first factors.
ScenarioTruth build_scenario(std::string name, const std::vector<double>& mains, std::size_t n_interactions,
                             std::size_t n_quadratics, double interaction_coeff = 3.0,
                             double quadratic_coeff = -2.0, double noise_sigma = 2.0);
// JSON list of {name, main_coeffs, interactions: [[i, j, c]], quadratics: [[i, c]], noise_sigma}.
std::vector<ScenarioTruth> scenarios_from_json(const Json& j);

struct TrueOptimum {
  Vector x_true;
  double y_true = 0.0;
};
TrueOptimum true_optimum(const ScenarioTruth& truth, std::uint64_t seed = 0x5eed);

double detection_accuracy(const std::vector<std::size_t>& detected, const ScenarioTruth& truth);
double prediction_error(double y_pred, double y_true);

enum class Method { HASOD, Traditional, StdDSD, LHS, Sobol };
std::string_view to_string(Method method);
Method method_from_string(std::string_view text);
const std::vector<Method>& all_methods();

struct Metrics {
  double da = 0.0;
  double pe = 0.0;
  std::size_t total_runs = 0;
  std::string method;
  std::string scenario;
  std::uint64_t seed = 0;
  // HASOD only: posterior variance at the Phase-2 optimum before and after
  // conditioning on the refinement points.
  double variance_before = 0.0;
  double variance_after = 0.0;
};

Metrics run_replication(Method method, const ScenarioTruth& truth, std::uint64_t seed);
// Same as above, reusing a precomputed optimum.
Metrics run_replication(Method method, const ScenarioTruth& truth, const TrueOptimum& optimum, std::uint64_t seed);

// Seed of replication `rep` of scenario number `scenario_index`.
std::uint64_t replication_seed(std::uint64_t master, std::size_t scenario_index, std::size_t rep);

struct BenchPlan {
  std::vector<ScenarioTruth> scenarios;
  std::vector<Method> methods;
  std::size_t reps = 10;
  std::uint64_t master_seed = 1;
};
std::vector<Metrics> run_benchmark(const BenchPlan& plan);

struct WelchComparison {
  std::string method;
  TTestResult test;
  double hasod_mean = 0.0;
  double other_mean = 0.0;
};

struct MethodSummary {
  std::string method;
  double mean_da = 0.0;
  double mean_pe = 0.0;
  double mean_runs = 0.0;
  std::size_t count = 0;
};

struct BenchReport {
  std::vector<Metrics> rows;  // sorted by (method, scenario, seed)
  std::vector<MethodSummary> summaries;
  std::vector<WelchComparison> comparisons;
  std::string csv;
  std::string markdown;
};

BenchReport aggregate_report(std::vector<Metrics> all);

}  // namespace hasod
