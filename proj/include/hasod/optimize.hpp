#pragma once

#include <cstddef>
#include <functional>

#include "hasod/designgen.hpp"
#include "hasod/numkit.hpp"
#include "hasod/random.hpp"
#include "hasod/surrogate.hpp"

namespace hasod {

struct DEConfig {
  std::size_t population = 0;  // 0 means 15 * k
  double f_weight = 0.8;
  double crossover = 0.9;
  std::size_t max_generations = 200;
  double tol = 1e-8;           // relative change of the best value over 20 generations
  std::size_t stall_window = 20;

  std::size_t population_for(std::size_t k) const;
};

struct SearchBox {
  Vector lower;
  Vector upper;

  static SearchBox cube(std::size_t k);  // [-1, 1]^k
  bool contains(const Vector& x) const;
};

struct DEResult {
  Vector x;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::size_t generations = 0;
};

using Objective = std::function<double(const Vector&)>;

// Maximizes `objective` over `box` with DE/rand/1/bin. Trial vectors are
// clamped into the box before evaluation; selection keeps the trial on ties.
DEResult de_maximize(const Objective& objective, const SearchBox& box, const DEConfig& config,
                     RandomStream& stream);

struct OptimumEstimate {
  Vector x_star;
  double mu_at_x_star = 0.0;
  double var_at_x_star = 0.0;
};

// argmax of the GP posterior mean over [-1, 1]^k.
OptimumEstimate estimate_optimum(const GPModel& model, const DEConfig& config, RandomStream& stream);

// Greedy variance maximization inside the box x_star +/- halfwidth clipped to
// [-1, 1]^k; the model is conditioned on each chosen point before the next pick.
Design refinement_points(const GPModel& model, const Vector& x_star, std::size_t n3,
                         double region_halfwidth, const DEConfig& config, RandomStream& stream);

}  // namespace hasod
