#include "hasod/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hasod/errors.hpp"

namespace hasod {

std::size_t DEConfig::population_for(std::size_t k) const {
  const std::size_t n = population == 0 ? 15 * k : population;
  return std::max<std::size_t>(n, 4);
}

SearchBox SearchBox::cube(std::size_t k) {
  const auto kk = static_cast<Eigen::Index>(k);
  return {Vector::Constant(kk, -1.0), Vector::Constant(kk, 1.0)};
}

bool SearchBox::contains(const Vector& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

DEResult de_maximize(const Objective& objective, const SearchBox& box, const DEConfig& config,
                     RandomStream& stream) {
  const auto k = static_cast<std::size_t>(box.lower.size());
  if (k == 0 || box.upper.size() != box.lower.size() || (box.upper.array() < box.lower.array()).any()) {
    throw Error(ErrorCode::InvalidArgument, "invalid search box");
  }
  const std::size_t np = config.population_for(k);
  const Vector width = box.upper - box.lower;

  DEResult result;
  std::vector<Vector> pop(np);
  std::vector<double> fit(np);
  std::size_t best = 0;
  for (std::size_t i = 0; i < np; ++i) {
    pop[i].resize(static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      pop[i](jj) = box.lower(jj) + width(jj) * stream.next_uniform();
    }
    fit[i] = objective(pop[i]);
    ++result.evaluations;
    if (fit[i] > fit[best]) best = i;
  }

  std::vector<double> history{fit[best]};
  std::vector<Vector> next_pop(np);
  std::vector<double> next_fit(np);
  Vector trial(static_cast<Eigen::Index>(k));
  for (std::size_t gen = 0; gen < config.max_generations; ++gen) {
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1, r2, r3;
      do { r1 = stream.next_index(np); } while (r1 == i);
      do { r2 = stream.next_index(np); } while (r2 == i || r2 == r1);
      do { r3 = stream.next_index(np); } while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t forced = stream.next_index(k);
      for (std::size_t j = 0; j < k; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const bool cross = stream.next_uniform() < config.crossover || j == forced;
        const double v = cross ? pop[r1](jj) + config.f_weight * (pop[r2](jj) - pop[r3](jj)) : pop[i](jj);
        trial(jj) = std::clamp(v, box.lower(jj), box.upper(jj));
      }
      const double value = objective(trial);
      ++result.evaluations;
      if (value >= fit[i]) {
        next_pop[i] = trial;
        next_fit[i] = value;
      } else {
        next_pop[i] = pop[i];
        next_fit[i] = fit[i];
      }
    }
    pop.swap(next_pop);
    fit.swap(next_fit);
    for (std::size_t i = 0; i < np; ++i) {
      if (fit[i] > fit[best]) best = i;
    }
    history.push_back(fit[best]);
    result.generations = gen + 1;
    if (history.size() > config.stall_window) {
      const double old = history[history.size() - 1 - config.stall_window];
      if (std::abs(history.back() - old) <= config.tol * std::abs(old)) break;
    }
  }
  result.x = pop[best];
  result.value = fit[best];
  return result;
}

OptimumEstimate estimate_optimum(const GPModel& model, const DEConfig& config, RandomStream& stream) {
  const auto k = static_cast<std::size_t>(model.train_x.cols());
  const DEResult r = de_maximize([&model](const Vector& x) { return gp_mean(model, x); },
                                 SearchBox::cube(k), config, stream);
  return {r.x, r.value, gp_variance(model, r.x)};
}

Design refinement_points(const GPModel& model, const Vector& x_star, std::size_t n3,
                         double region_halfwidth, const DEConfig& config, RandomStream& stream) {
  if (n3 < 1) throw Error(ErrorCode::InvalidArgument, "need at least one refinement run");
  if (!(region_halfwidth > 0.0)) throw Error(ErrorCode::InvalidArgument, "region halfwidth must be positive");
  const auto k = static_cast<std::size_t>(model.train_x.cols());
  if (static_cast<std::size_t>(x_star.size()) != k) throw Error(ErrorCode::InvalidArgument, "x_star dimension");

  SearchBox box{(x_star.array() - region_halfwidth).max(-1.0).matrix(),
                (x_star.array() + region_halfwidth).min(1.0).matrix()};
  Design out;
  out.k = k;
  out.phase = Phase::P3;
  out.rows.resize(0, static_cast<Eigen::Index>(k));
  GPModel current = condition_on_points(model, out.rows);
  for (std::size_t t = 0; t < n3; ++t) {
    RandomStream step_stream = stream.child(t);
    const DEResult r = de_maximize([&current](const Vector& x) { return gp_variance(current, x); }, box,
                                   config, step_stream);
    out.rows.conservativeResize(out.rows.rows() + 1, Eigen::NoChange);
    out.rows.row(out.rows.rows() - 1) = r.x.transpose();
    out.row_tags.push_back(RowTag::Refine);
    current = condition_on_points(model, out.rows);
  }
  return out;
}

}  // namespace hasod
