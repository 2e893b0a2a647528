#pragma once

#include <cstddef>
#include <map>
#include <string_view>
#include <utility>
#include <vector>

#include "hasod/numkit.hpp"

namespace hasod {

using FactorPair = std::pair<std::size_t, std::size_t>;  // 0-based, first < second

struct ScreeningConfig {
  double en_lambda = 0.01;
  double en_alpha = 0.5;
  double se_lambda = 0.01;
  double epsilon = 1e-8;
};

struct ScreeningReport {
  std::size_t k = 0;
  Vector cwess;
  Vector beta_main;
  Vector se_main;
  double snr = 0.0;
  std::map<FactorPair, double> interaction_scores;
  double w_int = 0.0;
  double epsilon = 1e-8;
};

enum class FactorLabel { Critical, Moderate, Negligible };

std::string_view to_string(FactorLabel label);
FactorLabel factor_label_from_string(std::string_view text);

struct FactorClassification {
  std::vector<FactorLabel> labels;
  std::vector<std::size_t> critical_set;
  std::size_t k_c = 0;
  std::vector<FactorPair> significant_interactions;
  std::size_t n_int = 0;
  double tau_p = 0.0;
  double tau_a = 0.0;
  double tau_crit = 0.0;
};

// Pairs (i, j), i < j, in lexicographic order; the order of the product columns.
std::vector<FactorPair> interaction_pairs(std::size_t k);

// [X | X_i * X_j for each pair in lexicographic order].
Matrix interaction_expand(const Matrix& X);

double interaction_weight(std::size_t k);

// Main-effects elastic net, ridge-type standard errors at the elastic-net
// residuals and CWESS_i = |b_i| / (SE_i + eps) * sqrt(SNR). A constant response
// yields an all-zero report.
ScreeningReport cwess_scores(const Matrix& X1, const Vector& y1, const ScreeningConfig& config = {});

// IS_ij = |b_full(i,j)| * sqrt(SNR_full) * sqrt((k - 1) / 2), with SNR_full taken
// from the elastic-net fit of the interaction-expanded model.
std::map<FactorPair, double> interaction_scores(const Matrix& X1, const Vector& y1,
                                                const ScreeningConfig& config = {});

FactorClassification classify_factors(const ScreeningReport& report);

}  // namespace hasod
