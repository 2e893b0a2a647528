#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "hasod/designgen.hpp"
#include "hasod/numkit.hpp"
#include "hasod/screening.hpp"

namespace hasod {

enum class StrategyKind { A_FullFactorial, B_ResV, C_Star, D_FoldOver };

std::string_view to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(std::string_view text);

struct Strategy {
  StrategyKind kind = StrategyKind::D_FoldOver;
  std::string rationale;
};

// Decision table, evaluated in order:
//   D if kc > 6; A if n_int >= 1 and kc <= 5; B if n_int >= 1 and kc == 6;
//   C if n_int == 0 and kc <= 3; D otherwise.
Strategy select_strategy(std::size_t k_c, std::size_t n_int);

// An empty critical set is replaced by the single highest-CWESS factor
// (lowest index on ties) so Phase 2 always has something to augment.
FactorClassification ensure_critical_factor(const FactorClassification& cls,
                                            const ScreeningReport& report);

struct AugmentOptions {
  bool axial_clip = false;  // clip star points to the [-1, 1] cube
};

// Strategy design embedded in k-factor space (non-critical coordinates held at
// 0), tagged P2. Rows that duplicate a Phase-1 row are dropped, except for the
// fold-over: a mirror-pair Phase-1 design folds onto itself, so D keeps its rows
// as replicates.
Design build_augmentation(const Strategy& strategy, const FactorClassification& cls,
                          const Design& phase1, const AugmentOptions& options = {});

enum class TermKind { Main, Interaction, Quadratic };

struct ModelTerm {
  TermKind kind = TermKind::Main;
  std::size_t i = 0;
  std::size_t j = 0;
  double center = 0.0;  // subtracted from x_i^2 for quadratic columns
};

struct CombinedModel {
  Coefficients beta;
  std::vector<ModelTerm> terms;
  std::vector<std::string> column_spec;
  double lambda = 0.1;
  RegressionDiagnostics diagnostics;
};

std::string term_name(const ModelTerm& term);
ModelTerm term_from_name(std::string_view name, double center);

Matrix model_matrix(const Matrix& X, const std::vector<ModelTerm>& terms);

// Ridge fit over [k main effects | significant interaction products |
// centered x_i^2 for critical i when include_quadratics and strategy C ran].
CombinedModel fit_combined(const Matrix& X, const Vector& y, const FactorClassification& cls,
                           StrategyKind strategy, bool include_quadratics, double lambda = 0.1);

double predict(const CombinedModel& model, const Vector& x);

}  // namespace hasod
