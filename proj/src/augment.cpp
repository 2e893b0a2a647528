#include "hasod/augment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "hasod/errors.hpp"

namespace hasod {
namespace {

Design embed(const Design& sub, const std::vector<std::size_t>& critical, std::size_t k) {
  Design out;
  out.k = k;
  out.phase = Phase::P2;
  out.rows = Matrix::Zero(sub.rows.rows(), static_cast<Eigen::Index>(k));
  for (std::size_t c = 0; c < critical.size(); ++c) {
    out.rows.col(static_cast<Eigen::Index>(critical[c])) = sub.rows.col(static_cast<Eigen::Index>(c));
  }
  out.row_tags = sub.row_tags;
  return out;
}

Design drop_duplicates(const Design& candidate, const Design& phase1) {
  Design out;
  out.k = candidate.k;
  out.phase = candidate.phase;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < candidate.rows.rows(); ++i) {
    bool dup = false;
    for (Eigen::Index j = 0; j < phase1.rows.rows() && !dup; ++j) dup = rows_equal(candidate.rows, i, phase1.rows, j);
    for (Eigen::Index kept : keep) dup = dup || rows_equal(candidate.rows, i, candidate.rows, kept);
    if (!dup) keep.push_back(i);
  }
  out.rows.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(candidate.k));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    out.rows.row(static_cast<Eigen::Index>(r)) = candidate.rows.row(keep[r]);
    out.row_tags.push_back(candidate.row_tags[static_cast<std::size_t>(keep[r])]);
  }
  return out;
}

std::size_t parse_index(std::string_view text) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
    throw Error(ErrorCode::MalformedInput, "bad column name");
  }
  return value - 1;
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::A_FullFactorial: return "A_FullFactorial";
    case StrategyKind::B_ResV: return "B_ResV";
    case StrategyKind::C_Star: return "C_Star";
    case StrategyKind::D_FoldOver: return "D_FoldOver";
  }
  return "D_FoldOver";
}

StrategyKind strategy_kind_from_string(std::string_view text) {
  for (StrategyKind k : {StrategyKind::A_FullFactorial, StrategyKind::B_ResV, StrategyKind::C_Star,
                         StrategyKind::D_FoldOver}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::MalformedInput, "unknown strategy '" + std::string(text) + "'");
}

Strategy select_strategy(std::size_t k_c, std::size_t n_int) {
  const std::string counts = " (k_c=" + std::to_string(k_c) + ", n_int=" + std::to_string(n_int) + ")";
  if (k_c > 6) return {StrategyKind::D_FoldOver, "more than six critical factors: fold-over" + counts};
  if (n_int >= 1 && k_c <= 5) {
    return {StrategyKind::A_FullFactorial, "interactions present, at most five critical factors" + counts};
  }
  if (n_int >= 1) {
    return {StrategyKind::B_ResV, "interactions present, six critical factors: resolution V half fraction" + counts};
  }
  if (k_c <= 3) return {StrategyKind::C_Star, "no interactions, at most three critical factors: axial points" + counts};
  return {StrategyKind::D_FoldOver, "no interactions with four to six critical factors: fold-over fallback" + counts};
}

FactorClassification ensure_critical_factor(const FactorClassification& cls,
                                            const ScreeningReport& report) {
  if (cls.k_c > 0) return cls;
  FactorClassification out = cls;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < report.cwess.size(); ++i) {
    if (report.cwess(i) > report.cwess(best)) best = i;
  }
  out.labels[static_cast<std::size_t>(best)] = FactorLabel::Critical;
  out.critical_set = {static_cast<std::size_t>(best)};
  out.k_c = 1;
  return out;
}

Design build_augmentation(const Strategy& strategy, const FactorClassification& cls,
                          const Design& phase1, const AugmentOptions& options) {
  const std::size_t k = phase1.k;
  const std::size_t kc = cls.critical_set.size();
  switch (strategy.kind) {
    case StrategyKind::A_FullFactorial:
      return drop_duplicates(embed(full_factorial(kc), cls.critical_set, k), phase1);
    case StrategyKind::B_ResV:
      return drop_duplicates(embed(half_fraction_res_v(kc), cls.critical_set, k), phase1);
    case StrategyKind::C_Star: {
      Design star = star_points(kc, std::sqrt(static_cast<double>(kc)));
      if (options.axial_clip) star.rows = star.rows.cwiseMax(-1.0).cwiseMin(1.0);
      return drop_duplicates(embed(star, cls.critical_set, k), phase1);
    }
    case StrategyKind::D_FoldOver: {
      Design folded = fold_over(phase1);
      folded.phase = Phase::P2;
      return folded;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown strategy");
}

std::string term_name(const ModelTerm& term) {
  switch (term.kind) {
    case TermKind::Main: return "x" + std::to_string(term.i + 1);
    case TermKind::Interaction:
      return "x" + std::to_string(term.i + 1) + "*x" + std::to_string(term.j + 1);
    case TermKind::Quadratic: return "x" + std::to_string(term.i + 1) + "^2";
  }
  return "?";
}

ModelTerm term_from_name(std::string_view name, double center) {
  if (name.size() < 2 || name[0] != 'x') throw Error(ErrorCode::MalformedInput, "bad column name");
  ModelTerm term;
  if (const auto star = name.find('*'); star != std::string_view::npos) {
    term.kind = TermKind::Interaction;
    term.i = parse_index(name.substr(1, star - 1));
    if (star + 2 > name.size() || name[star + 1] != 'x') throw Error(ErrorCode::MalformedInput, "bad column name");
    term.j = parse_index(name.substr(star + 2));
  } else if (name.ends_with("^2")) {
    term.kind = TermKind::Quadratic;
    term.i = parse_index(name.substr(1, name.size() - 3));
    term.center = center;
  } else {
    term.i = parse_index(name.substr(1));
  }
  return term;
}

Matrix model_matrix(const Matrix& X, const std::vector<ModelTerm>& terms) {
  Matrix M(X.rows(), static_cast<Eigen::Index>(terms.size()));
  for (std::size_t c = 0; c < terms.size(); ++c) {
    const auto& t = terms[c];
    const auto col = static_cast<Eigen::Index>(c);
    const auto i = static_cast<Eigen::Index>(t.i);
    switch (t.kind) {
      case TermKind::Main: M.col(col) = X.col(i); break;
      case TermKind::Interaction: M.col(col) = X.col(i).cwiseProduct(X.col(static_cast<Eigen::Index>(t.j))); break;
      case TermKind::Quadratic: M.col(col) = X.col(i).array().square() - t.center; break;
    }
  }
  return M;
}

CombinedModel fit_combined(const Matrix& X, const Vector& y, const FactorClassification& cls,
                           StrategyKind strategy, bool include_quadratics, double lambda) {
  if (X.rows() != y.size()) throw Error(ErrorCode::InvalidArgument, "design and response sizes differ");
  CombinedModel model;
  model.lambda = lambda;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    model.terms.push_back({TermKind::Main, static_cast<std::size_t>(i), 0, 0.0});
  }
  auto pairs = cls.significant_interactions;
  std::sort(pairs.begin(), pairs.end());
  for (const auto& [i, j] : pairs) model.terms.push_back({TermKind::Interaction, i, j, 0.0});
  if (include_quadratics && strategy == StrategyKind::C_Star) {
    for (std::size_t i : cls.critical_set) {
      const double center = X.col(static_cast<Eigen::Index>(i)).array().square().mean();
      model.terms.push_back({TermKind::Quadratic, i, 0, center});
    }
  }
  for (const auto& t : model.terms) model.column_spec.push_back(term_name(t));
  auto [beta, diag] = ridge_fit_with_se(model_matrix(X, model.terms), y, lambda);
  model.beta = std::move(beta);
  model.diagnostics = std::move(diag);
  return model;
}

double predict(const CombinedModel& model, const Vector& x) {
  const Matrix row = x.transpose();
  return model.beta.intercept + (model_matrix(row, model.terms) * model.beta.values)(0);
}

}  // namespace hasod
