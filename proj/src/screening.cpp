#include "hasod/screening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hasod/errors.hpp"

namespace hasod {
namespace {

bool is_constant(const Vector& y) {
  return y.size() == 0 || (y.array() == y(0)).all();
}

void check_screening_input(const Matrix& X1, const Vector& y1) {
  if (X1.rows() != y1.size()) throw Error(ErrorCode::InvalidArgument, "design and response sizes differ");
  if (X1.rows() < 3) throw Error(ErrorCode::Degenerate, "screening needs at least three runs");
  require_finite(X1, "screening design");
  require_finite(y1, "screening response");
}

}  // namespace

std::string_view to_string(FactorLabel label) {
  switch (label) {
    case FactorLabel::Critical: return "Critical";
    case FactorLabel::Moderate: return "Moderate";
    case FactorLabel::Negligible: return "Negligible";
  }
  return "Negligible";
}

FactorLabel factor_label_from_string(std::string_view text) {
  for (FactorLabel l : {FactorLabel::Critical, FactorLabel::Moderate, FactorLabel::Negligible}) {
    if (to_string(l) == text) return l;
  }
  throw Error(ErrorCode::MalformedInput, "unknown factor label '" + std::string(text) + "'");
}

std::vector<FactorPair> interaction_pairs(std::size_t k) {
  std::vector<FactorPair> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

Matrix interaction_expand(const Matrix& X) {
  const auto k = static_cast<std::size_t>(X.cols());
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "interaction expansion needs k >= 2");
  const auto pairs = interaction_pairs(k);
  Matrix out(X.rows(), X.cols() + static_cast<Eigen::Index>(pairs.size()));
  out.leftCols(X.cols()) = X;
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    out.col(X.cols() + static_cast<Eigen::Index>(m)) =
        X.col(static_cast<Eigen::Index>(pairs[m].first))
            .cwiseProduct(X.col(static_cast<Eigen::Index>(pairs[m].second)));
  }
  return out;
}

double interaction_weight(std::size_t k) {
  return k < 1 ? 0.0 : std::sqrt((static_cast<double>(k) - 1.0) / 2.0);
}

ScreeningReport cwess_scores(const Matrix& X1, const Vector& y1, const ScreeningConfig& config) {
  check_screening_input(X1, y1);
  const auto k = static_cast<std::size_t>(X1.cols());
  ScreeningReport report;
  report.k = k;
  report.epsilon = config.epsilon;
  report.w_int = interaction_weight(k);

  if (is_constant(y1)) {
    report.cwess = Vector::Zero(X1.cols());
    report.beta_main = Vector::Zero(X1.cols());
    report.se_main = Vector::Zero(X1.cols());
    report.snr = 0.0;
    for (const auto& pair : interaction_pairs(k)) report.interaction_scores[pair] = 0.0;
    return report;
  }

  const Coefficients fit = elastic_net_fit(X1, y1, config.en_lambda, config.en_alpha);
  const RegressionDiagnostics diag = ridge_diagnostics(X1, y1, fit.values, config.se_lambda);
  report.beta_main = fit.values;
  report.se_main = diag.se;
  report.snr = diag.snr;
  const double root_snr = std::sqrt(report.snr);
  report.cwess.resize(X1.cols());
  for (Eigen::Index i = 0; i < X1.cols(); ++i) {
    report.cwess(i) = std::abs(report.beta_main(i)) / (report.se_main(i) + report.epsilon) * root_snr;
  }
  if (k >= 2) report.interaction_scores = interaction_scores(X1, y1, config);
  return report;
}

std::map<FactorPair, double> interaction_scores(const Matrix& X1, const Vector& y1,
                                                const ScreeningConfig& config) {
  check_screening_input(X1, y1);
  const auto k = static_cast<std::size_t>(X1.cols());
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "interaction scores need k >= 2");
  const auto pairs = interaction_pairs(k);
  std::map<FactorPair, double> scores;
  if (is_constant(y1)) {
    for (const auto& pair : pairs) scores[pair] = 0.0;
    return scores;
  }

  const Matrix full = interaction_expand(X1);
  const Coefficients fit = elastic_net_fit(full, y1, config.en_lambda, config.en_alpha);
  const Vector centered = y1.array() - y1.mean();
  const Vector fitted = full * fit.values;
  const double mse = (centered - fitted).squaredNorm() / static_cast<double>(y1.size());
  const double signal = population_variance(std::span<const double>(fitted.data(), fitted.size()));
  const double snr_full =
      signal <= 0.0 ? 0.0 : signal / std::max(mse, std::numeric_limits<double>::min());
  const double scale = std::sqrt(snr_full) * interaction_weight(k);
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    scores[pairs[m]] = std::abs(fit.values(static_cast<Eigen::Index>(k + m))) * scale;
  }
  return scores;
}

FactorClassification classify_factors(const ScreeningReport& report) {
  const auto k = static_cast<std::size_t>(report.cwess.size());
  if (k == 0 || static_cast<std::size_t>(report.beta_main.size()) != k) {
    throw Error(ErrorCode::InvalidArgument, "malformed screening report");
  }
  std::vector<double> scores(report.cwess.data(), report.cwess.data() + k);
  std::vector<double> magnitudes(k);
  for (std::size_t i = 0; i < k; ++i) magnitudes[i] = std::abs(report.beta_main(static_cast<Eigen::Index>(i)));

  FactorClassification cls;
  cls.tau_p = percentile(scores, 0.6);
  cls.tau_a = 0.8 * median(magnitudes);
  cls.tau_crit = std::min(cls.tau_p, cls.tau_a);
  cls.labels.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (scores[i] > cls.tau_crit || magnitudes[i] > cls.tau_a) {
      cls.labels[i] = FactorLabel::Critical;
      cls.critical_set.push_back(i);
    } else if (scores[i] > 0.5 * cls.tau_crit) {
      cls.labels[i] = FactorLabel::Moderate;
    } else {
      cls.labels[i] = FactorLabel::Negligible;
    }
  }
  cls.k_c = cls.critical_set.size();
  for (const auto& [pair, score] : report.interaction_scores) {
    if (score > cls.tau_crit) cls.significant_interactions.push_back(pair);
  }
  cls.n_int = cls.significant_interactions.size();
  return cls;
}

}  // namespace hasod
