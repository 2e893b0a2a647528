#include "hasod/designgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>

#include <boost/random/sobol.hpp>

#include "hasod/errors.hpp"

namespace hasod {
namespace {

constexpr std::size_t kMaxFactors = 20;
constexpr int kMaxResamples = 100;

Design make(std::size_t k, Matrix rows, RowTag tag, Phase phase) {
  Design d;
  d.k = k;
  d.row_tags.assign(static_cast<std::size_t>(rows.rows()), tag);
  d.rows = std::move(rows);
  d.phase = phase;
  return d;
}

int sample_level(RandomStream& stream) {
  const double u = stream.next_uniform();
  if (u < 0.45) return -1;
  if (u < 0.55) return 0;
  return 1;
}

// Small finite field GF(q) for q in {3, 5, 7, 9, 11}; GF(9) = GF(3)[i]/(i^2 + 1).
struct SmallField {
  int p = 0;
  int m = 1;
  std::vector<std::array<int, 2>> elems;
  std::set<std::array<int, 2>> squares;

  explicit SmallField(int q) {
    if (q == 9) {
      p = 3;
      m = 2;
    } else {
      p = q;
    }
    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < (m == 2 ? p : 1); ++b) elems.push_back({a, b});
    }
    for (const auto& e : elems) {
      if (e[0] == 0 && e[1] == 0) continue;
      // (a + b i)^2 = a^2 - b^2 + 2ab i
      const int re = ((e[0] * e[0] - e[1] * e[1]) % p + p) % p;
      const int im = (2 * e[0] * e[1]) % p;
      squares.insert({re, im});
    }
  }

  int chi(std::size_t a, std::size_t b) const {
    const std::array<int, 2> d{((elems[a][0] - elems[b][0]) % p + p) % p,
                               ((elems[a][1] - elems[b][1]) % p + p) % p};
    if (d[0] == 0 && d[1] == 0) return 0;
    return squares.contains(d) ? 1 : -1;
  }
};

Matrix two_level_full(std::size_t k) {
  const std::size_t n = std::size_t{1} << k;
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      const bool high = (r >> (k - 1 - j)) & 1U;
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = high ? 1.0 : -1.0;
    }
  }
  return m;
}

void append_rows(Design& d, const Matrix& rows, RowTag tag) {
  const Eigen::Index old = d.rows.rows();
  Matrix merged(old + rows.rows(), static_cast<Eigen::Index>(d.k));
  if (old > 0) merged.topRows(old) = d.rows;
  if (rows.rows() > 0) merged.bottomRows(rows.rows()) = rows;
  d.rows = std::move(merged);
  d.row_tags.insert(d.row_tags.end(), static_cast<std::size_t>(rows.rows()), tag);
}

void require_space(std::size_t k) {
  if (k < 1) throw Error(ErrorCode::KTooSmall, "need at least one factor");
  if (k > kMaxFactors) throw Error(ErrorCode::KTooLarge, "at most 20 factors are supported");
}

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::P1: return "P1";
    case Phase::P2: return "P2";
    case Phase::P3: return "P3";
    case Phase::Baseline: return "Baseline";
  }
  return "Baseline";
}

std::string_view to_string(RowTag tag) {
  switch (tag) {
    case RowTag::Center: return "center";
    case RowTag::ScreenPair: return "screen_pair";
    case RowTag::Corner: return "corner";
    case RowTag::Factorial: return "factorial";
    case RowTag::Axial: return "axial";
    case RowTag::FoldOver: return "foldover";
    case RowTag::Refine: return "refine";
    case RowTag::Baseline: return "baseline";
  }
  return "baseline";
}

Phase phase_from_string(std::string_view text) {
  for (Phase p : {Phase::P1, Phase::P2, Phase::P3, Phase::Baseline}) {
    if (to_string(p) == text) return p;
  }
  throw Error(ErrorCode::MalformedInput, "unknown phase tag '" + std::string(text) + "'");
}

RowTag row_tag_from_string(std::string_view text) {
  for (RowTag t : {RowTag::Center, RowTag::ScreenPair, RowTag::Corner, RowTag::Factorial,
                   RowTag::Axial, RowTag::FoldOver, RowTag::Refine, RowTag::Baseline}) {
    if (to_string(t) == text) return t;
  }
  throw Error(ErrorCode::MalformedInput, "unknown row tag '" + std::string(text) + "'");
}

std::string_view to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::MDSD: return "MDSD";
    case DesignKind::FullFactorial: return "FullFactorial";
    case DesignKind::HalfFractionResV: return "HalfFractionResV";
    case DesignKind::StarPoints: return "StarPoints";
    case DesignKind::FoldOver: return "FoldOver";
    case DesignKind::LHS: return "LHS";
    case DesignKind::Sobol: return "Sobol";
    case DesignKind::StdDSD: return "StdDSD";
    case DesignKind::CCD: return "CCD";
  }
  return "MDSD";
}

bool rows_equal(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i).array() == b.row(j).array()).all();
}

Design mdsd(std::size_t k, RandomStream& stream) {
  if (k < 2) throw Error(ErrorCode::KTooSmall, "M-DSD needs k >= 2");
  if (k > kMaxFactors) throw Error(ErrorCode::KTooLarge, "M-DSD supports k <= 20");

  const auto kk = static_cast<Eigen::Index>(k);
  Design d;
  d.k = k;
  d.phase = Phase::P1;
  d.rows = Matrix::Zero(2 * kk + 3, kk);
  d.row_tags.resize(2 * k + 3);
  d.row_tags[0] = RowTag::Center;

  // Seen rows include the fixed corners so no screening row can collide with them.
  std::set<std::vector<int>> seen;
  seen.insert(std::vector<int>(k, 0));
  seen.insert(std::vector<int>(k, -1));
  seen.insert(std::vector<int>(k, 1));

  for (std::size_t pair = 0; pair < k; ++pair) {
    std::vector<int> r(k);
    bool accepted = false;
    for (int attempt = 0; attempt <= kMaxResamples && !accepted; ++attempt) {
      for (auto& v : r) v = sample_level(stream);
      std::vector<int> mirror(k);
      std::transform(r.begin(), r.end(), mirror.begin(), [](int v) { return -v; });
      if (seen.contains(r) || seen.contains(mirror)) continue;
      seen.insert(r);
      seen.insert(mirror);
      accepted = true;
    }
    if (!accepted) throw Error(ErrorCode::ResampleLimit, "could not draw a distinct screening pair");
    const auto row = static_cast<Eigen::Index>(1 + 2 * pair);
    for (std::size_t j = 0; j < k; ++j) {
      d.rows(row, static_cast<Eigen::Index>(j)) = r[j];
      d.rows(row + 1, static_cast<Eigen::Index>(j)) = -r[j];
    }
    d.row_tags[1 + 2 * pair] = RowTag::ScreenPair;
    d.row_tags[2 + 2 * pair] = RowTag::ScreenPair;
  }
  d.rows.row(2 * kk + 1).setConstant(-1.0);
  d.rows.row(2 * kk + 2).setConstant(1.0);
  d.row_tags[2 * k + 1] = RowTag::Corner;
  d.row_tags[2 * k + 2] = RowTag::Corner;
  return d;
}

Design full_factorial(std::size_t kc) {
  if (kc < 1) throw Error(ErrorCode::InvalidArgument, "full factorial needs at least one factor");
  if (kc > 5) throw Error(ErrorCode::TooManyFactors, "full factorial is limited to 5 factors");
  return make(kc, two_level_full(kc), RowTag::Factorial, Phase::P2);
}

Design half_fraction_res_v(std::size_t kc) {
  if (kc < 5) {
    throw Error(ErrorCode::ResolutionUnattainable, "a half fraction reaches resolution V only for kc >= 5");
  }
  if (kc > kMaxFactors) throw Error(ErrorCode::KTooLarge, "at most 20 factors are supported");
  const Matrix base = two_level_full(kc - 1);
  Matrix rows(base.rows(), static_cast<Eigen::Index>(kc));
  rows.leftCols(base.cols()) = base;
  rows.col(rows.cols() - 1) = base.rowwise().prod();
  return make(kc, std::move(rows), RowTag::Factorial, Phase::P2);
}

Design sixteen_run_screen(std::size_t k) {
  if (k < 1) throw Error(ErrorCode::KTooSmall, "need at least one factor");
  if (k > 8) throw Error(ErrorCode::TooManyFactors, "16-run screen supports at most 8 factors");
  if (k <= 4) return make(k, two_level_full(k), RowTag::Factorial, Phase::Baseline);
  if (k == 5) {
    Design d = half_fraction_res_v(5);
    d.phase = Phase::Baseline;
    return d;
  }
  const Matrix base = two_level_full(4);
  // Generators (0-based columns of the base factorial): E = ABC, F = BCD, G = ACD, H = ABD.
  static constexpr std::array<std::array<int, 3>, 4> kGenerators{{{0, 1, 2}, {1, 2, 3}, {0, 2, 3}, {0, 1, 3}}};
  Matrix rows(16, static_cast<Eigen::Index>(k));
  rows.leftCols(4) = base;
  for (std::size_t g = 0; g + 4 < k; ++g) {
    const auto& gen = kGenerators[g];
    rows.col(static_cast<Eigen::Index>(4 + g)) =
        base.col(gen[0]).cwiseProduct(base.col(gen[1])).cwiseProduct(base.col(gen[2]));
  }
  return make(k, std::move(rows), RowTag::Factorial, Phase::Baseline);
}

Design star_points(std::size_t kc, double alpha) {
  if (kc < 1 || kc > 3) throw Error(ErrorCode::InvalidArgument, "star points need 1 <= kc <= 3");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidArgument, "axial distance must be positive");
  }
  const auto kk = static_cast<Eigen::Index>(kc);
  Matrix rows = Matrix::Zero(2 * kk, kk);
  for (Eigen::Index i = 0; i < kk; ++i) {
    rows(2 * i, i) = -alpha;
    rows(2 * i + 1, i) = alpha;
  }
  return make(kc, std::move(rows), RowTag::Axial, Phase::P2);
}

Design fold_over(const Design& design) {
  if (design.size() == 0) throw Error(ErrorCode::InvalidArgument, "fold-over of an empty design");
  Design out;
  out.k = design.k;
  out.phase = Phase::P2;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < design.rows.rows(); ++i) {
    if (!(design.rows.row(i).array() == 0.0).all()) keep.push_back(i);
  }
  out.rows.resize(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(design.k));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    // Adding +0 turns negated zeros into plain zeros.
    out.rows.row(static_cast<Eigen::Index>(r)) = (-design.rows.row(keep[r])).array() + 0.0;
  }
  out.row_tags.assign(keep.size(), RowTag::FoldOver);
  return out;
}

Design space_filling(SpaceFillingKind kind, std::size_t n, std::size_t k, RandomStream& stream) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "space-filling design needs n >= 1");
  require_space(k);
  Matrix rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  if (kind == SpaceFillingKind::LHS) {
    const double nn = static_cast<double>(n);
    for (std::size_t j = 0; j < k; ++j) {
      const auto perm = stream.next_permutation(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = (static_cast<double>(perm[i]) + stream.next_uniform()) / nn;
        rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 2.0 * u - 1.0;
      }
    }
  } else {
    // Joe-Kuo direction numbers; the engine starts at index 1 (the origin is skipped).
    boost::random::sobol_engine<std::uint32_t, 32> engine(k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double u = static_cast<double>(engine()) * 0x1.0p-32;
        rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 2.0 * u - 1.0;
      }
    }
  }
  return make(k, std::move(rows), RowTag::Baseline, Phase::Baseline);
}

Matrix conference_matrix(std::size_t k) {
  if (k < 2 || k > 12 || k % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "conference matrices are available for even k <= 12");
  }
  const auto kk = static_cast<Eigen::Index>(k);
  Matrix c = Matrix::Zero(kk, kk);
  if (k == 2) {
    c << 0, 1, 1, 0;
    return c;
  }
  const int q = static_cast<int>(k) - 1;
  const SmallField field(q);
  const bool symmetric = q % 4 == 1;
  for (Eigen::Index j = 1; j < kk; ++j) {
    c(0, j) = 1.0;
    c(j, 0) = symmetric ? 1.0 : -1.0;
  }
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b < q; ++b) {
      c(a + 1, b + 1) = field.chi(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
    }
  }
  return c;
}

Design baseline_design(BaselineKind kind, std::size_t k) {
  if (kind == BaselineKind::StdDSD) {
    if (k < 2 || k > 12 || k % 2 != 0) {
      throw Error(ErrorCode::InvalidArgument, "standard DSD needs even k <= 12");
    }
    const Matrix c = conference_matrix(k);
    const auto kk = static_cast<Eigen::Index>(k);
    Matrix rows = Matrix::Zero(2 * kk + 1, kk);
    rows.middleRows(1, kk) = c;
    rows.bottomRows(kk) = (-c).array() + 0.0;
    Design d = make(k, std::move(rows), RowTag::ScreenPair, Phase::Baseline);
    d.row_tags[0] = RowTag::Center;
    return d;
  }

  if (k < 1 || k > 6) throw Error(ErrorCode::InvalidArgument, "CCD baseline needs 1 <= k <= 6");
  Design d;
  d.k = k;
  d.phase = Phase::Baseline;
  d.rows.resize(0, static_cast<Eigen::Index>(k));
  const Matrix core = k <= 4 ? two_level_full(k) : sixteen_run_screen(k).rows;
  append_rows(d, core, RowTag::Factorial);
  Matrix axial = Matrix::Zero(2 * static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(k); ++i) {
    axial(2 * i, i) = -1.0;
    axial(2 * i + 1, i) = 1.0;
  }
  // For k = 1 the face-centered axial points coincide with the factorial core.
  for (Eigen::Index i = 0; i < axial.rows(); ++i) {
    bool dup = false;
    for (Eigen::Index j = 0; j < d.rows.rows() && !dup; ++j) dup = rows_equal(axial, i, d.rows, j);
    if (!dup) append_rows(d, axial.row(i), RowTag::Axial);
  }
  append_rows(d, Matrix::Zero(1, static_cast<Eigen::Index>(k)), RowTag::Center);
  return d;
}

Design make_design(const DesignSpec& spec) {
  RandomStream stream(spec.seed);
  switch (spec.kind) {
    case DesignKind::MDSD: return mdsd(spec.k, stream);
    case DesignKind::FullFactorial: return full_factorial(spec.k);
    case DesignKind::HalfFractionResV: return half_fraction_res_v(spec.k);
    case DesignKind::StarPoints: return star_points(spec.k, spec.alpha);
    case DesignKind::LHS: return space_filling(SpaceFillingKind::LHS, spec.n, spec.k, stream);
    case DesignKind::Sobol: return space_filling(SpaceFillingKind::Sobol, spec.n, spec.k, stream);
    case DesignKind::StdDSD: return baseline_design(BaselineKind::StdDSD, spec.k);
    case DesignKind::CCD: return baseline_design(BaselineKind::CCD, spec.k);
    case DesignKind::FoldOver: break;
  }
  throw Error(ErrorCode::InvalidArgument, "fold-over needs a source design");
}

std::string design_to_csv(const Design& design) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t j = 0; j < design.k; ++j) out << (j ? "," : "") << 'f' << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < design.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < design.rows.cols(); ++j) out << (j ? "," : "") << design.rows(i, j);
    out << '\n';
  }
  return out.str();
}

}  // namespace hasod
