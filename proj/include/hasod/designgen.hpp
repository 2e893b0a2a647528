#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hasod/numkit.hpp"
#include "hasod/random.hpp"

namespace hasod {

enum class Phase { P1, P2, P3, Baseline };

enum class RowTag { Center, ScreenPair, Corner, Factorial, Axial, FoldOver, Refine, Baseline };

std::string_view to_string(Phase phase);
std::string_view to_string(RowTag tag);
Phase phase_from_string(std::string_view text);
RowTag row_tag_from_string(std::string_view text);

// An experimental plan in coded units, one row per run.
struct Design {
  std::size_t k = 0;
  Matrix rows;
  std::vector<RowTag> row_tags;
  Phase phase = Phase::Baseline;

  std::size_t size() const { return static_cast<std::size_t>(rows.rows()); }
};

enum class DesignKind { MDSD, FullFactorial, HalfFractionResV, StarPoints, FoldOver, LHS, Sobol, StdDSD, CCD };

std::string_view to_string(DesignKind kind);

struct DesignSpec {
  DesignKind kind = DesignKind::MDSD;
  std::size_t k = 0;
  std::size_t n = 0;       // space-filling only
  double alpha = 1.0;      // star points only
  std::uint64_t seed = 0;  // randomized kinds only
};

// Modified definitive screening design: one center run, k mirror pairs (r, -r)
// with entries drawn from {-1, 0, +1} at probabilities (0.45, 0.10, 0.45), then
// the two corners (-1, ..., -1) and (+1, ..., +1). 2k + 3 runs, 2 <= k <= 20.
Design mdsd(std::size_t k, RandomStream& stream);

// All 2^kc sign combinations in lexicographic order (-1 before +1), kc <= 5.
Design full_factorial(std::size_t kc);

// 2^(kc-1) half fraction with generator I = x1 x2 ... xkc (resolution kc >= V).
Design half_fraction_res_v(std::size_t kc);

// 16-run two-level screen. Full factorial for k <= 4, I = ABCDE for k = 5 and
// the standard resolution IV generators E = ABC, F = BCD, G = ACD, H = ABD for
// 6 <= k <= 8.
Design sixteen_run_screen(std::size_t k);

Design star_points(std::size_t kc, double alpha);

// Negates every non-center row.
Design fold_over(const Design& design);

enum class SpaceFillingKind { LHS, Sobol };
Design space_filling(SpaceFillingKind kind, std::size_t n, std::size_t k, RandomStream& stream);

enum class BaselineKind { StdDSD, CCD };
Design baseline_design(BaselineKind kind, std::size_t k);

// Conference matrix of even order k <= 12 (Paley construction; k = 2 special).
Matrix conference_matrix(std::size_t k);

// Dispatches on spec.kind; FoldOver is not constructible from a spec alone.
Design make_design(const DesignSpec& spec);

// Header f1..fk, one row per run.
std::string design_to_csv(const Design& design);

// Exact elementwise comparison of row i of a with row j of b.
bool rows_equal(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j);

}  // namespace hasod
