#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "adafilter/pc_core.hpp"

namespace adafilter {

// Filtering and selection p-values per hypothesis:
//   F_j = (n_j - r + 1) * P_(r-1)j,   S_j = (n_j - r + 1) * P_(r)j.
// Columns with fewer than r non-missing p-values are untestable; they are
// excluded from every count and are never rejected. F and S are not capped.
struct FilterSelectStats {
    int level = 2;
    std::vector<double> filter;
    std::vector<double> select;
    std::vector<std::size_t> available;  // n_j
    std::vector<std::uint8_t> testable;

    std::size_t size() const noexcept { return filter.size(); }
    std::size_t testable_count() const noexcept;
};

FilterSelectStats compute_filter_select(const PValueMatrix& matrix, int level);

// Builds stats directly from (F, S) pairs, all testable. Used by fixtures and
// callers that already hold the statistics.
FilterSelectStats make_stats(std::vector<double> filter, std::vector<double> select, int level = 2);

enum class Method {
    kAdaFilterBonferroni,
    kAdaFilterBH,
    kDirectBonferroni,
    kDirectBH,
};

const char* method_name(Method method) noexcept;

// A threshold alpha * k / m kept as an exact rational alongside its value.
struct Threshold {
    std::uint64_t numerator = 0;
    std::uint64_t denominator = 1;
    double value = 0.0;  // smallest double >= alpha * numerator / denominator

    bool operator==(const Threshold& other) const noexcept {
        return numerator * other.denominator == other.numerator * denominator;
    }
};

struct DecisionResult {
    Method method = Method::kAdaFilterBonferroni;
    double alpha = 0.0;
    Threshold gamma0;
    // AdaFilter Bonferroni: m, the denominator of gamma0 = alpha / m.
    // AdaFilter BH: #{F_j <= gamma0}. Direct methods: M_t.
    std::size_t filtered_count = 0;
    std::vector<std::uint8_t> rejected;
    std::vector<std::uint8_t> untestable;
    std::optional<std::vector<double>> adjusted;
    std::optional<std::vector<double>> pc_values;  // direct methods only

    std::size_t rejection_count() const noexcept;
};

// Largest gamma in {alpha/M_t, ..., alpha/2, alpha} with
// gamma * #{F_j <= gamma} <= alpha; rejects S_j <= gamma.
DecisionResult adafilter_bonferroni(const FilterSelectStats& stats, double alpha);

// Same procedure computed by sorting F and locating the first alpha/j < F_(j).
DecisionResult adafilter_bonferroni_twostep(const FilterSelectStats& stats, double alpha);

// Largest gamma in {k alpha / m : 0 <= k <= m <= M_t} with
// gamma * #{F_j <= gamma} <= alpha * #{S_j <= gamma}; rejects S_j <= gamma.
// O(M log M): a top-down sweep over the breakpoints of the two counting
// functions.
DecisionResult adafilter_bh(const FilterSelectStats& stats, double alpha);

inline constexpr std::size_t kOracleLimit = 200;

// Literal enumeration of every grid point. Throws OracleSizeExceeded above
// kOracleLimit testable hypotheses.
DecisionResult adafilter_bh_oracle(const FilterSelectStats& stats, double alpha);

// Derived adjusted values. Bonferroni: min(1, S_j * m). BH: smallest alpha at
// which j is rejected, by bisection against adafilter_bh (cost grows with
// M_t^2; intended for moderate M).
std::vector<double> adafilter_bonferroni_adjusted(const FilterSelectStats& stats,
                                                  const DecisionResult& result);
std::vector<double> adafilter_bh_adjusted(const FilterSelectStats& stats, double tolerance = 1e-10);

struct CurveTable {
    std::vector<double> gamma;
    std::vector<double> v_hat;
    std::vector<double> fdp_hat;
};

// Estimated number of false rejections gamma * #{F_j <= gamma} and the
// estimated FDP v_hat / max(#{S_j <= gamma}, 1) over `grid`.
CurveTable curves(const FilterSelectStats& stats, std::span<const double> grid);

// {0} u {F_j} u {S_j} u {alpha k / 100 : k = 1..100}, restricted to [0, 1].
// Only {0} when nothing is testable.
std::vector<double> default_curve_grid(const FilterSelectStats& stats, double alpha);

}  // namespace adafilter
