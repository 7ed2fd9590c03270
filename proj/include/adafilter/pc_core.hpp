#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace adafilter {

// Missing entries are stored as quiet NaN.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double p) noexcept { return std::isnan(p); }

// n studies x M hypotheses of base p-values. Storage is hypothesis-major so a
// column (all studies of one hypothesis) is contiguous.
class PValueMatrix {
public:
    PValueMatrix() = default;

    // `values` is study-major: values[i * hypotheses + j] is study i,
    // hypothesis j. Throws OutOfRangeEntry, EmptyColumn, DimensionMismatch.
    static PValueMatrix from_rows(std::size_t studies, std::size_t hypotheses,
                                  std::span<const double> values);

    // `values` is hypothesis-major: values[j * studies + i].
    static PValueMatrix from_columns(std::size_t studies, std::size_t hypotheses,
                                     std::vector<double> values);

    // Ragged input is rejected with DimensionMismatch.
    static PValueMatrix from_grid(const std::vector<std::vector<double>>& rows);

    std::size_t studies() const noexcept { return studies_; }
    std::size_t hypotheses() const noexcept { return hypotheses_; }

    double at(std::size_t study, std::size_t hypothesis) const {
        return values_[hypothesis * studies_ + study];
    }

    std::span<const double> column(std::size_t hypothesis) const {
        return {values_.data() + hypothesis * studies_, studies_};
    }

    // n_j: number of non-missing entries in column j.
    std::size_t available(std::size_t hypothesis) const;
    std::size_t max_available() const;

private:
    PValueMatrix(std::size_t studies, std::size_t hypotheses, std::vector<double> values)
        : studies_(studies), hypotheses_(hypotheses), values_(std::move(values)) {}

    static void check(std::size_t studies, std::size_t hypotheses, std::span<const double> values);

    std::size_t studies_ = 0;
    std::size_t hypotheses_ = 0;
    std::vector<double> values_;
};

struct SortedColumn {
    std::size_t hypothesis = 0;
    std::vector<double> sorted;

    std::size_t size() const noexcept { return sorted.size(); }
};

enum class CombinerKind { kSimes, kFisher, kBonferroni };

const char* combiner_name(CombinerKind kind) noexcept;

// Drops missing entries and sorts the rest (stable for ties).
SortedColumn sort_column(const PValueMatrix& matrix, std::size_t hypothesis);

// Partial-conjunction p-value of H0^{r/n} from the n_j sorted p-values of one
// hypothesis; combines the largest n_j - r + 1 of them. Capped at 1.
double pc_pvalue(std::span<const double> sorted, int level, CombinerKind kind);

inline double pc_pvalue(const SortedColumn& column, int level, CombinerKind kind) {
    return pc_pvalue(column.sorted, level, kind);
}

// Upper tail of chi-square with an even number of degrees of freedom, using
// exp(-x/2) * sum_{k < df/2} (x/2)^k / k!.
double chi_square_sf(double x, int df);

// Standard normal distribution helpers (erfc based, accurate in the tails).
double normal_cdf(double x);
double two_sided_pvalue(double z);
// z with Pr(Z > z) = q, for 0 < q < 1.
double normal_upper_quantile(double q);

}  // namespace adafilter
