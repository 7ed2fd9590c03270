#include "adafilter/pc_core.hpp"

#include <algorithm>
#include <string>

#include "adafilter/error.hpp"

namespace adafilter {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::kOk: return "Ok";
        case ErrorCode::kOutOfRangeEntry: return "OutOfRangeEntry";
        case ErrorCode::kEmptyColumn: return "EmptyColumn";
        case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
        case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::kReplicabilityLevelOutOfRange: return "ReplicabilityLevelOutOfRange";
        case ErrorCode::kInvalidDegreesOfFreedom: return "InvalidDegreesOfFreedom";
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kNoTestableHypotheses: return "NoTestableHypotheses";
        case ErrorCode::kOracleSizeExceeded: return "OracleSizeExceeded";
        case ErrorCode::kNoConvergence: return "NoConvergence";
        case ErrorCode::kParseError: return "ParseError";
        case ErrorCode::kDuplicateIdentifier: return "DuplicateIdentifier";
        case ErrorCode::kInvalidScenario: return "InvalidScenario";
        case ErrorCode::kIoError: return "IoError";
    }
    return "Unknown";
}

const char* combiner_name(CombinerKind kind) noexcept {
    switch (kind) {
        case CombinerKind::kSimes: return "simes";
        case CombinerKind::kFisher: return "fisher";
        case CombinerKind::kBonferroni: return "bonferroni";
    }
    return "unknown";
}

void PValueMatrix::check(std::size_t studies, std::size_t hypotheses,
                         std::span<const double> values) {
    if (studies == 0 || hypotheses == 0) {
        throw Error(ErrorCode::kDimensionMismatch, "matrix needs at least one study and one hypothesis");
    }
    if (values.size() != studies * hypotheses) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "expected " + std::to_string(studies * hypotheses) + " values, got " +
                        std::to_string(values.size()));
    }
}

PValueMatrix PValueMatrix::from_rows(std::size_t studies, std::size_t hypotheses,
                                     std::span<const double> values) {
    check(studies, hypotheses, values);
    std::vector<double> columns(values.size());
    for (std::size_t i = 0; i < studies; ++i) {
        for (std::size_t j = 0; j < hypotheses; ++j) {
            columns[j * studies + i] = values[i * hypotheses + j];
        }
    }
    return from_columns(studies, hypotheses, std::move(columns));
}

PValueMatrix PValueMatrix::from_columns(std::size_t studies, std::size_t hypotheses,
                                        std::vector<double> values) {
    check(studies, hypotheses, values);
    for (std::size_t j = 0; j < hypotheses; ++j) {
        std::size_t present = 0;
        for (std::size_t i = 0; i < studies; ++i) {
            const double p = values[j * studies + i];
            if (is_missing(p)) continue;
            if (!(p >= 0.0 && p <= 1.0)) {
                throw Error(ErrorCode::kOutOfRangeEntry,
                            "entry (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                                ") = " + std::to_string(p) + " is outside [0, 1]");
            }
            ++present;
        }
        if (present == 0) {
            throw Error(ErrorCode::kEmptyColumn,
                        "hypothesis " + std::to_string(j + 1) + " has no non-missing p-value");
        }
    }
    return PValueMatrix(studies, hypotheses, std::move(values));
}

PValueMatrix PValueMatrix::from_grid(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) {
        throw Error(ErrorCode::kDimensionMismatch, "empty grid");
    }
    const std::size_t hypotheses = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * hypotheses);
    for (const auto& row : rows) {
        if (row.size() != hypotheses) {
            throw Error(ErrorCode::kDimensionMismatch, "ragged rows in p-value grid");
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return from_rows(rows.size(), hypotheses, flat);
}

std::size_t PValueMatrix::available(std::size_t hypothesis) const {
    const auto col = column(hypothesis);
    return static_cast<std::size_t>(
        std::count_if(col.begin(), col.end(), [](double p) { return !is_missing(p); }));
}

std::size_t PValueMatrix::max_available() const {
    std::size_t best = 0;
    for (std::size_t j = 0; j < hypotheses_; ++j) best = std::max(best, available(j));
    return best;
}

SortedColumn sort_column(const PValueMatrix& matrix, std::size_t hypothesis) {
    if (hypothesis >= matrix.hypotheses()) {
        throw Error(ErrorCode::kIndexOutOfRange, "hypothesis index " + std::to_string(hypothesis));
    }
    SortedColumn out;
    out.hypothesis = hypothesis;
    for (double p : matrix.column(hypothesis)) {
        if (!is_missing(p)) out.sorted.push_back(p);
    }
    std::stable_sort(out.sorted.begin(), out.sorted.end());
    return out;
}

double pc_pvalue(std::span<const double> sorted, int level, CombinerKind kind) {
    const auto n = static_cast<long>(sorted.size());
    if (level < 2 || level > n) {
        throw Error(ErrorCode::kReplicabilityLevelOutOfRange,
                    "r = " + std::to_string(level) + " with n_j = " + std::to_string(n));
    }
    const long tail = n - level + 1;
    const std::size_t first = static_cast<std::size_t>(level - 1);

    switch (kind) {
        case CombinerKind::kBonferroni:
            return std::min(1.0, static_cast<double>(tail) * sorted[first]);
        case CombinerKind::kSimes: {
            double best = 1.0;
            for (long i = level; i <= n; ++i) {
                const double weight = static_cast<double>(tail) / static_cast<double>(i - level + 1);
                best = std::min(best, weight * sorted[static_cast<std::size_t>(i - 1)]);
            }
            return best;
        }
        case CombinerKind::kFisher: {
            double statistic = 0.0;
            for (std::size_t i = first; i < sorted.size(); ++i) {
                if (sorted[i] == 0.0) return 0.0;
                statistic -= 2.0 * std::log(sorted[i]);
            }
            return chi_square_sf(statistic, static_cast<int>(2 * tail));
        }
    }
    return 1.0;
}

double chi_square_sf(double x, int df) {
    if (df < 2 || df % 2 != 0) {
        throw Error(ErrorCode::kInvalidDegreesOfFreedom, "df = " + std::to_string(df));
    }
    if (std::isnan(x) || x < 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "chi-square statistic must be nonnegative");
    }
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;

    const double half = x / 2.0;
    const int terms = df / 2;
    // Terms evaluated in log space so exp(-half) cannot underflow before the
    // polynomial part has been applied.
    const double log_half = std::log(half);
    double sum = 0.0;
    for (int k = 0; k < terms; ++k) {
        sum += std::exp(k * log_half - half - std::lgamma(k + 1.0));
    }
    return std::min(1.0, sum);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double two_sided_pvalue(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

double normal_upper_quantile(double q) {
    if (!(q > 0.0 && q < 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "quantile level must lie in (0, 1)");
    }
    double lo = -40.0;
    double hi = 40.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (normal_cdf(-mid) > q) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace adafilter
