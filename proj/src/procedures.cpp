#include "adafilter/procedures.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "adafilter/error.hpp"
#include "adafilter/scaled_compare.hpp"

namespace adafilter {
namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1]");
    }
}

std::vector<double> testable_sorted(const std::vector<double>& values,
                                    const std::vector<std::uint8_t>& testable) {
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (testable[j]) out.push_back(values[j]);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// #{v in sorted : v <= alpha * k / m}
std::size_t count_at_most(const std::vector<double>& sorted, double alpha, std::uint64_t k,
                          std::uint64_t m) {
    const auto it = std::partition_point(sorted.begin(), sorted.end(), [&](double v) {
        return at_most_fraction(v, alpha, k, m);
    });
    return static_cast<std::size_t>(it - sorted.begin());
}

std::size_t count_at_most(const std::vector<double>& sorted, double bound) {
    return static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), bound) -
                                    sorted.begin());
}

Threshold make_threshold(double alpha, std::uint64_t k, std::uint64_t m) {
    if (k == 0) return {0, 1, 0.0};
    const std::uint64_t g = std::gcd(k, m);
    return {k / g, m / g, fraction_ceil(alpha, k / g, m / g)};
}

DecisionResult decide(const FilterSelectStats& stats, Method method, double alpha,
                      Threshold gamma0, std::size_t filtered) {
    DecisionResult result;
    result.method = method;
    result.alpha = alpha;
    result.gamma0 = gamma0;
    result.filtered_count = filtered;
    result.rejected.assign(stats.size(), 0);
    result.untestable.assign(stats.size(), 0);
    for (std::size_t j = 0; j < stats.size(); ++j) {
        if (!stats.testable[j]) {
            result.untestable[j] = 1;
            continue;
        }
        result.rejected[j] =
            at_most_fraction(stats.select[j], alpha, gamma0.numerator, gamma0.denominator) ? 1 : 0;
    }
    return result;
}

std::size_t require_testable(const FilterSelectStats& stats) {
    const std::size_t n = stats.testable_count();
    if (n == 0) throw Error(ErrorCode::kNoTestableHypotheses, "no hypothesis has n_j >= r");
    return n;
}

struct Fraction {
    std::uint64_t k;
    std::uint64_t m;
};

// Largest k/m with m <= limit, 0 <= k <= m and alpha * k / m < bound, by a
// Stern-Brocot descent with galloped steps. Requires 0 < bound <= alpha.
Fraction largest_grid_point_below(double bound, double alpha, std::uint64_t limit) {
    const auto below = [&](std::uint64_t k, std::uint64_t m) {
        return compare_scaled(alpha, k, bound, m) < 0;
    };
    Fraction lo{0, 1};
    Fraction hi{1, 1};
    // Largest s >= 0 with base.m + s * step.m <= limit and pred(base + s * step).
    const auto gallop = [&](Fraction base, Fraction step, auto pred) {
        const std::uint64_t cap = (limit - base.m) / step.m;
        std::uint64_t good = 0;
        std::uint64_t probe = 1;
        while (probe <= cap && pred(base.k + probe * step.k, base.m + probe * step.m)) {
            good = probe;
            probe *= 2;
        }
        std::uint64_t bad = std::min(probe, cap + 1);
        while (bad - good > 1) {
            const std::uint64_t mid = good + (bad - good) / 2;
            if (pred(base.k + mid * step.k, base.m + mid * step.m)) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        return good;
    };
    while (lo.m + hi.m <= limit) {
        if (below(lo.k + hi.k, lo.m + hi.m)) {
            const std::uint64_t s = gallop(lo, hi, below);
            lo = {lo.k + s * hi.k, lo.m + s * hi.m};
        } else {
            const auto not_below = [&](std::uint64_t k, std::uint64_t m) { return !below(k, m); };
            const std::uint64_t s = gallop(hi, lo, not_below);
            hi = {hi.k + s * lo.k, hi.m + s * lo.m};
        }
    }
    return lo;
}

}  // namespace

const char* method_name(Method method) noexcept {
    switch (method) {
        case Method::kAdaFilterBonferroni: return "adafilter-bonferroni";
        case Method::kAdaFilterBH: return "adafilter-bh";
        case Method::kDirectBonferroni: return "direct-bonferroni";
        case Method::kDirectBH: return "direct-bh";
    }
    return "unknown";
}

std::size_t FilterSelectStats::testable_count() const noexcept {
    return static_cast<std::size_t>(std::count(testable.begin(), testable.end(), std::uint8_t{1}));
}

std::size_t DecisionResult::rejection_count() const noexcept {
    return static_cast<std::size_t>(std::count(rejected.begin(), rejected.end(), std::uint8_t{1}));
}

FilterSelectStats compute_filter_select(const PValueMatrix& matrix, int level) {
    const std::size_t widest = matrix.max_available();
    if (level < 2 || static_cast<std::size_t>(level) > widest) {
        throw Error(ErrorCode::kReplicabilityLevelOutOfRange,
                    "r = " + std::to_string(level) + " but the largest n_j is " + std::to_string(widest));
    }
    const std::size_t hypotheses = matrix.hypotheses();
    FilterSelectStats stats;
    stats.level = level;
    stats.filter.assign(hypotheses, kMissing);
    stats.select.assign(hypotheses, kMissing);
    stats.available.assign(hypotheses, 0);
    stats.testable.assign(hypotheses, 0);

    const auto r = static_cast<std::size_t>(level);
    std::vector<double> buffer(matrix.studies());
    for (std::size_t j = 0; j < hypotheses; ++j) {
        std::size_t present = 0;
        for (double p : matrix.column(j)) {
            if (!is_missing(p)) buffer[present++] = p;
        }
        stats.available[j] = present;
        if (present < r) continue;

        const auto begin = buffer.begin();
        std::nth_element(begin, begin + static_cast<long>(r - 1), begin + static_cast<long>(present));
        const double rth = buffer[r - 1];
        const double below = *std::max_element(begin, begin + static_cast<long>(r - 1));
        const auto tail = static_cast<double>(present - r + 1);
        stats.filter[j] = tail * below;
        stats.select[j] = tail * rth;
        stats.testable[j] = 1;
    }
    return stats;
}

FilterSelectStats make_stats(std::vector<double> filter, std::vector<double> select, int level) {
    if (filter.size() != select.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "filter and select lengths differ");
    }
    FilterSelectStats stats;
    stats.level = level;
    stats.available.assign(filter.size(), static_cast<std::size_t>(level));
    stats.testable.assign(filter.size(), 1);
    stats.filter = std::move(filter);
    stats.select = std::move(select);
    return stats;
}

DecisionResult adafilter_bonferroni(const FilterSelectStats& stats, double alpha) {
    check_alpha(alpha);
    const std::size_t total = require_testable(stats);
    const auto filters = testable_sorted(stats.filter, stats.testable);

    // Candidates alpha/k, largest first; k = M_t always satisfies the bound.
    std::uint64_t k = 1;
    for (; k < total; ++k) {
        if (count_at_most(filters, alpha, 1, k) <= k) break;
    }
    return decide(stats, Method::kAdaFilterBonferroni, alpha, make_threshold(alpha, 1, k),
                  static_cast<std::size_t>(k));
}

DecisionResult adafilter_bonferroni_twostep(const FilterSelectStats& stats, double alpha) {
    check_alpha(alpha);
    const std::size_t total = require_testable(stats);
    const auto filters = testable_sorted(stats.filter, stats.testable);

    std::uint64_t first_exceed = 0;  // m' (1-based), 0 when no alpha/j < F_(j)
    for (std::uint64_t j = 1; j <= total; ++j) {
        if (compare_scaled(filters[j - 1], j, alpha, 1) > 0) {
            first_exceed = j;
            break;
        }
    }
    std::uint64_t m = total;
    if (first_exceed == 1) {
        m = 1;
    } else if (first_exceed > 1) {
        const bool keep = at_most_fraction(filters[first_exceed - 1], alpha, 1, first_exceed - 1);
        m = keep ? first_exceed : first_exceed - 1;
    }
    return decide(stats, Method::kAdaFilterBonferroni, alpha, make_threshold(alpha, 1, m),
                  static_cast<std::size_t>(m));
}

DecisionResult adafilter_bh(const FilterSelectStats& stats, double alpha) {
    check_alpha(alpha);
    const std::size_t total = require_testable(stats);
    const auto filters = testable_sorted(stats.filter, stats.testable);
    const auto selects = testable_sorted(stats.select, stats.testable);

    // Distinct breakpoints of the two counting functions inside [0, alpha].
    std::vector<double> points;
    points.reserve(2 * total);
    std::merge(filters.begin(), filters.end(), selects.begin(), selects.end(),
               std::back_inserter(points));
    points.erase(std::unique(points.begin(), points.end()), points.end());
    points.erase(std::upper_bound(points.begin(), points.end(), alpha), points.end());

    const auto limit = static_cast<std::uint64_t>(total);
    // Intervals [lo, hi) between consecutive breakpoints, scanned from the
    // top; the topmost one is [lo, alpha] and the bottom one starts at 0.
    // Both counts are constant on each interval, so the best grid point in it
    // is min(count_S / count_F, largest grid point below hi).
    for (std::size_t idx = points.size() + 1; idx-- > 0;) {
        if (idx == 0 && !points.empty() && points.front() == 0.0) break;  // [0, 0) is empty
        const double lo = idx == 0 ? 0.0 : points[idx - 1];
        const bool top = idx == points.size();

        const std::size_t count_f = count_at_most(filters, lo);
        const std::size_t count_s = count_at_most(selects, lo);

        Fraction best = top ? Fraction{1, 1} : largest_grid_point_below(points[idx], alpha, limit);
        if (count_f > 0 && count_s * best.m < best.k * count_f) best = {count_s, count_f};
        // Feasible on this interval only if it does not fall below lo.
        if (compare_scaled(lo, best.m, alpha, best.k) <= 0) {
            const Threshold gamma0 = make_threshold(alpha, best.k, best.m);
            return decide(stats, Method::kAdaFilterBH, alpha, gamma0,
                          count_at_most(filters, alpha, gamma0.numerator, gamma0.denominator));
        }
    }
    // The interval holding 0 always yields a grid point; kept for completeness.
    return decide(stats, Method::kAdaFilterBH, alpha, Threshold{}, count_at_most(filters, 0.0));
}

DecisionResult adafilter_bh_oracle(const FilterSelectStats& stats, double alpha) {
    check_alpha(alpha);
    const std::size_t total = require_testable(stats);
    if (total > kOracleLimit) {
        throw Error(ErrorCode::kOracleSizeExceeded,
                    std::to_string(total) + " testable hypotheses exceed the oracle limit");
    }
    std::vector<double> filters;
    std::vector<double> selects;
    for (std::size_t j = 0; j < stats.size(); ++j) {
        if (!stats.testable[j]) continue;
        filters.push_back(stats.filter[j]);
        selects.push_back(stats.select[j]);
    }
    const auto count = [&](const std::vector<double>& values, std::uint64_t k, std::uint64_t m) {
        std::uint64_t c = 0;
        for (double v : values) c += at_most_fraction(v, alpha, k, m) ? 1 : 0;
        return c;
    };

    std::uint64_t best_k = 0;
    std::uint64_t best_m = 1;
    for (std::uint64_t m = 1; m <= total; ++m) {
        for (std::uint64_t k = 0; k <= m; ++k) {
            if (std::gcd(k, m) != 1 && !(k == 0 && m == 1)) continue;
            if (k * best_m <= best_k * m) continue;  // not larger than current best
            // gamma * cF <= alpha * cS  <=>  k * cF <= m * cS
            if (k * count(filters, k, m) <= m * count(selects, k, m)) {
                best_k = k;
                best_m = m;
            }
        }
    }
    const Threshold gamma0 = make_threshold(alpha, best_k, best_m);
    const std::size_t filtered = static_cast<std::size_t>(count(filters, best_k, best_m));
    return decide(stats, Method::kAdaFilterBH, alpha, gamma0, filtered);
}

std::vector<double> adafilter_bonferroni_adjusted(const FilterSelectStats& stats,
                                                  const DecisionResult& result) {
    std::vector<double> adjusted(stats.size(), kMissing);
    const auto m = static_cast<double>(result.filtered_count);
    for (std::size_t j = 0; j < stats.size(); ++j) {
        if (stats.testable[j]) adjusted[j] = std::min(1.0, stats.select[j] * m);
    }
    return adjusted;
}

std::vector<double> adafilter_bh_adjusted(const FilterSelectStats& stats, double tolerance) {
    require_testable(stats);
    std::vector<double> adjusted(stats.size(), kMissing);
    const auto rejected_at = [&](double alpha, std::size_t j) {
        return adafilter_bh(stats, alpha).rejected[j] != 0;
    };
    // Hypotheses sharing an S value share their adjusted value.
    std::vector<std::pair<double, double>> memo;
    for (std::size_t j = 0; j < stats.size(); ++j) {
        if (!stats.testable[j]) continue;
        const auto hit = std::find_if(memo.begin(), memo.end(),
                                      [&](const auto& e) { return e.first == stats.select[j]; });
        if (hit != memo.end()) {
            adjusted[j] = hit->second;
            continue;
        }
        double value = 1.0;
        if (rejected_at(1.0, j)) {
            double lo = 0.0;
            double hi = 1.0;
            while (hi - lo > tolerance) {
                const double mid = 0.5 * (lo + hi);
                if (rejected_at(mid, j)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            value = hi;
        }
        memo.emplace_back(stats.select[j], value);
        adjusted[j] = value;
    }
    return adjusted;
}

CurveTable curves(const FilterSelectStats& stats, std::span<const double> grid) {
    const auto filters = testable_sorted(stats.filter, stats.testable);
    const auto selects = testable_sorted(stats.select, stats.testable);
    CurveTable table;
    table.gamma.assign(grid.begin(), grid.end());
    table.v_hat.reserve(grid.size());
    table.fdp_hat.reserve(grid.size());
    for (double gamma : grid) {
        const double v = gamma * static_cast<double>(count_at_most(filters, gamma));
        const auto discoveries = std::max<std::size_t>(count_at_most(selects, gamma), 1);
        table.v_hat.push_back(v);
        table.fdp_hat.push_back(v / static_cast<double>(discoveries));
    }
    return table;
}

std::vector<double> default_curve_grid(const FilterSelectStats& stats, double alpha) {
    std::vector<double> grid{0.0};
    if (stats.testable_count() == 0) return grid;
    for (std::size_t j = 0; j < stats.size(); ++j) {
        if (!stats.testable[j]) continue;
        grid.push_back(stats.filter[j]);
        grid.push_back(stats.select[j]);
    }
    for (int k = 1; k <= 100; ++k) grid.push_back(alpha * k / 100.0);
    std::erase_if(grid, [](double g) { return g > 1.0; });
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

}  // namespace adafilter
