#include "adafilter/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "adafilter/error.hpp"
#include "adafilter/scaled_compare.hpp"

namespace adafilter {

std::vector<double> pc_pvalues(const PValueMatrix& matrix, int level, CombinerKind kind) {
    if (level < 2) {
        throw Error(ErrorCode::kReplicabilityLevelOutOfRange, "r = " + std::to_string(level));
    }
    std::vector<double> out(matrix.hypotheses(), kMissing);
    std::vector<double> buffer;
    buffer.reserve(matrix.studies());
    for (std::size_t j = 0; j < matrix.hypotheses(); ++j) {
        buffer.clear();
        for (double p : matrix.column(j)) {
            if (!is_missing(p)) buffer.push_back(p);
        }
        if (buffer.size() < static_cast<std::size_t>(level)) continue;
        std::sort(buffer.begin(), buffer.end());
        out[j] = pc_pvalue(buffer, level, kind);
    }
    return out;
}

DecisionResult adjust_pvalues(std::span<const double> pvalues, std::span<const std::uint8_t> testable,
                              Adjustment adjustment, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1]");
    }
    if (pvalues.size() != testable.size()) {
        throw Error(ErrorCode::kDimensionMismatch, "p-value and testable flag lengths differ");
    }
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < pvalues.size(); ++j) {
        if (testable[j]) order.push_back(j);
    }
    const auto total = static_cast<std::uint64_t>(order.size());
    if (total == 0) throw Error(ErrorCode::kNoTestableHypotheses, "no hypothesis has n_j >= r");

    DecisionResult result;
    result.method = adjustment == Adjustment::kBonferroni ? Method::kDirectBonferroni : Method::kDirectBH;
    result.alpha = alpha;
    result.filtered_count = order.size();
    result.rejected.assign(pvalues.size(), 0);
    result.untestable.assign(pvalues.size(), 0);
    result.pc_values.emplace(pvalues.begin(), pvalues.end());
    std::vector<double> adjusted(pvalues.size(), kMissing);
    for (std::size_t j = 0; j < pvalues.size(); ++j) result.untestable[j] = testable[j] ? 0 : 1;

    std::uint64_t steps = 1;  // threshold alpha * steps / total
    if (adjustment == Adjustment::kBonferroni) {
        for (std::size_t j : order) adjusted[j] = std::min(1.0, pvalues[j] * static_cast<double>(total));
    } else {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
        steps = 0;
        for (std::uint64_t k = total; k >= 1; --k) {
            if (at_most_fraction(pvalues[order[k - 1]], alpha, k, total)) {
                steps = k;
                break;
            }
        }
        double running = 1.0;
        for (std::uint64_t k = total; k >= 1; --k) {
            const double scaled = pvalues[order[k - 1]] * static_cast<double>(total) / static_cast<double>(k);
            running = std::min(running, scaled);
            adjusted[order[k - 1]] = running;
        }
    }
    const std::uint64_t g = steps == 0 ? 1 : std::gcd(steps, total);
    result.gamma0 = steps == 0 ? Threshold{}
                               : Threshold{steps / g, total / g, fraction_ceil(alpha, steps / g, total / g)};
    for (std::size_t j = 0; j < pvalues.size(); ++j) {
        if (!testable[j] || steps == 0) continue;
        result.rejected[j] = at_most_fraction(pvalues[j], alpha, steps, total) ? 1 : 0;
    }
    result.adjusted = std::move(adjusted);
    return result;
}

DecisionResult direct_adjust(const PValueMatrix& matrix, int level, const DirectProcedureSpec& spec) {
    if (level < 2 || static_cast<std::size_t>(level) > matrix.max_available()) {
        throw Error(ErrorCode::kReplicabilityLevelOutOfRange,
                    "r = " + std::to_string(level) + " but the largest n_j is " +
                        std::to_string(matrix.max_available()));
    }
    const auto values = pc_pvalues(matrix, level, spec.combiner);
    std::vector<std::uint8_t> testable(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) testable[j] = is_missing(values[j]) ? 0 : 1;
    return adjust_pvalues(values, testable, spec.adjustment, spec.alpha);
}

double pfer_bound(std::span<const std::size_t> counts, double alpha, std::size_t hypotheses, int studies) {
    if (studies < 1 || counts.size() != static_cast<std::size_t>(studies) || hypotheses == 0) {
        throw Error(ErrorCode::kInvalidArgument, "pfer_bound needs n counts |I_0| .. |I_{n-1}|");
    }
    if (std::accumulate(counts.begin(), counts.end(), std::size_t{0}) > hypotheses) {
        throw Error(ErrorCode::kInvalidArgument, "counts exceed M");
    }
    const double ratio = alpha / static_cast<double>(hypotheses);
    double bound = 0.0;
    for (int k = 0; k < studies; ++k) {
        bound += static_cast<double>(counts[static_cast<std::size_t>(k)]) * std::pow(ratio, studies - k);
    }
    return bound;
}

std::vector<std::uint8_t> per_study_rejections(const PValueMatrix& matrix, Adjustment adjustment,
                                               double alpha) {
    const std::size_t hypotheses = matrix.hypotheses();
    std::vector<std::uint8_t> out(matrix.studies() * hypotheses, 0);
    std::vector<double> row(hypotheses);
    std::vector<std::uint8_t> present(hypotheses);
    for (std::size_t i = 0; i < matrix.studies(); ++i) {
        bool any = false;
        for (std::size_t j = 0; j < hypotheses; ++j) {
            row[j] = matrix.at(i, j);
            present[j] = is_missing(row[j]) ? 0 : 1;
            any = any || present[j];
        }
        if (!any) continue;
        const auto decision = adjust_pvalues(row, present, adjustment, alpha);
        std::copy(decision.rejected.begin(), decision.rejected.end(),
                  out.begin() + static_cast<long>(i * hypotheses));
    }
    return out;
}

}  // namespace adafilter
