#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "adafilter/pc_core.hpp"
#include "adafilter/procedures.hpp"

namespace adafilter {

enum class Adjustment { kBonferroni, kBH };

struct DirectProcedureSpec {
    CombinerKind combiner = CombinerKind::kBonferroni;
    Adjustment adjustment = Adjustment::kBonferroni;
    double alpha = 0.05;
};

// PC p-value of every column; NaN where n_j < r.
std::vector<double> pc_pvalues(const PValueMatrix& matrix, int level, CombinerKind kind);

// Bonferroni (p <= alpha / M_t) or Benjamini-Hochberg step-up over the
// entries flagged testable. Untestable entries are never rejected.
DecisionResult adjust_pvalues(std::span<const double> pvalues, std::span<const std::uint8_t> testable,
                              Adjustment adjustment, double alpha);

// The direct approach: combine each column into a PC p-value, then correct
// for the M_t testable hypotheses. `pc_values` and `adjusted` are filled.
DecisionResult direct_adjust(const PValueMatrix& matrix, int level, const DirectProcedureSpec& spec);

// sum_{k=0}^{n-1} |I_k| (alpha / M)^{n-k}: upper bound on E(V) for direct
// Bonferroni on conjunction (r = n) p-values. counts[k] = |I_k|.
double pfer_bound(std::span<const std::size_t> counts, double alpha, std::size_t hypotheses, int studies);

// Per-study correction across hypotheses (one study at a time, missing
// entries skipped). Result is study-major: out[i * M + j].
std::vector<std::uint8_t> per_study_rejections(const PValueMatrix& matrix, Adjustment adjustment,
                                               double alpha);

}  // namespace adafilter
