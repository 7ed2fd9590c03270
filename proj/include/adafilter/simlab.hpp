#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "adafilter/baselines.hpp"
#include "adafilter/pc_core.hpp"
#include "adafilter/procedures.hpp"

namespace adafilter::sim {

// One cell of a simulation experiment. Field names double as the keys of the
// scenario file format.
struct SimScenario {
    std::size_t M = 10000;
    int n = 2;
    int r = 2;
    double pi0 = 0.8;
    double pi_rn = 0.01;
    double rho = 0.0;
    std::size_t block_size = 100;
    std::array<double, 4> power_targets{0.02, 0.2, 0.5, 0.95};
    std::optional<double> calibration_alpha;  // defaults to 0.05 / M
    std::size_t replications = 100;
    std::uint64_t master_seed = 20180901;
    double alpha_pfer = 1.0;
    double alpha_fdr = 0.2;

    double effective_calibration_alpha() const { return calibration_alpha.value_or(0.05 / static_cast<double>(M)); }
};

// Throws InvalidScenario.
void validate(const SimScenario& scenario);

// Per-hypothesis null/non-null pattern across studies; bit i of masks[j] set
// means base hypothesis (i, j) is non-null.
struct TruthAssignment {
    int n = 0;
    int r = 0;
    std::vector<std::uint32_t> masks;

    bool pc_nonnull(std::size_t j) const;
    std::size_t pc_nonnull_count() const;
};

// Probability of each of the 2^n truth patterns under the scenario law.
std::vector<double> truth_law(const SimScenario& scenario);

// mu > 0 with two-sided level-a power Phi(-z - mu) + 1 - Phi(z - mu) equal to
// `power`, z = z_{a/2}. Throws NoConvergence when the bracket fails.
double calibrate_mu(double power, double calibration_alpha);

using Engine = std::mt19937_64;

// Independent generator for (seed, cell, replication, lane). Lane 0 drives
// the truth assignment, lane 1 + i drives study i.
Engine make_stream(std::uint64_t seed, std::uint64_t cell, std::uint64_t replication, std::uint64_t lane);

TruthAssignment sample_truth(const SimScenario& scenario, Engine& stream);

// Block-correlated Z-values per study turned into two-sided p-values. Each
// study draws from its own stream; `studies.size()` must equal scenario.n.
PValueMatrix sample_pvalues(const TruthAssignment& truth, const SimScenario& scenario,
                            std::span<const double, 4> signal_levels, std::span<Engine> studies);

enum class ProcedureKind { kAdaFilterBonferroni, kAdaFilterBH, kDirect };

struct ProcedureSpec {
    ProcedureKind kind = ProcedureKind::kAdaFilterBonferroni;
    DirectProcedureSpec direct;  // kind == kDirect only; its alpha is ignored

    // FDR-targeting procedures run at alpha_fdr, the rest at alpha_pfer.
    bool targets_fdr() const;
    std::string name() const;
};

// AdaFilter Bonferroni, Bonferroni-{B,F,S}, AdaFilter BH, BH-{B,F,S}.
std::vector<ProcedureSpec> default_procedures();
ProcedureSpec parse_procedure(std::string_view name);

struct Estimate {
    double mean = 0.0;
    std::optional<double> half_width;  // 1.96 sd / sqrt(B); missing when B < 2
};

struct ProcedureMetrics {
    ProcedureSpec procedure;
    double alpha = 0.0;
    Estimate pfer;
    Estimate fdr;
    Estimate recall;
    std::size_t replications = 0;
};

struct MetricsReport {
    SimScenario scenario;
    std::vector<ProcedureMetrics> rows;
};

// Runs B replications; every procedure sees the same data in a replication.
// Results are identical for any thread count.
MetricsReport run_panel(const SimScenario& scenario, const std::vector<ProcedureSpec>& procedures,
                        unsigned threads = 1, std::uint64_t cell = 0);

// A scenario file expands to a panel of cells: list-valued keys form a
// Cartesian product, except n and r which are zipped into (n, r) pairs.
struct Panel {
    std::vector<SimScenario> cells;
    std::vector<ProcedureSpec> procedures;
};

Panel parse_scenario(std::string_view text);
Panel read_scenario(const std::string& path);

void write_metrics_header(std::ostream& out);
void write_metrics_rows(std::ostream& out, std::size_t cell, const MetricsReport& report);

// Runs every cell and writes the TSV. Cell c uses streams keyed by
// (master_seed, c, ...).
void run_panel_file(const Panel& panel, unsigned threads, std::ostream& out);

}  // namespace adafilter::sim
