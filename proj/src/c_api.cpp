#include "adafilter/adafilter.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "adafilter/baselines.hpp"
#include "adafilter/error.hpp"
#include "adafilter/io.hpp"
#include "adafilter/procedures.hpp"
#include "adafilter/simlab.hpp"

struct adafilter_matrix {
    adafilter::LabeledMatrix data;
};

struct adafilter_result {
    adafilter::FilterSelectStats stats;
    adafilter::DecisionResult decision;
};

struct adafilter_curve {
    adafilter::CurveTable table;
};

namespace {

thread_local std::string last_error;

adafilter_status to_status(adafilter::ErrorCode code) {
    using adafilter::ErrorCode;
    switch (code) {
        case ErrorCode::kOk: return ADAFILTER_OK;
        case ErrorCode::kOutOfRangeEntry: return ADAFILTER_E_OUT_OF_RANGE_ENTRY;
        case ErrorCode::kEmptyColumn: return ADAFILTER_E_EMPTY_COLUMN;
        case ErrorCode::kDimensionMismatch: return ADAFILTER_E_DIMENSION_MISMATCH;
        case ErrorCode::kIndexOutOfRange: return ADAFILTER_E_INDEX_OUT_OF_RANGE;
        case ErrorCode::kReplicabilityLevelOutOfRange: return ADAFILTER_E_REPLICABILITY_LEVEL;
        case ErrorCode::kInvalidDegreesOfFreedom: return ADAFILTER_E_INVALID_DF;
        case ErrorCode::kInvalidArgument: return ADAFILTER_E_INVALID_ARGUMENT;
        case ErrorCode::kNoTestableHypotheses: return ADAFILTER_E_NO_TESTABLE;
        case ErrorCode::kOracleSizeExceeded: return ADAFILTER_E_ORACLE_SIZE;
        case ErrorCode::kNoConvergence: return ADAFILTER_E_NO_CONVERGENCE;
        case ErrorCode::kParseError: return ADAFILTER_E_PARSE;
        case ErrorCode::kDuplicateIdentifier: return ADAFILTER_E_DUPLICATE_ID;
        case ErrorCode::kInvalidScenario: return ADAFILTER_E_INVALID_SCENARIO;
        case ErrorCode::kIoError: return ADAFILTER_E_IO;
    }
    return ADAFILTER_E_INTERNAL;
}

template <typename Fn>
adafilter_status guarded(Fn&& fn) noexcept {
    try {
        fn();
        return ADAFILTER_OK;
    } catch (const adafilter::Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
    } catch (const std::exception& e) {
        last_error = e.what();
    } catch (...) {
        last_error = "unknown error";
    }
    return ADAFILTER_E_INTERNAL;
}

void require(bool ok, const char* what) {
    if (!ok) throw adafilter::Error(adafilter::ErrorCode::kInvalidArgument, what);
}

adafilter::CombinerKind to_combiner(adafilter_combiner c) {
    switch (c) {
        case ADAFILTER_COMBINER_SIMES: return adafilter::CombinerKind::kSimes;
        case ADAFILTER_COMBINER_FISHER: return adafilter::CombinerKind::kFisher;
        case ADAFILTER_COMBINER_BONFERRONI: return adafilter::CombinerKind::kBonferroni;
    }
    throw adafilter::Error(adafilter::ErrorCode::kInvalidArgument, "unknown combiner");
}

std::ofstream open_output(const char* path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw adafilter::Error(adafilter::ErrorCode::kIoError, std::string("cannot write '") + path + "'");
    return out;
}

void finish(std::ofstream& out, const char* path) {
    out.flush();
    if (!out) throw adafilter::Error(adafilter::ErrorCode::kIoError, std::string("write failed for '") + path + "'");
}

double value_or_nan(const std::optional<std::vector<double>>& values, size_t j) {
    return values ? (*values)[j] : std::nan("");
}

}  // namespace

extern "C" {

const char* adafilter_last_error(void) { return last_error.c_str(); }

const char* adafilter_status_name(adafilter_status status) {
    switch (status) {
        case ADAFILTER_OK: return "Ok";
        case ADAFILTER_E_OUT_OF_RANGE_ENTRY: return "OutOfRangeEntry";
        case ADAFILTER_E_EMPTY_COLUMN: return "EmptyColumn";
        case ADAFILTER_E_DIMENSION_MISMATCH: return "DimensionMismatch";
        case ADAFILTER_E_INDEX_OUT_OF_RANGE: return "IndexOutOfRange";
        case ADAFILTER_E_REPLICABILITY_LEVEL: return "ReplicabilityLevelOutOfRange";
        case ADAFILTER_E_INVALID_DF: return "InvalidDegreesOfFreedom";
        case ADAFILTER_E_INVALID_ARGUMENT: return "InvalidArgument";
        case ADAFILTER_E_NO_TESTABLE: return "NoTestableHypotheses";
        case ADAFILTER_E_ORACLE_SIZE: return "OracleSizeExceeded";
        case ADAFILTER_E_NO_CONVERGENCE: return "NoConvergence";
        case ADAFILTER_E_PARSE: return "ParseError";
        case ADAFILTER_E_DUPLICATE_ID: return "DuplicateIdentifier";
        case ADAFILTER_E_INVALID_SCENARIO: return "InvalidScenario";
        case ADAFILTER_E_IO: return "IoError";
        case ADAFILTER_E_INTERNAL: return "Internal";
    }
    return "Unknown";
}

adafilter_status adafilter_matrix_create(size_t studies, size_t hypotheses, const double* values,
                                         adafilter_matrix** out) {
    return guarded([&] {
        require(out != nullptr && values != nullptr, "null argument");
        auto handle = std::make_unique<adafilter_matrix>();
        handle->data.matrix =
            adafilter::PValueMatrix::from_rows(studies, hypotheses, std::span(values, studies * hypotheses));
        for (size_t j = 0; j < hypotheses; ++j) handle->data.ids.push_back("h" + std::to_string(j + 1));
        for (size_t i = 0; i < studies; ++i) handle->data.studies.push_back("s" + std::to_string(i + 1));
        *out = handle.release();
    });
}

adafilter_status adafilter_matrix_read_csv(const char* path, adafilter_matrix** out) {
    return guarded([&] {
        require(out != nullptr && path != nullptr, "null argument");
        auto handle = std::make_unique<adafilter_matrix>();
        handle->data = adafilter::read_csv(path);
        *out = handle.release();
    });
}

adafilter_status adafilter_matrix_write_csv(const adafilter_matrix* matrix, const char* path) {
    return guarded([&] {
        require(matrix != nullptr && path != nullptr, "null argument");
        auto out = open_output(path);
        adafilter::write_csv(out, matrix->data);
        finish(out, path);
    });
}

void adafilter_matrix_free(adafilter_matrix* matrix) { delete matrix; }

size_t adafilter_matrix_studies(const adafilter_matrix* matrix) { return matrix->data.matrix.studies(); }

size_t adafilter_matrix_hypotheses(const adafilter_matrix* matrix) { return matrix->data.matrix.hypotheses(); }

double adafilter_matrix_value(const adafilter_matrix* matrix, size_t study, size_t hypothesis) {
    return matrix->data.matrix.at(study, hypothesis);
}

const char* adafilter_matrix_id(const adafilter_matrix* matrix, size_t hypothesis) {
    return matrix->data.ids[hypothesis].c_str();
}

void adafilter_options_init(adafilter_options* options) {
    options->method = ADAFILTER_METHOD_BONFERRONI;
    options->combiner = ADAFILTER_COMBINER_BONFERRONI;
    options->r = 2;
    options->alpha = 0.05;
    options->compute_adjusted = 0;
}

adafilter_status adafilter_run(const adafilter_matrix* matrix, const adafilter_options* options,
                               adafilter_result** out) {
    return guarded([&] {
        require(matrix != nullptr && options != nullptr && out != nullptr, "null argument");
        using namespace adafilter;
        const PValueMatrix& m = matrix->data.matrix;
        auto handle = std::make_unique<adafilter_result>();
        handle->stats = compute_filter_select(m, options->r);
        const bool adjusted = options->compute_adjusted != 0;
        switch (options->method) {
            case ADAFILTER_METHOD_BONFERRONI:
            case ADAFILTER_METHOD_BONFERRONI_TWOSTEP:
                handle->decision = options->method == ADAFILTER_METHOD_BONFERRONI
                                       ? adafilter_bonferroni(handle->stats, options->alpha)
                                       : adafilter_bonferroni_twostep(handle->stats, options->alpha);
                if (adjusted) handle->decision.adjusted = adafilter_bonferroni_adjusted(handle->stats, handle->decision);
                break;
            case ADAFILTER_METHOD_BH:
            case ADAFILTER_METHOD_BH_ORACLE:
                handle->decision = options->method == ADAFILTER_METHOD_BH
                                       ? adafilter_bh(handle->stats, options->alpha)
                                       : adafilter_bh_oracle(handle->stats, options->alpha);
                if (adjusted) handle->decision.adjusted = adafilter_bh_adjusted(handle->stats);
                break;
            case ADAFILTER_METHOD_DIRECT_BONFERRONI:
            case ADAFILTER_METHOD_DIRECT_BH: {
                DirectProcedureSpec spec;
                spec.combiner = to_combiner(options->combiner);
                spec.adjustment = options->method == ADAFILTER_METHOD_DIRECT_BONFERRONI ? Adjustment::kBonferroni
                                                                                        : Adjustment::kBH;
                spec.alpha = options->alpha;
                handle->decision = direct_adjust(m, options->r, spec);
                if (!adjusted) handle->decision.adjusted.reset();
                break;
            }
            default:
                throw Error(ErrorCode::kInvalidArgument, "unknown method");
        }
        *out = handle.release();
    });
}

void adafilter_result_free(adafilter_result* result) { delete result; }

size_t adafilter_result_size(const adafilter_result* result) { return result->decision.rejected.size(); }

double adafilter_result_gamma0(const adafilter_result* result) { return result->decision.gamma0.value; }

void adafilter_result_gamma0_fraction(const adafilter_result* result, uint64_t* numerator, uint64_t* denominator) {
    if (numerator) *numerator = result->decision.gamma0.numerator;
    if (denominator) *denominator = result->decision.gamma0.denominator;
}

size_t adafilter_result_filtered_count(const adafilter_result* result) { return result->decision.filtered_count; }

size_t adafilter_result_rejection_count(const adafilter_result* result) {
    return result->decision.rejection_count();
}

int adafilter_result_rejected(const adafilter_result* result, size_t hypothesis) {
    return result->decision.rejected[hypothesis];
}

int adafilter_result_untestable(const adafilter_result* result, size_t hypothesis) {
    return result->decision.untestable[hypothesis];
}

double adafilter_result_filter_value(const adafilter_result* result, size_t hypothesis) {
    return result->stats.filter[hypothesis];
}

double adafilter_result_select_value(const adafilter_result* result, size_t hypothesis) {
    return result->stats.select[hypothesis];
}

double adafilter_result_pc_value(const adafilter_result* result, size_t hypothesis) {
    return value_or_nan(result->decision.pc_values, hypothesis);
}

double adafilter_result_adjusted(const adafilter_result* result, size_t hypothesis) {
    return value_or_nan(result->decision.adjusted, hypothesis);
}

adafilter_status adafilter_result_write_tsv(const adafilter_result* result, const adafilter_matrix* matrix,
                                            const char* path, int with_adjusted) {
    return guarded([&] {
        require(result != nullptr && matrix != nullptr && path != nullptr, "null argument");
        require(matrix->data.ids.size() == result->decision.rejected.size(), "matrix does not match result");
        auto out = open_output(path);
        adafilter::write_decision_tsv(out, matrix->data.ids, result->stats, result->decision, with_adjusted != 0);
        finish(out, path);
    });
}

adafilter_status adafilter_curve_compute(const adafilter_matrix* matrix, int r, double alpha, adafilter_curve** out) {
    return guarded([&] {
        require(matrix != nullptr && out != nullptr, "null argument");
        require(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
        const auto stats = adafilter::compute_filter_select(matrix->data.matrix, r);
        const auto grid = adafilter::default_curve_grid(stats, alpha);
        auto handle = std::make_unique<adafilter_curve>();
        handle->table = adafilter::curves(stats, grid);
        *out = handle.release();
    });
}

void adafilter_curve_free(adafilter_curve* curve) { delete curve; }

size_t adafilter_curve_size(const adafilter_curve* curve) { return curve->table.gamma.size(); }

void adafilter_curve_point(const adafilter_curve* curve, size_t index, double* gamma, double* v_hat,
                           double* fdp_hat) {
    if (gamma) *gamma = curve->table.gamma[index];
    if (v_hat) *v_hat = curve->table.v_hat[index];
    if (fdp_hat) *fdp_hat = curve->table.fdp_hat[index];
}

adafilter_status adafilter_curve_write_tsv(const adafilter_curve* curve, const char* path) {
    return guarded([&] {
        require(curve != nullptr && path != nullptr, "null argument");
        auto out = open_output(path);
        adafilter::write_curve_tsv(out, curve->table);
        finish(out, path);
    });
}

adafilter_status adafilter_pc_pvalue(const double* pvalues, size_t count, int r, adafilter_combiner combiner,
                                     double* out) {
    return guarded([&] {
        require(pvalues != nullptr && out != nullptr, "null argument");
        std::vector<double> sorted;
        for (size_t i = 0; i < count; ++i) {
            if (adafilter::is_missing(pvalues[i])) continue;
            if (!(pvalues[i] >= 0.0 && pvalues[i] <= 1.0)) {
                throw adafilter::Error(adafilter::ErrorCode::kOutOfRangeEntry, "p-value outside [0, 1]");
            }
            sorted.push_back(pvalues[i]);
        }
        std::stable_sort(sorted.begin(), sorted.end());
        *out = adafilter::pc_pvalue(sorted, r, to_combiner(combiner));
    });
}

adafilter_status adafilter_chi_square_sf(double x, int df, double* out) {
    return guarded([&] {
        require(out != nullptr, "null argument");
        *out = adafilter::chi_square_sf(x, df);
    });
}

adafilter_status adafilter_simulate(const char* scenario_path, const uint64_t* seed_override, unsigned threads,
                                    const char* output_path, uint64_t* seed_used, size_t* rows_written) {
    return guarded([&] {
        require(scenario_path != nullptr && output_path != nullptr, "null argument");
        auto panel = adafilter::sim::read_scenario(scenario_path);
        if (seed_override != nullptr) {
            for (auto& cell : panel.cells) cell.master_seed = *seed_override;
        }
        auto out = open_output(output_path);
        adafilter::sim::run_panel_file(panel, threads == 0 ? 1 : threads, out);
        finish(out, output_path);
        if (seed_used) *seed_used = panel.cells.empty() ? 0 : panel.cells.front().master_seed;
        if (rows_written) *rows_written = panel.cells.size() * panel.procedures.size();
    });
}

}  // extern "C"
