// Command-line front end. Talks to the library only through the C interface.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "adafilter/adafilter.h"

namespace {

int fail(adafilter_status status) {
    std::fprintf(stderr, "error: %s\n", adafilter_last_error());
    return status == ADAFILTER_OK ? 1 : static_cast<int>(status);
}

unsigned resolve_threads(const std::optional<unsigned>& flag) {
    if (flag) return *flag == 0 ? 1 : *flag;
    if (const char* env = std::getenv("ADAFILTER_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

std::string shortest(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

struct MatrixHandle {
    adafilter_matrix* ptr = nullptr;
    ~MatrixHandle() { adafilter_matrix_free(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive filtering tests for partial-conjunction (replicability) hypotheses"};
    app.require_subcommand(1);

    std::string input;
    std::string output;
    std::string method = "adafilter-bh";
    std::string combiner = "bonferroni";
    std::string scenario;
    int level = 2;
    double alpha = 0.05;
    bool adjusted = false;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;

    const std::map<std::string, adafilter_method> methods{
        {"adafilter-bonferroni", ADAFILTER_METHOD_BONFERRONI},
        {"adafilter-bh", ADAFILTER_METHOD_BH},
        {"direct-bonferroni", ADAFILTER_METHOD_DIRECT_BONFERRONI},
        {"direct-bh", ADAFILTER_METHOD_DIRECT_BH},
    };
    const std::map<std::string, adafilter_combiner> combiners{
        {"simes", ADAFILTER_COMBINER_SIMES},
        {"fisher", ADAFILTER_COMBINER_FISHER},
        {"bonferroni", ADAFILTER_COMBINER_BONFERRONI},
    };

    auto* test = app.add_subcommand("test", "run a procedure on a p-value CSV and write the decision TSV");
    test->add_option("--input", input, "CSV: id,<study>...; p-values or NA")->required()->check(CLI::ExistingFile);
    test->add_option("--output", output, "decision TSV path")->required();
    test->add_option("--method", method, "adafilter-bonferroni | adafilter-bh | direct-bonferroni | direct-bh")
        ->check(CLI::IsMember(methods));
    test->add_option("--combiner", combiner, "PC p-value for direct methods")->check(CLI::IsMember(combiners));
    test->add_option("--r", level, "replicability level (>= 2)")->required();
    test->add_option("--alpha", alpha, "error rate level");
    test->add_flag("--adjusted", adjusted, "append a derived adjusted-value column");

    auto* curve = app.add_subcommand("curve", "write estimated V and FDP curves");
    curve->add_option("--input", input, "CSV input")->required()->check(CLI::ExistingFile);
    curve->add_option("--output", output, "curve TSV path")->required();
    curve->add_option("--r", level, "replicability level (>= 2)")->required();
    curve->add_option("--alpha", alpha, "level used for the alpha grid points");

    auto* simulate = app.add_subcommand("simulate", "run a simulation panel from a scenario file");
    simulate->add_option("--scenario", scenario, "key = value scenario file")->required()->check(CLI::ExistingFile);
    simulate->add_option("--output", output, "metrics TSV path")->required();
    simulate->add_option("--seed", seed, "overrides master_seed");
    simulate->add_option("--threads", threads, "worker threads (default: ADAFILTER_THREADS or 1)");

    CLI11_PARSE(app, argc, argv);

    if (test->parsed()) {
        MatrixHandle matrix;
        if (auto s = adafilter_matrix_read_csv(input.c_str(), &matrix.ptr); s != ADAFILTER_OK) return fail(s);
        adafilter_options options;
        adafilter_options_init(&options);
        options.method = methods.at(method);
        options.combiner = combiners.at(combiner);
        options.r = level;
        options.alpha = alpha;
        options.compute_adjusted = adjusted ? 1 : 0;
        adafilter_result* result = nullptr;
        if (auto s = adafilter_run(matrix.ptr, &options, &result); s != ADAFILTER_OK) return fail(s);
        const auto status = adafilter_result_write_tsv(result, matrix.ptr, output.c_str(), adjusted ? 1 : 0);
        if (status == ADAFILTER_OK) {
            std::printf("method      %s\n", method.c_str());
            std::printf("gamma0      %s\n", shortest(adafilter_result_gamma0(result)).c_str());
            std::printf("m           %zu\n", adafilter_result_filtered_count(result));
            std::printf("rejections  %zu\n", adafilter_result_rejection_count(result));
        }
        adafilter_result_free(result);
        return status == ADAFILTER_OK ? 0 : fail(status);
    }

    if (curve->parsed()) {
        MatrixHandle matrix;
        if (auto s = adafilter_matrix_read_csv(input.c_str(), &matrix.ptr); s != ADAFILTER_OK) return fail(s);
        adafilter_curve* table = nullptr;
        if (auto s = adafilter_curve_compute(matrix.ptr, level, alpha, &table); s != ADAFILTER_OK) return fail(s);
        const auto status = adafilter_curve_write_tsv(table, output.c_str());
        if (status == ADAFILTER_OK) std::printf("points      %zu\n", adafilter_curve_size(table));
        adafilter_curve_free(table);
        return status == ADAFILTER_OK ? 0 : fail(status);
    }

    std::uint64_t used = 0;
    std::size_t rows = 0;
    const std::uint64_t* override_seed = seed ? &*seed : nullptr;
    if (auto s = adafilter_simulate(scenario.c_str(), override_seed, resolve_threads(threads), output.c_str(), &used,
                                    &rows);
        s != ADAFILTER_OK) {
        return fail(s);
    }
    std::printf("master_seed %llu\n", static_cast<unsigned long long>(used));
    std::printf("rows        %zu\n", rows);
    return 0;
}
