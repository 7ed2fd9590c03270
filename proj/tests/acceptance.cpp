// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances are fixed here and not tuned per run.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adafilter/baselines.hpp"
#include "adafilter/io.hpp"
#include "adafilter/procedures.hpp"
#include "adafilter/simlab.hpp"
#include "generators.hpp"

namespace fs = std::filesystem;
using namespace adafilter;
using namespace adafilter::sim;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

const std::pair<int, int> kLevels[] = {{2, 2}, {4, 2}, {8, 2}, {4, 4}, {8, 4}, {8, 8}};

Verdict equivalence() {
    const auto start = Clock::now();
    std::mt19937_64 gen(1001);
    int mismatches = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        const auto inst = fixtures::random_instance(gen);
        const auto stats = compute_filter_select(inst.matrix, inst.level);
        const auto a = adafilter_bonferroni(stats, inst.alpha);
        const auto b = adafilter_bonferroni_twostep(stats, inst.alpha);
        mismatches += !(a.gamma0 == b.gamma0 && a.rejected == b.rejected);
    }
    const double secs = seconds_since(start);
    return {mismatches == 0 && secs < 10.0, fmt("%d instances, %d discrepancies, %.2f s (limit 10 s)", trials, mismatches, secs)};
}

Verdict oracle_equivalence() {
    const auto start = Clock::now();
    std::mt19937_64 gen(2002);
    int mismatches = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const auto inst = fixtures::random_instance(gen);
        const auto stats = compute_filter_select(inst.matrix, inst.level);
        const auto fast = adafilter_bh(stats, inst.alpha);
        const auto slow = adafilter_bh_oracle(stats, inst.alpha);
        mismatches += !(fast.gamma0 == slow.gamma0 && fast.rejected == slow.rejected);
    }
    const double secs = seconds_since(start);
    return {mismatches == 0 && secs < 30.0, fmt("%d instances, %d discrepancies, %.2f s (limit 30 s)", trials, mismatches, secs)};
}

Verdict toy_fixtures() {
    const auto big = compute_filter_select(fixtures::toy_replicated(), 2);
    const auto small = compute_filter_select(fixtures::toy_counterexample(), 2);
    const auto bon_big = adafilter_bonferroni(big, 0.05);
    const auto bh_big = adafilter_bh(big, 0.05);
    const auto bon_small = adafilter_bonferroni(small, 0.05);
    const auto bh_small = adafilter_bh(small, 0.05);
    std::size_t per_study = 0;
    for (auto adj : {Adjustment::kBonferroni, Adjustment::kBH}) {
        for (auto r : per_study_rejections(fixtures::toy_replicated(), adj, 0.05)) per_study += r;
    }
    const bool ok = bon_big.gamma0.value == 0.05 && bh_big.gamma0.value == 0.05 && bon_big.rejection_count() == 1 &&
                    bh_big.rejection_count() == 1 && bon_big.rejected[0] && bh_big.rejected[0] && per_study == 0 &&
                    bon_small.gamma0.value == 0.025 && bh_small.gamma0.value == 0.0 &&
                    bon_small.rejection_count() == 0 && bh_small.rejection_count() == 0;
    return {ok, fmt("replicated: gamma0 %g/%g, R %zu/%zu, per-study R %zu; smaller: gamma0 %g/%g, R %zu/%zu",
                    bon_big.gamma0.value, bh_big.gamma0.value, bon_big.rejection_count(), bh_big.rejection_count(),
                    per_study, bon_small.gamma0.value, bh_small.gamma0.value, bon_small.rejection_count(),
                    bh_small.rejection_count())};
}

SimScenario cell(int n, int r, double pi0, std::size_t M, std::size_t B, double rho, std::size_t block) {
    SimScenario s;
    s.n = n;
    s.r = r;
    s.pi0 = pi0;
    s.M = M;
    s.replications = B;
    s.rho = rho;
    s.block_size = block;
    return s;
}

Verdict pfer_control() {
    const auto start = Clock::now();
    const std::vector<ProcedureSpec> procs{parse_procedure("adafilter-bonferroni")};
    bool ok = true;
    double worst = -1e9;
    std::string where;
    std::uint64_t c = 0;
    for (double pi0 : {0.8, 0.98}) {
        for (auto [n, r] : kLevels) {
            const auto report = run_panel(cell(n, r, pi0, 2000, 100, 0.0, 100), procs, worker_count(), c++);
            const auto& row = report.rows[0];
            const double margin = row.pfer.mean - (1.0 + 3.0 * row.pfer.half_width.value_or(0.0));
            ok = ok && margin <= 0.0;
            if (margin > worst) {
                worst = margin;
                where = fmt("n=%d r=%d pi0=%g PFER %.3f +/- %.3f", n, r, pi0, row.pfer.mean, row.pfer.half_width.value_or(0.0));
            }
        }
    }
    const double secs = seconds_since(start);
    return {ok && secs < 120.0, fmt("12 cells; tightest %s; %.1f s (limit 120 s)", where.c_str(), secs)};
}

struct PanelAverages {
    std::vector<std::string> names;
    std::vector<double> recall;  // averaged over configurations
    std::vector<MetricsReport> reports;
    double seconds = 0.0;
};

PanelAverages average_panel(std::size_t block, std::uint64_t cell_base) {
    const auto start = Clock::now();
    PanelAverages out;
    const auto procs = default_procedures();
    for (const auto& p : procs) out.names.push_back(p.name());
    out.recall.assign(procs.size(), 0.0);
    std::uint64_t c = cell_base;
    for (auto [n, r] : kLevels) {
        auto report = run_panel(cell(n, r, 0.98, 10000, 20, 0.5, block), procs, worker_count(), c++);
        for (std::size_t k = 0; k < procs.size(); ++k) out.recall[k] += report.rows[k].recall.mean / 6.0;
        out.reports.push_back(std::move(report));
    }
    out.seconds = seconds_since(start);
    return out;
}

std::size_t index_of(const PanelAverages& p, const std::string& name) {
    return static_cast<std::size_t>(std::find(p.names.begin(), p.names.end(), name) - p.names.begin());
}

Verdict power_ordering(const PanelAverages& p) {
    const double ada = p.recall[index_of(p, "adafilter-bonferroni")];
    double best = 0.0;
    std::string best_name;
    for (const char* name : {"direct-bonferroni/bonferroni", "direct-bonferroni/fisher", "direct-bonferroni/simes"}) {
        if (p.recall[index_of(p, name)] >= best) {
            best = p.recall[index_of(p, name)];
            best_name = name;
        }
    }
    double worst_pfer = 0.0;
    for (const auto& report : p.reports) {
        for (const auto& row : report.rows) {
            if (row.procedure.kind == ProcedureKind::kDirect && !row.procedure.targets_fdr()) {
                worst_pfer = std::max(worst_pfer, row.pfer.mean);
            }
        }
    }
    const bool ok = ada >= 1.4 * best && worst_pfer <= 0.1 && p.seconds < 600.0;
    return {ok, fmt("recall %.4f vs best direct %.4f (%s), ratio %.2f (need 1.4); max direct PFER %.4f (limit 0.1); %.1f s",
                    ada, best, best_name.c_str(), best > 0 ? ada / best : INFINITY, worst_pfer, p.seconds)};
}

Verdict fdr_behaviour(const PanelAverages& weak, const PanelAverages& strong) {
    bool control = true;
    double worst = -1e9;
    std::string where;
    for (const auto* panel : {&weak, &strong}) {
        for (const auto& report : panel->reports) {
            const auto& row = report.rows[index_of(*panel, "adafilter-bh")];
            const double margin = row.fdr.mean - (0.2 + 3.0 * row.fdr.half_width.value_or(0.0));
            control = control && margin <= 0.0;
            if (margin > worst) {
                worst = margin;
                where = fmt("b=%zu n=%d r=%d FDR %.3f +/- %.3f", report.scenario.block_size, report.scenario.n,
                            report.scenario.r, row.fdr.mean, row.fdr.half_width.value_or(0.0));
            }
        }
    }
    const double ada = weak.recall[index_of(weak, "adafilter-bh")];
    double best = 0.0;
    for (const char* name : {"direct-bh/bonferroni", "direct-bh/fisher", "direct-bh/simes"}) {
        best = std::max(best, weak.recall[index_of(weak, name)]);
    }
    const bool ok = control && ada >= 1.5 * best;
    return {ok, fmt("tightest FDR %s; recall %.4f vs best direct-BH %.4f, ratio %.2f (need 1.5)", where.c_str(), ada,
                    best, best > 0 ? ada / best : INFINITY)};
}

Verdict conditional_validity() {
    const auto start = Clock::now();
    const double betas[] = {0.05, 0.2, 0.5};
    // Mean of the second study's statistic; 0 means both base hypotheses are null.
    const double means[] = {0.0, 1.0, 3.0, 5.0};
    const std::size_t draws = 1000000;
    bool ok = true;
    double worst = -1e9;
    std::string where;
    std::uint64_t lane = 0;
    for (double mu : means) {
        Engine gen = make_stream(7, 0, 0, lane++);
        std::normal_distribution<double> normal;
        std::size_t filtered[3] = {0, 0, 0};
        std::size_t selected[3] = {0, 0, 0};
        for (std::size_t d = 0; d < draws; ++d) {
            const double p1 = two_sided_pvalue(normal(gen));
            const double p2 = two_sided_pvalue(normal(gen) + mu);
            const double f = std::min(p1, p2);
            const double s = std::max(p1, p2);
            for (int k = 0; k < 3; ++k) {
                if (f <= betas[k]) {
                    ++filtered[k];
                    selected[k] += s <= betas[k];
                }
            }
        }
        for (int k = 0; k < 3; ++k) {
            const double n = static_cast<double>(filtered[k]);
            const double rate = static_cast<double>(selected[k]) / n;
            const double se = std::sqrt(rate * (1 - rate) / n);
            const double margin = rate - (betas[k] + 3 * se);
            ok = ok && margin <= 0.0;
            if (margin > worst) {
                worst = margin;
                where = fmt("mu=%g beta=%g: %.4f (bound %.4f)", mu, betas[k], rate, betas[k] + 3 * se);
            }
        }
    }
    const double secs = seconds_since(start);
    return {ok && secs < 60.0, fmt("4 configurations x 1e6 draws; tightest %s; %.1f s", where.c_str(), secs)};
}

Verdict partial_monotonicity() {
    std::mt19937_64 gen(3003);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int trials = 1000;
    int violations = 0;
    int informative[2] = {0, 0};
    for (int proc = 0; proc < 2; ++proc) {
        const auto decide = [&](const FilterSelectStats& s, double a) {
            return proc == 0 ? adafilter_bonferroni(s, a) : adafilter_bh(s, a);
        };
        for (int t = 0; t < trials; ++t) {
            const auto inst = fixtures::random_instance(gen, 8, 50, false);
            const auto before = decide(compute_filter_select(inst.matrix, inst.level), inst.alpha);
            // Prefer a currently rejected hypothesis: those are the ones that could flip.
            std::vector<std::size_t> rejected;
            for (std::size_t j = 0; j < before.rejected.size(); ++j) {
                if (before.rejected[j]) rejected.push_back(j);
            }
            const std::size_t j = rejected.empty() ? gen() % inst.matrix.hypotheses() : rejected[gen() % rejected.size()];
            const std::size_t i = gen() % inst.matrix.studies();
            const auto lowered = fixtures::with_entry(inst.matrix, i, j, inst.matrix.at(i, j) * unit(gen));
            const auto after = decide(compute_filter_select(lowered, inst.level), inst.alpha);
            informative[proc] += before.rejected[j];
            violations += before.rejected[j] && !after.rejected[j];
        }
    }
    return {violations == 0, fmt("%d trials per procedure (%d / %d with j rejected), %d violations", trials,
                                 informative[0], informative[1], violations)};
}

Verdict performance() {
    const std::size_t M = 1000000;
    const std::size_t n = 8;
    std::mt19937_64 gen(4004);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::ostringstream csv;
    csv << "id";
    for (std::size_t i = 0; i < n; ++i) csv << ",s" << i + 1;
    csv << '\n';
    for (std::size_t j = 0; j < M; ++j) {
        const bool signal = j % 50 == 0;
        csv << 'h' << j;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = unit(gen);
            csv << ',' << format_number(signal ? std::pow(u, 12.0) : u);
        }
        csv << '\n';
    }
    const std::string text = csv.str();

    std::string detail;
    bool ok = true;
    for (int level : {2, 4}) {
        const auto start = Clock::now();
        const auto data = parse_csv(text);
        const auto ingest = seconds_since(start);
        const auto stats = compute_filter_select(data.matrix, level);
        const auto result = adafilter_bh(stats, 0.05);
        std::ostringstream out;
        write_decision_tsv(out, data.ids, stats, result);
        const double total = seconds_since(start);
        ok = ok && total <= 5.0;
        detail += fmt("%sr=%d: %.2f s (ingest %.2f s, R=%zu)", detail.empty() ? "" : "; ", level, total, ingest,
                      result.rejection_count());
    }
    return {ok, "M=1e6 n=8 CSV text to decision TSV, " + detail + " (limit 5 s)"};
}

int run_cli(const std::string& args) {
    const std::string command = std::string("\"") + ADAFILTER_CLI + "\" " + args + " >/dev/null";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Verdict determinism() {
    const auto dir = fs::temp_directory_path() / "adafilter_acceptance";
    fs::create_directories(dir);
    const auto scenario = dir / "determinism.scenario";
    std::ofstream(scenario) << "M = 2000\n"
                               "n = 2, 4, 8, 4, 8, 8\n"
                               "r = 2, 2, 2, 4, 4, 8\n"
                               "pi0 = 0.8, 0.98\n"
                               "rho = 0.5\n"
                               "block_size = 100, 1000\n"
                               "replications = 8\n";
    const std::string base = "simulate --scenario " + scenario.string() + " --seed 31337 --output ";
    const auto a = dir / "t1a.tsv";
    const auto b = dir / "t1b.tsv";
    const auto c = dir / "t4.tsv";
    const int s1 = run_cli(base + a.string() + " --threads 1");
    const int s2 = run_cli(base + b.string() + " --threads 1");
    const int s3 = run_cli(base + c.string() + " --threads 4");
    const std::string ta = slurp(a);
    const bool ok = s1 == 0 && s2 == 0 && s3 == 0 && !ta.empty() && ta == slurp(b) && ta == slurp(c);
    return {ok, fmt("exit codes %d/%d/%d, %zu bytes, repeat %s, threads 1 vs 4 %s", s1, s2, s3, ta.size(),
                    ta == slurp(b) ? "identical" : "DIFFERENT", ta == slurp(c) ? "identical" : "DIFFERENT")};
}

}  // namespace

int main() {
    int failures = 0;
    const auto report = [&](int id, const char* name, const std::function<Verdict()>& check) {
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failures += !v.pass;
        std::printf("%s  AC%-2d %-32s %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "bonferroni-definitions-agree", equivalence);
    report(2, "bh-sweep-equals-grid-oracle", oracle_equivalence);
    report(3, "toy-fixtures", toy_fixtures);
    report(4, "pfer-control", pfer_control);

    PanelAverages weak;
    PanelAverages strong;
    report(5, "pfer-panel-power-ordering", [&] {
        weak = average_panel(100, 100);
        return power_ordering(weak);
    });
    report(6, "fdr-panel-control-and-power", [&] {
        if (weak.reports.empty()) weak = average_panel(100, 100);
        strong = average_panel(1000, 200);
        auto v = fdr_behaviour(weak, strong);
        v.detail += fmt("; %.1f s", weak.seconds + strong.seconds);
        return v;
    });
    report(7, "conditional-validity", conditional_validity);
    report(8, "partial-monotonicity", partial_monotonicity);
    report(9, "performance", performance);
    report(10, "simulate-determinism", determinism);

    std::printf("%s: %d of 10 criteria failed\n", failures == 0 ? "OK" : "FAILED", failures);
    return failures == 0 ? 0 : 1;
}
