#include "adafilter/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "adafilter/error.hpp"
#include "adafilter/io.hpp"

namespace adafilter::sim {
namespace {

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorCode::kInvalidScenario, message); }

double binomial(int n, int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

double power_at(double mu, double z) { return normal_cdf(-z - mu) + normal_cdf(mu - z); }

struct ReplicationCounts {
    std::size_t false_rejections = 0;
    std::size_t rejections = 0;
    std::size_t true_rejections = 0;
    std::size_t nonnull = 0;
};

Estimate summarize(const std::vector<double>& values) {
    Estimate e;
    const auto b = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    e.mean = sum / b;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.mean) * (v - e.mean);
        e.half_width = 1.96 * std::sqrt(ss / (b - 1.0)) / std::sqrt(b);
    }
    return e;
}

}  // namespace

void validate(const SimScenario& s) {
    if (s.M < 1) invalid("M must be at least 1");
    if (s.n < 2 || s.n > 20) invalid("n must lie in 2..20");
    if (s.r < 2 || s.r > s.n) invalid("r must satisfy 2 <= r <= n");
    if (!(s.pi0 >= 0.0 && s.pi0 <= 1.0) || !(s.pi_rn >= 0.0 && s.pi_rn <= 1.0)) {
        invalid("pi0 and pi_rn must lie in [0, 1]");
    }
    if (s.pi0 + s.pi_rn > 1.0 + 1e-12) invalid("pi0 + pi_rn must not exceed 1");
    if (!(s.rho >= 0.0 && s.rho < 1.0)) invalid("rho must lie in [0, 1)");
    if (s.block_size < 1 || s.M % s.block_size != 0) invalid("block_size must divide M");
    const double a = s.effective_calibration_alpha();
    if (!(a > 0.0 && a < 1.0)) invalid("calibration_alpha must lie in (0, 1)");
    for (double p : s.power_targets) {
        if (!(p >= a && p < 1.0)) invalid("power targets must lie in [calibration_alpha, 1)");
    }
    if (s.replications < 1) invalid("replications must be at least 1");
    if (!(s.alpha_pfer > 0.0 && s.alpha_pfer <= 1.0) || !(s.alpha_fdr > 0.0 && s.alpha_fdr <= 1.0)) {
        invalid("alpha_pfer and alpha_fdr must lie in (0, 1]");
    }
}

bool TruthAssignment::pc_nonnull(std::size_t j) const { return std::popcount(masks[j]) >= r; }

std::size_t TruthAssignment::pc_nonnull_count() const {
    return static_cast<std::size_t>(
        std::count_if(masks.begin(), masks.end(), [&](std::uint32_t m) { return std::popcount(m) >= r; }));
}

std::vector<double> truth_law(const SimScenario& s) {
    double nonnull_patterns = 0.0;
    for (int k = s.r; k <= s.n; ++k) nonnull_patterns += binomial(s.n, k);
    double partial_patterns = 0.0;
    for (int k = 1; k < s.r; ++k) partial_patterns += binomial(s.n, k);

    const double rest = std::max(0.0, 1.0 - s.pi0 - s.pi_rn);
    std::vector<double> law(std::size_t{1} << s.n);
    for (std::size_t mask = 0; mask < law.size(); ++mask) {
        const int active = std::popcount(mask);
        if (active == 0) {
            law[mask] = s.pi0;
        } else if (active >= s.r) {
            law[mask] = s.pi_rn / nonnull_patterns;
        } else {
            law[mask] = rest / partial_patterns;
        }
    }
    return law;
}

double calibrate_mu(double power, double calibration_alpha) {
    if (!(calibration_alpha > 0.0 && calibration_alpha < 1.0) || !(power > 0.0 && power < 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "power and calibration_alpha must lie in (0, 1)");
    }
    const double z = normal_upper_quantile(calibration_alpha / 2.0);
    if (power == calibration_alpha) return 0.0;
    if (power < calibration_alpha) {
        throw Error(ErrorCode::kNoConvergence, "power below the level of the test has no nonnegative mu");
    }
    double lo = 0.0;
    double hi = 1.0;
    while (power_at(hi, z) < power) {
        hi *= 2.0;
        if (hi > 1e3) throw Error(ErrorCode::kNoConvergence, "could not bracket mu");
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (power_at(mid, z) < power) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double mu = 0.5 * (lo + hi);
    if (std::fabs(power_at(mu, z) - power) > 1e-10) {
        throw Error(ErrorCode::kNoConvergence, "bisection did not reach the power tolerance");
    }
    return mu;
}

Engine make_stream(std::uint64_t seed, std::uint64_t cell, std::uint64_t replication, std::uint64_t lane) {
    const auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    const auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(cell), hi(cell), lo(replication), hi(replication), lo(lane), hi(lane)};
    return Engine(seq);
}

TruthAssignment sample_truth(const SimScenario& scenario, Engine& stream) {
    const auto law = truth_law(scenario);
    std::discrete_distribution<std::uint32_t> pick(law.begin(), law.end());
    TruthAssignment truth;
    truth.n = scenario.n;
    truth.r = scenario.r;
    truth.masks.resize(scenario.M);
    for (auto& m : truth.masks) m = pick(stream);
    return truth;
}

PValueMatrix sample_pvalues(const TruthAssignment& truth, const SimScenario& scenario,
                            std::span<const double, 4> signal_levels, std::span<Engine> studies) {
    if (studies.size() != static_cast<std::size_t>(scenario.n)) {
        throw Error(ErrorCode::kDimensionMismatch, "one stream per study is required");
    }
    if (scenario.block_size == 0 || scenario.M % scenario.block_size != 0) {
        throw Error(ErrorCode::kInvalidScenario, "block_size must divide M");
    }
    const std::size_t n = static_cast<std::size_t>(scenario.n);
    const std::size_t hypotheses = scenario.M;
    const double shared = std::sqrt(scenario.rho);
    const double own = std::sqrt(1.0 - scenario.rho);

    std::vector<double> values(n * hypotheses);
    for (std::size_t i = 0; i < n; ++i) {
        Engine& gen = studies[i];
        std::normal_distribution<double> normal;
        std::uniform_int_distribution<int> level(0, 7);
        for (std::size_t start = 0; start < hypotheses; start += scenario.block_size) {
            const double common = normal(gen);
            for (std::size_t j = start; j < start + scenario.block_size; ++j) {
                double z = shared * common + own * normal(gen);
                if (truth.masks[j] >> i & 1U) {
                    const int pick = level(gen);
                    const double mu = signal_levels[static_cast<std::size_t>(pick / 2)];
                    z += (pick % 2 == 0) ? mu : -mu;
                }
                values[j * n + i] = two_sided_pvalue(z);
            }
        }
    }
    return PValueMatrix::from_columns(n, hypotheses, std::move(values));
}

bool ProcedureSpec::targets_fdr() const {
    return kind == ProcedureKind::kAdaFilterBH ||
           (kind == ProcedureKind::kDirect && direct.adjustment == Adjustment::kBH);
}

std::string ProcedureSpec::name() const {
    switch (kind) {
        case ProcedureKind::kAdaFilterBonferroni: return "adafilter-bonferroni";
        case ProcedureKind::kAdaFilterBH: return "adafilter-bh";
        case ProcedureKind::kDirect: break;
    }
    const std::string adjust = direct.adjustment == Adjustment::kBonferroni ? "direct-bonferroni" : "direct-bh";
    return adjust + "/" + combiner_name(direct.combiner);
}

std::vector<ProcedureSpec> default_procedures() {
    std::vector<ProcedureSpec> out;
    const CombinerKind combiners[] = {CombinerKind::kBonferroni, CombinerKind::kFisher, CombinerKind::kSimes};
    for (Adjustment adjust : {Adjustment::kBonferroni, Adjustment::kBH}) {
        for (CombinerKind c : combiners) {
            out.push_back({ProcedureKind::kDirect, {c, adjust, 0.0}});
        }
        out.push_back({adjust == Adjustment::kBonferroni ? ProcedureKind::kAdaFilterBonferroni
                                                         : ProcedureKind::kAdaFilterBH,
                       {}});
    }
    return out;
}

ProcedureSpec parse_procedure(std::string_view name) {
    for (const auto& spec : default_procedures()) {
        if (spec.name() == name) return spec;
    }
    throw Error(ErrorCode::kInvalidScenario, "unknown procedure '" + std::string(name) + "'");
}

MetricsReport run_panel(const SimScenario& scenario, const std::vector<ProcedureSpec>& procedures,
                        unsigned threads, std::uint64_t cell) {
    validate(scenario);
    std::array<double, 4> levels{};
    for (std::size_t k = 0; k < 4; ++k) {
        levels[k] = calibrate_mu(scenario.power_targets[k], scenario.effective_calibration_alpha());
    }
    const std::size_t reps = scenario.replications;
    const std::size_t procs = procedures.size();
    std::vector<ReplicationCounts> counts(reps * procs);

    const auto run_one = [&](std::size_t b) {
        Engine truth_stream = make_stream(scenario.master_seed, cell, b, 0);
        const TruthAssignment truth = sample_truth(scenario, truth_stream);
        std::vector<Engine> streams;
        streams.reserve(static_cast<std::size_t>(scenario.n));
        for (int i = 0; i < scenario.n; ++i) streams.push_back(make_stream(scenario.master_seed, cell, b, 1 + i));
        const PValueMatrix matrix = sample_pvalues(truth, scenario, levels, streams);

        const FilterSelectStats stats = compute_filter_select(matrix, scenario.r);
        std::map<CombinerKind, std::vector<double>> combined;
        std::vector<std::uint8_t> testable;
        const std::size_t nonnull = truth.pc_nonnull_count();

        for (std::size_t p = 0; p < procs; ++p) {
            const ProcedureSpec& spec = procedures[p];
            const double alpha = spec.targets_fdr() ? scenario.alpha_fdr : scenario.alpha_pfer;
            DecisionResult decision;
            switch (spec.kind) {
                case ProcedureKind::kAdaFilterBonferroni: decision = adafilter_bonferroni(stats, alpha); break;
                case ProcedureKind::kAdaFilterBH: decision = adafilter_bh(stats, alpha); break;
                case ProcedureKind::kDirect: {
                    auto it = combined.find(spec.direct.combiner);
                    if (it == combined.end()) {
                        it = combined.emplace(spec.direct.combiner,
                                              pc_pvalues(matrix, scenario.r, spec.direct.combiner)).first;
                    }
                    testable.assign(stats.testable.begin(), stats.testable.end());
                    decision = adjust_pvalues(it->second, testable, spec.direct.adjustment, alpha);
                    break;
                }
            }
            ReplicationCounts& c = counts[b * procs + p];
            c.nonnull = nonnull;
            for (std::size_t j = 0; j < decision.rejected.size(); ++j) {
                if (!decision.rejected[j]) continue;
                ++c.rejections;
                if (truth.pc_nonnull(j)) {
                    ++c.true_rejections;
                } else {
                    ++c.false_rejections;
                }
            }
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
    if (workers == 1) {
        for (std::size_t b = 0; b < reps; ++b) run_one(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_lock;
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t b; (b = next.fetch_add(1)) < reps;) {
                    try {
                        run_one(b);
                    } catch (...) {
                        std::lock_guard lock(failure_lock);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        pool.clear();
        if (failure) std::rethrow_exception(failure);
    }

    MetricsReport report;
    report.scenario = scenario;
    for (std::size_t p = 0; p < procs; ++p) {
        std::vector<double> pfer(reps), fdr(reps), recall(reps);
        for (std::size_t b = 0; b < reps; ++b) {
            const ReplicationCounts& c = counts[b * procs + p];
            pfer[b] = static_cast<double>(c.false_rejections);
            fdr[b] = static_cast<double>(c.false_rejections) / static_cast<double>(std::max<std::size_t>(c.rejections, 1));
            recall[b] = static_cast<double>(c.true_rejections) / static_cast<double>(std::max<std::size_t>(c.nonnull, 1));
        }
        ProcedureMetrics row;
        row.procedure = procedures[p];
        row.alpha = procedures[p].targets_fdr() ? scenario.alpha_fdr : scenario.alpha_pfer;
        row.pfer = summarize(pfer);
        row.fdr = summarize(fdr);
        row.recall = summarize(recall);
        row.replications = reps;
        report.rows.push_back(row);
    }
    return report;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = value.find(',', start);
        const auto item = trim(value.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (item.empty()) invalid("empty list item in '" + std::string(value) + "'");
        out.emplace_back(item);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double to_real(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) invalid("key '" + key + "': bad number '" + text + "'");
    return v;
}

std::uint64_t to_count(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) invalid("key '" + key + "': bad integer '" + text + "'");
    return v;
}

}  // namespace

Panel parse_scenario(std::string_view text) {
    std::map<std::string, std::vector<std::string>> entries;
    std::size_t line_no = 0;
    for (std::size_t start = 0; start <= text.size();) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) invalid("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key(trim(line.substr(0, eq)));
        if (entries.count(key)) invalid("duplicate key '" + key + "'");
        entries[key] = split_list(trim(line.substr(eq + 1)));
    }

    static const char* const known[] = {"M",          "n",           "r",           "pi0",          "pi_rn",
                                        "rho",        "block_size",  "power_targets", "calibration_alpha",
                                        "replications", "master_seed", "alpha_pfer",  "alpha_fdr",    "procedures"};
    for (const auto& [key, _] : entries) {
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) ==
            std::end(known)) {
            invalid("unknown key '" + key + "'");
        }
    }
    const auto scalar = [&](const std::string& key) -> const std::string* {
        const auto it = entries.find(key);
        if (it == entries.end()) return nullptr;
        if (it->second.size() != 1) invalid("key '" + key + "' takes a single value");
        return &it->second.front();
    };
    const auto list = [&](const std::string& key, std::vector<std::string> fallback) {
        const auto it = entries.find(key);
        return it == entries.end() ? fallback : it->second;
    };

    SimScenario base;
    if (const auto it = entries.find("power_targets"); it != entries.end()) {
        if (it->second.size() != 4) invalid("power_targets needs four values");
        for (std::size_t k = 0; k < 4; ++k) base.power_targets[k] = to_real("power_targets", it->second[k]);
    }
    if (const auto* v = scalar("calibration_alpha"); v != nullptr && *v != "auto") {
        base.calibration_alpha = to_real("calibration_alpha", *v);
    }
    if (const auto* v = scalar("replications")) base.replications = to_count("replications", *v);
    if (const auto* v = scalar("master_seed")) base.master_seed = to_count("master_seed", *v);
    if (const auto* v = scalar("alpha_pfer")) base.alpha_pfer = to_real("alpha_pfer", *v);
    if (const auto* v = scalar("alpha_fdr")) base.alpha_fdr = to_real("alpha_fdr", *v);

    const auto ns = list("n", {std::to_string(base.n)});
    const auto rs = list("r", {std::to_string(base.r)});
    if (ns.size() != rs.size()) invalid("n and r lists must have the same length");

    Panel panel;
    for (std::size_t c = 0; c < ns.size(); ++c) {
        for (const auto& pi0 : list("pi0", {"0.8"})) {
            for (const auto& b : list("block_size", {"100"})) {
                for (const auto& rho : list("rho", {"0"})) {
                    for (const auto& m : list("M", {"10000"})) {
                        for (const auto& pi_rn : list("pi_rn", {"0.01"})) {
                            SimScenario cell = base;
                            cell.n = static_cast<int>(to_count("n", ns[c]));
                            cell.r = static_cast<int>(to_count("r", rs[c]));
                            cell.pi0 = to_real("pi0", pi0);
                            cell.block_size = to_count("block_size", b);
                            cell.rho = to_real("rho", rho);
                            cell.M = to_count("M", m);
                            cell.pi_rn = to_real("pi_rn", pi_rn);
                            validate(cell);
                            panel.cells.push_back(cell);
                        }
                    }
                }
            }
        }
    }
    if (const auto it = entries.find("procedures"); it != entries.end() && !(it->second.size() == 1 && it->second[0] == "all")) {
        for (const auto& name : it->second) panel.procedures.push_back(parse_procedure(name));
    } else {
        panel.procedures = default_procedures();
    }
    return panel;
}

Panel read_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

void write_metrics_header(std::ostream& out) {
    out << "cell\tM\tn\tr\tpi0\tpi_rn\trho\tblock_size\treplications\tmaster_seed\tprocedure\talpha"
           "\tpfer_mean\tpfer_ci_low\tpfer_ci_high\tfdr_mean\tfdr_ci_low\tfdr_ci_high"
           "\trecall_mean\trecall_ci_low\trecall_ci_high\n";
}

void write_metrics_rows(std::ostream& out, std::size_t cell, const MetricsReport& report) {
    const SimScenario& s = report.scenario;
    const auto estimate = [&](const Estimate& e) {
        out << '\t' << format_number(e.mean);
        if (e.half_width) {
            out << '\t' << format_number(e.mean - *e.half_width) << '\t' << format_number(e.mean + *e.half_width);
        } else {
            out << "\tNA\tNA";
        }
    };
    for (const auto& row : report.rows) {
        out << cell << '\t' << s.M << '\t' << s.n << '\t' << s.r << '\t' << format_number(s.pi0) << '\t'
            << format_number(s.pi_rn) << '\t' << format_number(s.rho) << '\t' << s.block_size << '\t'
            << s.replications << '\t' << s.master_seed << '\t' << row.procedure.name() << '\t'
            << format_number(row.alpha);
        estimate(row.pfer);
        estimate(row.fdr);
        estimate(row.recall);
        out << '\n';
    }
}

void run_panel_file(const Panel& panel, unsigned threads, std::ostream& out) {
    write_metrics_header(out);
    for (std::size_t c = 0; c < panel.cells.size(); ++c) {
        write_metrics_rows(out, c, run_panel(panel.cells[c], panel.procedures, threads, c));
    }
}

}  // namespace adafilter::sim
