#include "adafilter/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "adafilter/error.hpp"

namespace adafilter {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        fields.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return fields;
}

std::string where(std::size_t line, std::size_t column, std::string_view token) {
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": '" +
           std::string(token) + "'";
}

}  // namespace

LabeledMatrix parse_csv(std::string_view text) {
    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start < text.size();) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw Error(ErrorCode::kParseError, "empty input");

    const auto header = split(lines.front(), ',');
    if (header.size() < 2) {
        throw Error(ErrorCode::kParseError, "header needs an id column and at least one study");
    }
    LabeledMatrix out;
    for (std::size_t c = 1; c < header.size(); ++c) out.studies.emplace_back(header[c]);
    const std::size_t studies = out.studies.size();

    std::vector<double> values;
    std::unordered_set<std::string> seen;
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const std::size_t line_no = l + 1;
        if (trim(lines[l]).empty()) {
            throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + " is blank");
        }
        const auto fields = split(lines[l], ',');
        if (fields.size() != studies + 1) {
            throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + " has " +
                                                    std::to_string(fields.size()) + " fields, expected " +
                                                    std::to_string(studies + 1));
        }
        std::string id(fields[0]);
        if (id.empty()) throw Error(ErrorCode::kParseError, where(line_no, 1, fields[0]) + " empty identifier");
        if (!seen.insert(id).second) {
            throw Error(ErrorCode::kDuplicateIdentifier, "identifier '" + id + "' on line " + std::to_string(line_no));
        }
        out.ids.push_back(std::move(id));
        for (std::size_t c = 1; c <= studies; ++c) {
            const std::string_view token = fields[c];
            if (token == "NA") {
                values.push_back(kMissing);
                continue;
            }
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (token.empty() || ec != std::errc() || ptr != token.data() + token.size() || std::isnan(v)) {
                throw Error(ErrorCode::kParseError, where(line_no, c + 1, token));
            }
            if (!(v >= 0.0 && v <= 1.0)) {
                throw Error(ErrorCode::kOutOfRangeEntry, where(line_no, c + 1, token) + " is outside [0, 1]");
            }
            values.push_back(v);
        }
    }
    if (out.ids.empty()) throw Error(ErrorCode::kParseError, "no hypothesis rows");
    out.matrix = PValueMatrix::from_columns(studies, out.ids.size(), std::move(values));
    return out;
}

LabeledMatrix read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str());
}

void write_csv(std::ostream& out, const LabeledMatrix& data) {
    out << "id";
    for (const auto& s : data.studies) out << ',' << s;
    out << '\n';
    for (std::size_t j = 0; j < data.ids.size(); ++j) {
        out << data.ids[j];
        for (std::size_t i = 0; i < data.matrix.studies(); ++i) out << ',' << format_number(data.matrix.at(i, j));
        out << '\n';
    }
}

std::string format_number(double value) {
    if (std::isnan(value)) return "NA";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

void write_decision_tsv(std::ostream& out, const std::vector<std::string>& ids,
                        const FilterSelectStats& stats, const DecisionResult& result, bool with_adjusted) {
    out << "id\tF\tS\tpc_pvalue\trejected\tuntestable";
    if (with_adjusted) out << "\tadjusted";
    out << '\n';
    const auto capped = [](double v) { return std::isnan(v) ? v : std::min(1.0, v); };
    for (std::size_t j = 0; j < result.rejected.size(); ++j) {
        out << ids[j] << '\t' << format_number(capped(stats.filter[j])) << '\t'
            << format_number(capped(stats.select[j])) << '\t'
            << format_number(result.pc_values ? (*result.pc_values)[j] : kMissing) << '\t'
            << int{result.rejected[j]} << '\t' << int{result.untestable[j]};
        if (with_adjusted) out << '\t' << format_number(result.adjusted ? (*result.adjusted)[j] : kMissing);
        out << '\n';
    }
}

void write_curve_tsv(std::ostream& out, const CurveTable& table) {
    out << "gamma\tv_hat\tfdp_hat\n";
    for (std::size_t t = 0; t < table.gamma.size(); ++t) {
        out << format_number(table.gamma[t]) << '\t' << format_number(table.v_hat[t]) << '\t'
            << format_number(table.fdp_hat[t]) << '\n';
    }
}

}  // namespace adafilter
