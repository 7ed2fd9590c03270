#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "adafilter/pc_core.hpp"
#include "adafilter/procedures.hpp"

namespace adafilter {

// A p-value matrix with the row (hypothesis) and column (study) labels of
// the file it came from.
struct LabeledMatrix {
    PValueMatrix matrix;
    std::vector<std::string> ids;
    std::vector<std::string> studies;
};

// CSV layout: header "id,<study>,<study>,..."; one line per hypothesis with
// its identifier followed by decimal p-values or NA. Throws ParseError
// (with 1-based line and column), OutOfRangeEntry, DuplicateIdentifier.
LabeledMatrix parse_csv(std::string_view text);
LabeledMatrix read_csv(const std::string& path);

void write_csv(std::ostream& out, const LabeledMatrix& data);

// Shortest decimal that reads back as the same double; NA for NaN.
std::string format_number(double value);

// id, F, S (capped at 1), pc_pvalue, rejected, untestable [, adjusted]
void write_decision_tsv(std::ostream& out, const std::vector<std::string>& ids,
                        const FilterSelectStats& stats, const DecisionResult& result,
                        bool with_adjusted = false);

void write_curve_tsv(std::ostream& out, const CurveTable& table);

}  // namespace adafilter
