#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "adafilter/baselines.hpp"
#include "adafilter/error.hpp"
#include "adafilter/io.hpp"

using namespace adafilter;

namespace {

ErrorCode parse_error(const std::string& text) {
    try {
        parse_csv(text);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::kOk;
}

}  // namespace

TEST(Csv, ParsesHypothesesAsRows) {
    const auto data = parse_csv("id,s1,s2\ng1,0.03,0.04\ng2,0.2,0.9");
    EXPECT_EQ(data.matrix.studies(), 2u);
    EXPECT_EQ(data.matrix.hypotheses(), 2u);
    EXPECT_EQ(data.ids, (std::vector<std::string>{"g1", "g2"}));
    EXPECT_EQ(data.studies, (std::vector<std::string>{"s1", "s2"}));
    EXPECT_EQ(data.matrix.at(0, 1), 0.2);
    EXPECT_EQ(data.matrix.at(1, 0), 0.04);
}

TEST(Csv, AcceptsCrLfAndNa) {
    const auto data = parse_csv("id,a,b,c\r\nx,NA,0.5,1e-8\r\ny,0,1,NA\r\n");
    EXPECT_TRUE(is_missing(data.matrix.at(0, 0)));
    EXPECT_EQ(data.matrix.at(2, 0), 1e-8);
    EXPECT_TRUE(is_missing(data.matrix.at(2, 1)));
    EXPECT_EQ(data.matrix.available(0), 2u);
}

TEST(Csv, Errors) {
    EXPECT_EQ(parse_error("id,s1,s2\ng1,0.03,1.5\n"), ErrorCode::kOutOfRangeEntry);
    EXPECT_EQ(parse_error("id,s1,s2\ng1,0.03,abc\n"), ErrorCode::kParseError);
    EXPECT_EQ(parse_error("id,s1,s2\ng1,0.03\n"), ErrorCode::kParseError);
    EXPECT_EQ(parse_error("id,s1,s2\ng1,0.03,0.1\ng1,0.2,0.3\n"), ErrorCode::kDuplicateIdentifier);
    EXPECT_EQ(parse_error("id,s1,s2\ng1,NA,NA\n"), ErrorCode::kEmptyColumn);
    EXPECT_EQ(parse_error(""), ErrorCode::kParseError);
    EXPECT_EQ(parse_error("id,s1\n"), ErrorCode::kParseError);
    EXPECT_EQ(parse_error("id,s1,s2\ng1,0.1x,0.2\n"), ErrorCode::kParseError);
}

TEST(Csv, ParseErrorsNameLineAndColumn) {
    try {
        parse_csv("id,s1,s2\ng1,0.1,0.2\ng2,0.3,oops\n");
        FAIL();
    } catch (const Error& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("line 3"), std::string::npos) << what;
        EXPECT_NE(what.find("column 3"), std::string::npos) << what;
        EXPECT_NE(what.find("oops"), std::string::npos) << what;
    }
}

TEST(Csv, MissingFileIsAnIoError) {
    try {
        read_csv("/nonexistent/path.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kIoError);
    }
}

TEST(Csv, RoundTripPreservesValuesAndMissingness) {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::ostringstream text;
    text << "id,s1,s2,s3\n";
    for (int j = 0; j < 200; ++j) {
        text << "h" << j;
        for (int i = 0; i < 3; ++i) {
            const double u = unit(gen);
            if (i > 0 && u < 0.1) {
                text << ",NA";
            } else {
                text.precision(17);
                text << ',' << std::pow(u, 8.0);
            }
        }
        text << '\n';
    }
    const auto first = parse_csv(text.str());
    std::ostringstream emitted;
    write_csv(emitted, first);
    const auto second = parse_csv(emitted.str());
    ASSERT_EQ(second.ids, first.ids);
    for (std::size_t j = 0; j < first.matrix.hypotheses(); ++j) {
        for (std::size_t i = 0; i < first.matrix.studies(); ++i) {
            const double a = first.matrix.at(i, j);
            const double b = second.matrix.at(i, j);
            ASSERT_EQ(is_missing(a), is_missing(b));
            if (!is_missing(a)) EXPECT_LE(std::abs(a - b), 1e-12 * std::abs(a));
        }
    }
}

TEST(Format, ShortestRoundTrip) {
    EXPECT_EQ(format_number(0.05), "0.05");
    EXPECT_EQ(format_number(1.0), "1");
    EXPECT_EQ(format_number(0.0), "0");
    EXPECT_EQ(format_number(kMissing), "NA");
    EXPECT_EQ(std::stod(format_number(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(DecisionTsv, ToyFixtureLayout) {
    const auto data = parse_csv("id,s1,s2\ng1,0.03,0.04\ng2,0.2,0.9\n");
    const auto stats = compute_filter_select(data.matrix, 2);
    const auto result = adafilter_bh(stats, 0.05);
    std::ostringstream out;
    write_decision_tsv(out, data.ids, stats, result);
    EXPECT_EQ(out.str(),
              "id\tF\tS\tpc_pvalue\trejected\tuntestable\n"
              "g1\t0.03\t0.04\tNA\t1\t0\n"
              "g2\t0.2\t0.9\tNA\t0\t0\n");
}

TEST(DecisionTsv, CapsStatisticsAndAppendsAdjusted) {
    const auto data = parse_csv("id,a,b,c\nx,0.6,0.7,0.8\ny,0.001,0.002,NA\nz,0.5,NA,NA\n");
    const auto stats = compute_filter_select(data.matrix, 2);
    auto result = direct_adjust(data.matrix, 2, {CombinerKind::kBonferroni, Adjustment::kBonferroni, 0.05});
    std::ostringstream out;
    write_decision_tsv(out, data.ids, stats, result, true);
    EXPECT_EQ(out.str(),
              "id\tF\tS\tpc_pvalue\trejected\tuntestable\tadjusted\n"
              "x\t1\t1\t1\t0\t0\t1\n"
              "y\t0.001\t0.002\t0.002\t1\t0\t0.004\n"
              "z\tNA\tNA\tNA\t0\t1\tNA\n");
}

TEST(CurveTsv, ToyFixtureRow) {
    const auto data = parse_csv("id,s1,s2\ng1,0.03,0.04\ng2,0.2,0.9\n");
    const auto stats = compute_filter_select(data.matrix, 2);
    std::ostringstream out;
    write_curve_tsv(out, curves(stats, default_curve_grid(stats, 0.05)));
    EXPECT_NE(out.str().find("\n0.05\t0.05\t0.05\n"), std::string::npos);
    EXPECT_EQ(out.str().rfind("gamma\tv_hat\tfdp_hat\n0\t0\t0\n", 0), 0u);
}

TEST(CurveTsv, BonferroniThresholdSitsWhereVHatCrossesAlpha) {
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> values(2 * 500);
    for (auto& v : values) v = unit(gen);
    const auto matrix = PValueMatrix::from_columns(2, 500, values);
    const auto stats = compute_filter_select(matrix, 2);
    const double alpha = 0.2;
    const auto result = adafilter_bonferroni(stats, alpha);
    const double m = static_cast<double>(result.filtered_count);
    const double at = curves(stats, std::vector<double>{alpha / m}).v_hat[0];
    EXPECT_LE(at, alpha * (1 + 1e-12));
    if (result.filtered_count > 1) {
        const double before = curves(stats, std::vector<double>{alpha / (m - 1)}).v_hat[0];
        EXPECT_GT(before, alpha);
    }
}
