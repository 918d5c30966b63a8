#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mortot/errors.hpp"
#include "mortot/hmd.hpp"
#include "support.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace mortot;

namespace {

std::filesystem::path fixture(const std::string &name) {
    return std::filesystem::path(MORTOT_FIXTURE_DIR) / name;
}

std::string slurp(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("complete lenient fixture parses, extracts and round-trips") {
    const auto text = slurp(fixture("complete_small.txt"));
    const auto f = hmd::parse(text, {true, "TST.bltper_1x1.txt"});
    CHECK(f.code == "TST");
    CHECK(f.country == "Testland");
    CHECK(f.sex == hmd::Sex::total);
    CHECK(f.kind == hmd::TableKind::period);
    CHECK(f.rows.size() == 8);
    CHECK(f.issues.empty());
    CHECK(f.years() == std::vector<int>{1900, 1901});
    CHECK(f.convertible(1900));
    CHECK(f.convertible(1901));
    CHECK(hmd::serialize(f) == text);

    const auto t = hmd::extract_table(f, 1900);
    CHECK(validate(t).empty());
    CHECK(t.size() == 4);
    CHECK(e0_survival_area(t) == doctest::Approx(6.63).epsilon(1e-12));
    CHECK(std::abs(t.ex()[0] - *f.rows[0].ex) < 0.01);
    CHECK(hmd::extract_all(f).size() == 2);
    CHECK_THROWS_AS(hmd::extract_table(f, 1999), NotFoundError);
}

TEST_CASE("a short grid is a recorded issue under strict parsing") {
    const auto f = hmd::parse(slurp(fixture("complete_small.txt")));
    CHECK(f.issues.size() == 2);
    CHECK_FALSE(f.convertible(1900));
    CHECK(hmd::extract_all(f).empty());
}

TEST_CASE("three-row fixture with ages 0, 1, 110+") {
    const auto text = slurp(fixture("lenient_three_rows.txt"));
    const auto f = hmd::parse(text, {true, ""});
    REQUIRE(f.rows.size() == 3);
    CHECK(f.rows[0].age == 0);
    CHECK(f.rows[1].age == 1);
    CHECK(f.rows[2].age == 110);
    CHECK(f.rows[2].open_interval);
    CHECK(*f.rows[0].mx == 0.01009);
    CHECK(*f.rows[2].ax == 1.8);
    CHECK(*f.rows[1].lx == 99000.0);
    CHECK(hmd::serialize(f) == text);
    // The grid parses but has gaps, so no table can be built from it.
    CHECK_FALSE(f.convertible(2000));
    try {
        (void)hmd::extract_table(f, 2000);
        FAIL("expected a completeness error");
    } catch (const CompletenessError &e) {
        CHECK(e.columns() == "Age");
    }
}

TEST_CASE("missing Lx marks the year as not convertible") {
    const auto text = slurp(fixture("missing_lx.txt"));
    const auto f = hmd::parse(text, {true, ""});
    CHECK_FALSE(f.rows[5].Lx.has_value());
    CHECK(f.convertible(1900));
    CHECK_FALSE(f.convertible(1901));
    CHECK(hmd::serialize(f) == text);
    try {
        (void)hmd::extract_table(f, 1901);
        FAIL("expected a completeness error");
    } catch (const CompletenessError &e) {
        CHECK(e.columns() == "Lx");
        CHECK(e.category() == ErrorCategory::completeness);
    }
    const auto all = hmd::extract_all(f);
    CHECK(all.size() == 1);
    CHECK(all.count(1900) == 1);
}

TEST_CASE("missing ax in the open interval names ax") {
    const auto f = hmd::parse(slurp(fixture("missing_ax_open.txt")), {true, ""});
    try {
        (void)hmd::extract_table(f, 1900);
        FAIL("expected a completeness error");
    } catch (const CompletenessError &e) {
        CHECK(e.columns() == "ax");
    }
}

TEST_CASE("format defects") {
    CHECK_THROWS_AS(hmd::parse(slurp(fixture("malformed_header.txt"))), FormatError);
    CHECK_THROWS_AS(hmd::parse("no header here\n"), FormatError);
    try {
        (void)hmd::parse(slurp(fixture("non_numeric.txt")), {true, ""});
        FAIL("expected a format error");
    } catch (const FormatError &e) {
        CHECK(e.line() == 5);
    }
    try {
        (void)hmd::parse(slurp(fixture("duplicate_row.txt")), {true, ""});
        FAIL("expected a format error");
    } catch (const FormatError &e) {
        CHECK(e.line() == 6);
    }
    CHECK_THROWS_AS(hmd::parse("t\n\nYear Age mx qx ax lx dx Lx Tx ex\n1900 0 1 2\n"), FormatError);
}

TEST_CASE("load reports unreadable files and names the path in format errors") {
    CHECK_THROWS_AS(hmd::load(fixture("does_not_exist.txt")), IoError);
    try {
        (void)hmd::load(fixture("malformed_header.txt"));
        FAIL("expected a format error");
    } catch (const FormatError &e) {
        CHECK(std::string(e.what()).find("malformed_header.txt") != std::string::npos);
    }
    const auto f = hmd::load(fixture("complete_small.txt"), true);
    CHECK(f.code == "complete_small");
}

TEST_CASE("territorial suffixes prefer the later territory") {
    const auto text = slurp(fixture("territorial.txt"));
    const auto f = hmd::parse(text, {true, ""});
    CHECK(f.years() == std::vector<int>{1920});
    CHECK(f.rows[0].year_suffix == '-');
    CHECK(hmd::serialize(f) == text);
    const auto t = hmd::extract_table(f, 1920);
    CHECK(t.lx()[1] == 95000.0);
}

TEST_CASE("labels from the file name") {
    const auto text = slurp(fixture("complete_small.txt"));
    const auto women = hmd::parse(text, {true, "DNK.fltper_1x1.txt"});
    CHECK(women.code == "DNK");
    CHECK(women.sex == hmd::Sex::female);
    CHECK(women.kind == hmd::TableKind::period);
    const auto men = hmd::parse(text, {true, "GBRTENW.mltcoh_1x1.txt"});
    CHECK(men.code == "GBRTENW");
    CHECK(men.sex == hmd::Sex::male);
    CHECK(men.kind == hmd::TableKind::cohort);
}

TEST_CASE("synthetic full-grid files round-trip and reproduce their own ex") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const auto source = testsupport::random_gompertz_table(rng);
        const auto text = testsupport::hmd_text("Synthland, Life tables (period 1x1), Total",
                                                {{1950, source}, {1951, source}});
        const auto f = hmd::parse(text, {false, "SYN.bltper_1x1.txt"});
        CHECK(f.issues.empty());
        CHECK(hmd::serialize(f) == text);
        const auto t = hmd::extract_table(f, 1951);
        CHECK(validate(t).empty());
        CHECK(t.size() == 111);
        CHECK(std::abs(t.ex()[0] - *f.rows[0].ex) < 0.01);
        CHECK(std::abs(e0_survival_area(t) - e0_survival_area(source)) < 0.01);
        CHECK(hmd::extract_all(f).size() == 2);
    }
}

TEST_CASE("published dx that contradict lx are rejected") {
    auto text = slurp(fixture("complete_small.txt"));
    const auto pos = text.find("    5000    87500");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 8, "    5200");
    const auto f = hmd::parse(text, {true, ""});
    CHECK_THROWS_AS(hmd::extract_table(f, 1900), DomainError);
}

TEST_CASE("increasing lx is recorded as an issue") {
    auto text = slurp(fixture("complete_small.txt"));
    const auto pos = text.find("    85000     5000");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 9, "    95000");
    const auto f = hmd::parse(text, {true, ""});
    REQUIRE(f.issues.size() == 1);
    CHECK(f.issues[0].kind == hmd::Issue::Kind::monotonicity);
    CHECK(f.issues[0].year == 1900);
}
