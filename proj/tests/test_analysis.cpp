#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mortot/analysis.hpp"
#include "mortot/errors.hpp"
#include "mortot/plot_data.hpp"
#include "mortot/report_io.hpp"
#include "support.hpp"

#include <json.hpp>

#include <cmath>
#include <set>
#include <sstream>

using namespace mortot;
using namespace mortot::analysis;
using testsupport::TempDir;

namespace {

StudyConfig sample_config(const std::filesystem::path &dir, std::size_t n) {
    StudyConfig c;
    c.data_dir = dir;
    c.kind = StudyKind::sample_pairs;
    c.sample_size = n;
    c.seed = 20240101;
    return c;
}

// Female tables with a lower hazard than the male ones at every age.
void write_sex_pair(const std::filesystem::path &dir, const std::string &code, double alpha,
                    const std::vector<int> &years) {
    std::vector<std::pair<int, LifeTable>> women;
    std::vector<std::pair<int, LifeTable>> men;
    for (const int y : years) {
        women.emplace_back(y, build_from_mx(testsupport::gompertz_mx(alpha, 0.1, 1e-3)));
        men.emplace_back(y, build_from_mx(testsupport::gompertz_mx(alpha * 1.6, 0.1, 1e-3)));
    }
    testsupport::write_file(dir / (code + ".fltper_1x1.txt"),
                            testsupport::hmd_text(code + ", Life tables (period 1x1), Females", women));
    testsupport::write_file(dir / (code + ".mltper_1x1.txt"),
                            testsupport::hmd_text(code + ", Life tables (period 1x1), Males", men));
}

} // namespace

TEST_CASE("two countries, one year, one draw") {
    TempDir dir("sample1");
    testsupport::write_synthetic_corpus(dir.path(), {"AAA", "BBB"}, {2000}, 1);
    const auto r = run_sample_study(sample_config(dir.path(), 1));
    REQUIRE(r.pairs.size() == 1);
    CHECK(r.pairs[0].a.code == "AAA");
    CHECK(r.pairs[0].b.code == "BBB");
    CHECK(r.pairs[0].a.year == 2000);
    CHECK(r.summary.pairs == 1);
    CHECK(std::isnan(r.summary.pearson_w1_e0_gap));
}

TEST_CASE("sampling is deterministic and independent of the thread count") {
    TempDir dir("sample2");
    testsupport::write_synthetic_corpus(dir.path(), {"AAA", "BBB", "CCC", "DDD", "EEE"},
                                        {1990, 1991, 1992, 1993}, 2);
    auto c = sample_config(dir.path(), 25);
    c.threads = 1;
    const auto one = format_study(run_study(c));
    c.threads = 8;
    const auto many = format_study(run_study(c));
    CHECK(one == many);
    CHECK(one == format_study(run_study(c)));
    c.seed += 1;
    CHECK(one != format_study(run_study(c)));

    // Draws are distinct (pair, year) triples.
    const auto r = run_study(c);
    std::set<std::tuple<std::string, std::string, int>> seen;
    for (const auto &p : r.pairs) {
        CHECK(p.a.code < p.b.code);
        CHECK(p.a.year == p.b.year);
        seen.insert({p.a.code, p.b.code, p.a.year});
    }
    CHECK(seen.size() == 25);
}

TEST_CASE("sample size beyond the candidate count takes every candidate") {
    TempDir dir("sample3");
    testsupport::write_synthetic_corpus(dir.path(), {"AAA", "BBB", "CCC"}, {2000, 2001}, 3);
    CHECK(run_sample_study(sample_config(dir.path(), 100)).pairs.size() == 6);
}

TEST_CASE("global year mode shares one year") {
    TempDir dir("sample4");
    testsupport::write_synthetic_corpus(dir.path(), {"AAA", "BBB", "CCC", "DDD"},
                                        {2000, 2001, 2002}, 4);
    auto c = sample_config(dir.path(), 100);
    c.year_mode = YearMode::global;
    const auto r = run_sample_study(c);
    CHECK(r.pairs.size() == 6);
    for (const auto &p : r.pairs) {
        CHECK(p.a.year == r.pairs.front().a.year);
    }
}

TEST_CASE("setup and parse failures abort the study") {
    TempDir dir("setup");
    CHECK_THROWS_AS(run_sample_study(sample_config(dir.path() / "missing", 5)), SetupError);
    testsupport::write_synthetic_corpus(dir.path(), {"AAA"}, {2000}, 5);
    CHECK_THROWS_AS(run_sample_study(sample_config(dir.path(), 5)), SetupError);

    testsupport::write_file(dir.path() / "BAD.bltper_1x1.txt", "title\n\nYear Age mx\n");
    try {
        (void)run_sample_study(sample_config(dir.path(), 5));
        FAIL("expected a format error");
    } catch (const FormatError &e) {
        CHECK(std::string(e.what()).find("BAD.bltper_1x1.txt") != std::string::npos);
    }
}

TEST_CASE("sex gap: women dominate men and W1 equals the e0 gap") {
    TempDir dir("sexgap");
    write_sex_pair(dir.path(), "AAA", 5e-5, {1995, 1996});
    write_sex_pair(dir.path(), "BBB", 8e-5, {1995});
    StudyConfig c;
    c.data_dir = dir.path();
    c.kind = StudyKind::sex_gap;
    const auto r = run_study(c);
    REQUIRE(r.pairs.size() == 3);
    for (const auto &p : r.pairs) {
        CHECK(p.a.sex == hmd::Sex::female);
        CHECK(p.b.sex == hmd::Sex::male);
        CHECK(p.a.code == p.b.code);
        CHECK(p.report.dominance == Dominance::a_dominates);
        CHECK(std::abs(p.report.w1 - p.report.e0_gap_abs) < 1e-9);
    }
    CHECK(r.summary.non_crossing == 3);
    REQUIRE(r.summary.by_year.size() == 2);
    CHECK(r.summary.by_year[0].year == 1995);
    CHECK(r.summary.by_year[0].pairs == 2);
    CHECK(r.summary.by_year[0].max_abs_diff < 1e-9);
}

TEST_CASE("cohort pairs: every unordered pair of distinct population-cohort units") {
    TempDir dir("cohort");
    testsupport::write_synthetic_corpus(dir.path(), {"AAA", "BBB"}, {1900, 1901}, 6, "b", "coh");
    StudyConfig c;
    c.data_dir = dir.path();
    c.kind = StudyKind::cohort_pairs;
    c.countries = {"AAA", "BBB"};
    const auto r = run_study(c);
    CHECK(r.pairs.size() == 6);
    std::size_t same_population = 0;
    for (const auto &p : r.pairs) {
        CHECK_FALSE((p.a.code == p.b.code && p.a.year == p.b.year));
        same_population += p.a.code == p.b.code ? 1 : 0;
    }
    CHECK(same_population == 2);
}

TEST_CASE("all pairs by year") {
    TempDir dir("allpairs");
    testsupport::write_synthetic_corpus(dir.path(), {"AAA", "BBB", "CCC"}, {1990, 1991, 2021}, 7);
    StudyConfig c;
    c.data_dir = dir.path();
    c.kind = StudyKind::all_pairs_by_year;
    const auto r = run_study(c);
    CHECK(r.pairs.size() == 6); // 2021 is outside the default range
}

TEST_CASE("summary statistics") {
    TempDir dir("summary");
    testsupport::write_synthetic_corpus(dir.path(), {"AAA", "BBB", "CCC", "DDD", "EEE", "FFF"},
                                        {2000, 2001, 2002}, 8);
    const auto r = run_sample_study(sample_config(dir.path(), 30));
    const auto &s = r.summary;
    CHECK(s.pairs == 30);
    for (const auto *m : {&s.w1, &s.e0_gap_abs, &s.abs_diff, &s.non_overlap}) {
        CHECK(m->min <= m->mean);
        CHECK(m->mean <= m->max);
    }
    CHECK(s.pearson_w1_e0_gap >= -1.0);
    CHECK(s.pearson_w1_e0_gap <= 1.0);
    CHECK(s.w1.mean >= s.e0_gap_abs.mean);
    for (const auto &p : r.pairs) {
        CHECK(p.report.w1 >= p.report.e0_gap_abs - 1e-12);
        if (p.report.dominance != Dominance::crossing) {
            CHECK(std::abs(p.report.w1 - p.report.e0_gap_abs) < 1e-9);
        }
    }

    // Recomputed from the emitted stream, the summary matches at print precision.
    std::istringstream in(format_study(r));
    const auto back = read_pair_records(in);
    REQUIRE(back.size() == r.pairs.size());
    const auto again = summarize(back);
    CHECK(again.pairs == s.pairs);
    CHECK(again.non_crossing == s.non_crossing);
    CHECK(std::abs(again.w1.max - s.w1.max) <= 5e-5);
    CHECK(std::abs(again.w1.mean - s.w1.mean) <= 5e-5);
    CHECK(std::abs(again.e0_gap_abs.min - s.e0_gap_abs.min) <= 5e-5);
}

TEST_CASE("summary of nothing is NaN, not zero") {
    const auto s = summarize({});
    CHECK(s.pairs == 0);
    CHECK(std::isnan(s.w1.mean));
    CHECK(s.w1.count == 0);
}

TEST_CASE("CSV and JSON carry the same records") {
    TempDir dir("formats");
    testsupport::write_synthetic_corpus(dir.path(), {"AAA", "BBB", "CCC"}, {2000, 2001}, 9);
    auto c = sample_config(dir.path(), 4);
    const auto csv = run_sample_study(c);
    c.format = OutputFormat::json;
    const auto json = run_sample_study(c);
    const auto csv_text = format_study(csv);
    const auto json_text = format_study(json);
    CHECK(csv_text.rfind("# mortot study=sample seed=20240101", 0) == 0);

    std::istringstream a(csv_text);
    std::istringstream b(json_text);
    const auto ra = read_pair_records(a);
    const auto rb = read_pair_records(b);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t k = 0; k < ra.size(); ++k) {
        CHECK(ra[k].a.code == rb[k].a.code);
        CHECK(ra[k].report.w1 == doctest::Approx(rb[k].report.w1));
        CHECK(ra[k].report.dominance == rb[k].report.dominance);
    }
    std::istringstream lines(json_text);
    std::string first;
    std::getline(lines, first);
    CHECK(nlohmann::json::parse(first)["type"] == "header");
}

TEST_CASE("infinite KL is a literal in CSV and null with a flag in JSON") {
    PairRecord rec;
    rec.a = {"AAA", hmd::Sex::total, 2000};
    rec.b = {"BBB", hmd::Sex::total, 2000};
    rec.report.kl_ab = std::numeric_limits<double>::infinity();
    const auto csv = format_pair(rec, OutputFormat::csv);
    CHECK(csv.find(",inf,") != std::string::npos);
    const auto j = nlohmann::json::parse(format_pair(rec, OutputFormat::json));
    CHECK(j["kl_ab"].is_null());
    CHECK(j["kl_ab_infinite"] == true);
    CHECK(j["kl_ba_infinite"] == false);

    std::istringstream in(format_pair(rec, OutputFormat::json));
    const auto back = read_pair_records(in);
    REQUIRE(back.size() == 1);
    CHECK(std::isinf(back[0].report.kl_ab));
}

TEST_CASE("plot data") {
    PairRecord rec;
    rec.report.w1 = 1.25;
    rec.report.e0_gap_abs = 1.0;
    const auto scatter = emit_plot_data({rec}, PlotKind::scatter, OutputFormat::csv);
    CHECK(scatter == "w1,e0_gap_abs,kl_symmetric,non_overlap\n1.2500,1.0000,0.0000,0.0000\n");
    CHECK_THROWS_AS(emit_plot_data({}, PlotKind::scatter, OutputFormat::csv), DomainError);
    CHECK_THROWS_AS(emit_plot_data({rec}, PlotKind::cdf_overlay, OutputFormat::csv), DomainError);
    CHECK_THROWS_AS(emit_plot_data({rec}, PlotKind::histogram, OutputFormat::csv, 0.0),
                    DomainError);

    // Default 0.5-year bins: w1 = 1.25 lands in [1.0, 1.5).
    const auto hist = emit_plot_data({rec}, PlotKind::histogram, OutputFormat::json);
    const auto doc = nlohmann::json::parse(hist);
    CHECK(doc["columns"][0] == "measure");
    long long w1_total = 0;
    for (const auto &row : doc["rows"]) {
        if (row[0] == "w1") {
            w1_total += row[3].get<long long>();
            if (row[3] == 1) {
                CHECK(row[1].get<double>() == 1.0);
            }
        }
    }
    CHECK(w1_total == 1);

    std::mt19937_64 rng(10);
    const auto t = testsupport::random_gompertz_table(rng);
    const auto overlay = nlohmann::json::parse(emit_overlay(t, t, PlotKind::cdf_overlay, OutputFormat::json));
    CHECK(overlay["rows"].size() == t.size());
    for (const auto &row : overlay["rows"]) {
        CHECK(row[1] == row[2]);
        CHECK(row[3] == row[4]);
    }
    const auto deaths = emit_overlay(t, t, PlotKind::distribution_overlay, OutputFormat::csv);
    CHECK(deaths.rfind("age,deaths_a,deaths_b\n", 0) == 0);
    CHECK_THROWS_AS(emit_overlay(t, t, PlotKind::scatter, OutputFormat::csv), DomainError);
}

TEST_CASE("Rng stays in range and repeats with its seed") {
    Rng a(99);
    Rng b(99);
    for (int k = 0; k < 1000; ++k) {
        const auto x = a.below(7);
        CHECK(x < 7);
        CHECK(x == b.below(7));
    }
}
