#pragma once

#include "mortot/distances.hpp"
#include "mortot/hmd.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace mortot::analysis {

enum class StudyKind { sample_pairs, all_pairs_by_year, sex_gap, cohort_pairs };
enum class OutputFormat { csv, json };

/// How the sample study picks years: one per pair, or one shared year.
enum class YearMode { per_pair, global };

std::string_view to_string(StudyKind kind);
std::string_view to_string(OutputFormat format);
std::string_view to_string(YearMode mode);

struct YearRange {
    int first = 0;
    int last = 0;
    bool contains(int year) const { return year >= first && year <= last; }
};

/// The eleven cohort populations, as HMD codes.
const std::vector<std::string> &default_cohort_countries();

struct StudyConfig {
    std::filesystem::path data_dir;
    StudyKind kind = StudyKind::sample_pairs;
    std::size_t sample_size = 5000;
    /// Defaults per study: all years for sampling, 1990-2020 for the
    /// by-year and sex-gap studies, 1890-1920 for cohorts.
    std::optional<YearRange> years;
    /// Ignored by the sex-gap study, which always pairs female with male.
    hmd::Sex sex = hmd::Sex::total;
    std::uint64_t seed = 1;
    YearMode year_mode = YearMode::per_pair;
    CompareOptions metrics;
    OutputFormat format = OutputFormat::csv;
    /// Population codes to include; empty means all (cohort study: the
    /// eleven default populations).
    std::vector<std::string> countries;
    /// Worker threads for pair evaluation; 0 picks the hardware count.
    unsigned threads = 0;
};

YearRange effective_years(const StudyConfig &config);

/// One life table in the corpus: population code, sex and year (or cohort).
struct PopulationKey {
    std::string code;
    hmd::Sex sex = hmd::Sex::total;
    int year = 0;
};

struct PairRecord {
    std::size_t index = 0;
    PopulationKey a;
    PopulationKey b;
    PairReport report;
};

struct MeasureStats {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    std::size_t count = 0; // finite values only
};

struct YearGapStats {
    int year = 0;
    std::size_t pairs = 0;
    double mean_abs_diff = 0.0; // mean of |w1 - |e0 gap||
    double max_abs_diff = 0.0;
};

struct SummaryStats {
    std::size_t pairs = 0;
    MeasureStats w1;
    MeasureStats e0_gap_abs;
    MeasureStats abs_diff; // |w1 - |e0 gap||
    MeasureStats kl_symmetric;
    MeasureStats non_overlap;
    std::size_t infinite_kl = 0;
    /// Pearson r between w1 and |e0 gap|; NaN when either has zero variance.
    double pearson_w1_e0_gap = 0.0;
    std::size_t non_crossing = 0;
    std::vector<YearGapStats> by_year; // keyed by the year of population A
};

/// Fixed-order reduction over the records.
SummaryStats summarize(const std::vector<PairRecord> &records);

struct StudyResult {
    StudyConfig config;
    std::vector<PairRecord> pairs;
    SummaryStats summary;
};

/// All tables of one population file that are complete.
struct Population {
    std::string code;
    hmd::Sex sex = hmd::Sex::total;
    hmd::TableKind kind = hmd::TableKind::period;
    std::filesystem::path path;
    std::map<int, LifeTable> tables;
};

/// Recursively finds `<CODE>.<s>lt<per|coh>_1x1.txt` files under `dir` and
/// loads those matching `kind` and `sex`, sorted by code. An empty `codes`
/// keeps every population. Throws SetupError if the directory is missing
/// and rethrows parse errors prefixed with the offending path.
std::vector<Population> load_corpus(const std::filesystem::path &dir, hmd::TableKind kind,
                                    hmd::Sex sex, const std::vector<std::string> &codes = {});

/// Seeded draws that are identical on every platform: mt19937_64 output
/// reduced to a range by rejection.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    /// Uniform on [0, n); n > 0.
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

StudyResult run_sample_study(const StudyConfig &config);
StudyResult run_all_pairs_study(const StudyConfig &config);
StudyResult run_sex_gap_study(const StudyConfig &config);
StudyResult run_cohort_study(const StudyConfig &config);

/// Dispatches on config.kind.
StudyResult run_study(const StudyConfig &config);

struct PairTask {
    PopulationKey a;
    PopulationKey b;
    const LifeTable *table_a = nullptr;
    const LifeTable *table_b = nullptr;
};

/// Evaluates the listed pairs, possibly in parallel; output order follows
/// the input order regardless of completion order.
std::vector<PairRecord> evaluate_pairs(const std::vector<PairTask> &tasks,
                                       const CompareOptions &options, unsigned threads = 0);

} // namespace mortot::analysis
