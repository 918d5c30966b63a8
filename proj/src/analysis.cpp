#include "mortot/analysis.hpp"

#include "mortot/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <regex>
#include <set>
#include <thread>

namespace mortot::analysis {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

class MeasureAccumulator {
public:
    void add(double value) {
        if (!std::isfinite(value)) {
            return;
        }
        min_ = std::min(min_, value);
        max_ = std::max(max_, value);
        sum_ += value;
        ++count_;
    }

    MeasureStats stats() const {
        if (count_ == 0) {
            return {nan, nan, nan, 0};
        }
        const double mean = std::clamp(sum_ / static_cast<double>(count_), min_, max_);
        return {min_, mean, max_, count_};
    }

private:
    double min_ = std::numeric_limits<double>::infinity();
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
    std::size_t count_ = 0;
};

double pearson(const std::vector<double> &x, const std::vector<double> &y) {
    const auto n = x.size();
    if (n < 2) {
        return nan;
    }
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        return nan;
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

const Population *find_population(const std::vector<Population> &pops, const std::string &code) {
    const auto it = std::find_if(pops.begin(), pops.end(),
                                 [&code](const Population &p) { return p.code == code; });
    return it == pops.end() ? nullptr : &*it;
}

PairTask make_task(const Population &a, int year_a, const Population &b, int year_b) {
    return {{a.code, a.sex, year_a}, {b.code, b.sex, year_b}, &a.tables.at(year_a),
            &b.tables.at(year_b)};
}

StudyResult finish(const StudyConfig &config, const std::vector<PairTask> &tasks) {
    StudyResult result;
    result.config = config;
    result.pairs = evaluate_pairs(tasks, config.metrics, config.threads);
    result.summary = summarize(result.pairs);
    return result;
}

} // namespace

std::string_view to_string(StudyKind kind) {
    switch (kind) {
    case StudyKind::sample_pairs: return "sample";
    case StudyKind::all_pairs_by_year: return "allpairs";
    case StudyKind::sex_gap: return "sexgap";
    case StudyKind::cohort_pairs: return "cohort";
    }
    return "unknown";
}

std::string_view to_string(OutputFormat format) {
    return format == OutputFormat::json ? "json" : "csv";
}

std::string_view to_string(YearMode mode) {
    return mode == YearMode::global ? "global" : "per_pair";
}

const std::vector<std::string> &default_cohort_countries() {
    static const std::vector<std::string> codes{"DNK", "FIN", "FRATNP", "ISL", "ITA",    "NLD",
                                                "NOR", "ESP", "SWE",    "CHE", "GBRTENW"};
    return codes;
}

YearRange effective_years(const StudyConfig &config) {
    if (config.years) {
        return *config.years;
    }
    switch (config.kind) {
    case StudyKind::sample_pairs:
        return {std::numeric_limits<int>::min(), std::numeric_limits<int>::max()};
    case StudyKind::all_pairs_by_year:
    case StudyKind::sex_gap: return {1990, 2020};
    case StudyKind::cohort_pairs: return {1890, 1920};
    }
    return {1990, 2020};
}

SummaryStats summarize(const std::vector<PairRecord> &records) {
    SummaryStats s;
    s.pairs = records.size();
    MeasureAccumulator w1;
    MeasureAccumulator gap;
    MeasureAccumulator diff;
    MeasureAccumulator kl;
    MeasureAccumulator overlap;
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(records.size());
    ys.reserve(records.size());
    struct YearAccumulator {
        std::size_t pairs = 0;
        double sum = 0.0;
        double max = 0.0;
    };
    std::map<int, YearAccumulator> years;

    for (const auto &record : records) {
        const auto &r = record.report;
        const double abs_diff = std::abs(r.w1 - r.e0_gap_abs);
        w1.add(r.w1);
        gap.add(r.e0_gap_abs);
        diff.add(abs_diff);
        overlap.add(r.non_overlap);
        const double kl_sym = r.kl_symmetric();
        if (std::isfinite(kl_sym)) {
            kl.add(kl_sym);
        } else {
            ++s.infinite_kl;
        }
        xs.push_back(r.w1);
        ys.push_back(r.e0_gap_abs);
        if (r.dominance != Dominance::crossing) {
            ++s.non_crossing;
        }
        auto &y = years[record.a.year];
        ++y.pairs;
        y.sum += abs_diff;
        y.max = std::max(y.max, abs_diff);
    }
    s.w1 = w1.stats();
    s.e0_gap_abs = gap.stats();
    s.abs_diff = diff.stats();
    s.kl_symmetric = kl.stats();
    s.non_overlap = overlap.stats();
    s.pearson_w1_e0_gap = pearson(xs, ys);
    for (const auto &[year, acc] : years) {
        s.by_year.push_back({year, acc.pairs, acc.sum / static_cast<double>(acc.pairs), acc.max});
    }
    return s;
}

std::vector<Population> load_corpus(const std::filesystem::path &dir, hmd::TableKind kind,
                                    hmd::Sex sex, const std::vector<std::string> &codes) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        throw SetupError(fmt::format("data directory '{}' does not exist", dir.string()));
    }
    static const std::regex pattern(R"(^([A-Za-z0-9_]+)\.([fmb])lt(per|coh)_1x1\.txt$)");
    const char sex_letter = sex == hmd::Sex::female ? 'f' : (sex == hmd::Sex::male ? 'm' : 'b');
    const auto kind_text = kind == hmd::TableKind::cohort ? "coh" : "per";

    std::vector<fs::path> paths;
    for (const auto &entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const auto name = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_match(name, m, pattern) || m[2].str()[0] != sex_letter ||
            m[3].str() != kind_text) {
            continue;
        }
        if (!codes.empty() && std::find(codes.begin(), codes.end(), m[1].str()) == codes.end()) {
            continue;
        }
        paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end(), [](const fs::path &l, const fs::path &r) {
        return l.filename().string() < r.filename().string();
    });

    std::vector<Population> out;
    for (const auto &path : paths) {
        Population pop;
        try {
            const auto file = hmd::load(path);
            pop.code = file.code;
            pop.sex = file.sex;
            pop.kind = file.kind;
            pop.path = path;
            pop.tables = hmd::extract_all(file);
        } catch (const FormatError &) {
            throw;
        } catch (const Error &e) {
            throw Error(e.category(), fmt::format("{}: {}", path.string(), e.what()));
        }
        if (!out.empty() && out.back().code == pop.code) {
            throw SetupError(fmt::format("population {} appears twice ('{}' and '{}')", pop.code,
                                         out.back().path.string(), path.string()));
        }
        out.push_back(std::move(pop));
    }
    return out;
}

Rng::Rng(std::uint64_t seed) : engine_{seed} {}

std::uint64_t Rng::below(std::uint64_t n) {
    constexpr auto top = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t limit = top - top % n;
    std::uint64_t x = engine_();
    while (x >= limit) {
        x = engine_();
    }
    return x % n;
}

std::vector<PairRecord> evaluate_pairs(const std::vector<PairTask> &tasks,
                                       const CompareOptions &options, unsigned threads) {
    std::vector<PairRecord> records(tasks.size());
    std::vector<std::exception_ptr> errors(tasks.size());
    std::atomic<std::size_t> next{0};

    auto work = [&] {
        for (auto k = next.fetch_add(1); k < tasks.size(); k = next.fetch_add(1)) {
            const auto &task = tasks[k];
            try {
                records[k] = {k, task.a, task.b, compare(*task.table_a, *task.table_b, options)};
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };

    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    const auto workers = static_cast<unsigned>(
        std::min<std::size_t>(threads, std::max<std::size_t>(1, tasks.size() / 64)));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned t = 0; t < workers; ++t) {
            pool.emplace_back(work);
        }
    }
    for (const auto &error : errors) {
        if (error) {
            std::rethrow_exception(error);
        }
    }
    return records;
}

StudyResult run_sample_study(const StudyConfig &config) {
    const auto pops =
        load_corpus(config.data_dir, hmd::TableKind::period, config.sex, config.countries);
    if (pops.size() < 2) {
        throw SetupError(fmt::format("sample study needs at least two {} period files in '{}', found {}",
                                     hmd::to_string(config.sex), config.data_dir.string(),
                                     pops.size()));
    }
    const auto range = effective_years(config);

    struct Candidate {
        std::size_t i;
        std::size_t j;
        int year;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < pops.size(); ++i) {
        for (std::size_t j = i + 1; j < pops.size(); ++j) {
            for (const auto &[year, table] : pops[i].tables) {
                if (range.contains(year) && pops[j].tables.count(year) != 0) {
                    candidates.push_back({i, j, year});
                }
            }
        }
    }
    if (candidates.empty()) {
        throw SetupError("no two populations share a complete year in the requested range");
    }

    Rng rng(config.seed);
    if (config.year_mode == YearMode::global) {
        std::set<int> distinct;
        for (const auto &c : candidates) {
            distinct.insert(c.year);
        }
        const std::vector<int> years(distinct.begin(), distinct.end());
        const int year = years[rng.below(years.size())];
        std::erase_if(candidates, [year](const Candidate &c) { return c.year != year; });
    }

    // Partial Fisher-Yates: the first n entries are a uniform draw without
    // replacement, in draw order.
    const auto n = std::min(config.sample_size, candidates.size());
    for (std::size_t k = 0; k < n; ++k) {
        const auto pick = k + rng.below(candidates.size() - k);
        std::swap(candidates[k], candidates[pick]);
    }

    std::vector<PairTask> tasks;
    tasks.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto &c = candidates[k];
        tasks.push_back(make_task(pops[c.i], c.year, pops[c.j], c.year));
    }
    return finish(config, tasks);
}

StudyResult run_all_pairs_study(const StudyConfig &config) {
    const auto pops =
        load_corpus(config.data_dir, hmd::TableKind::period, config.sex, config.countries);
    if (pops.size() < 2) {
        throw SetupError(fmt::format("by-year study needs at least two {} period files in '{}'",
                                     hmd::to_string(config.sex), config.data_dir.string()));
    }
    const auto range = effective_years(config);
    std::set<int> years;
    for (const auto &p : pops) {
        for (const auto &[year, table] : p.tables) {
            if (range.contains(year)) {
                years.insert(year);
            }
        }
    }
    std::vector<PairTask> tasks;
    for (const int year : years) {
        for (std::size_t i = 0; i < pops.size(); ++i) {
            if (pops[i].tables.count(year) == 0) {
                continue;
            }
            for (std::size_t j = i + 1; j < pops.size(); ++j) {
                if (pops[j].tables.count(year) != 0) {
                    tasks.push_back(make_task(pops[i], year, pops[j], year));
                }
            }
        }
    }
    if (tasks.empty()) {
        throw SetupError("no two populations share a complete year in the requested range");
    }
    return finish(config, tasks);
}

StudyResult run_sex_gap_study(const StudyConfig &config) {
    const auto women =
        load_corpus(config.data_dir, hmd::TableKind::period, hmd::Sex::female, config.countries);
    const auto men =
        load_corpus(config.data_dir, hmd::TableKind::period, hmd::Sex::male, config.countries);
    const auto range = effective_years(config);
    std::vector<PairTask> tasks;
    for (const auto &w : women) {
        const auto *m = find_population(men, w.code);
        if (m == nullptr) {
            continue;
        }
        for (const auto &[year, table] : w.tables) {
            if (range.contains(year) && m->tables.count(year) != 0) {
                tasks.push_back(make_task(w, year, *m, year));
            }
        }
    }
    if (tasks.empty()) {
        throw SetupError(fmt::format(
            "sex-gap study found no population with female and male tables for {}-{} in '{}'",
            range.first, range.last, config.data_dir.string()));
    }
    return finish(config, tasks);
}

StudyResult run_cohort_study(const StudyConfig &config) {
    const auto &codes = config.countries.empty() ? default_cohort_countries() : config.countries;
    const auto pops = load_corpus(config.data_dir, hmd::TableKind::cohort, config.sex, codes);
    const auto range = effective_years(config);

    std::vector<std::pair<const Population *, int>> units;
    for (const auto &p : pops) {
        for (const auto &[cohort, table] : p.tables) {
            if (range.contains(cohort)) {
                units.emplace_back(&p, cohort);
            }
        }
    }
    if (units.size() < 2) {
        throw SetupError(fmt::format("cohort study needs at least two complete {} cohort tables in '{}'",
                                     hmd::to_string(config.sex), config.data_dir.string()));
    }
    // Every unordered pair of distinct (population, cohort) units, including
    // same-population comparisons across cohorts.
    std::vector<PairTask> tasks;
    tasks.reserve(units.size() * (units.size() - 1) / 2);
    for (std::size_t k = 0; k < units.size(); ++k) {
        for (std::size_t l = k + 1; l < units.size(); ++l) {
            tasks.push_back(
                make_task(*units[k].first, units[k].second, *units[l].first, units[l].second));
        }
    }
    return finish(config, tasks);
}

StudyResult run_study(const StudyConfig &config) {
    switch (config.kind) {
    case StudyKind::sample_pairs: return run_sample_study(config);
    case StudyKind::all_pairs_by_year: return run_all_pairs_study(config);
    case StudyKind::sex_gap: return run_sex_gap_study(config);
    case StudyKind::cohort_pairs: return run_cohort_study(config);
    }
    throw DomainError("unknown study kind");
}

} // namespace mortot::analysis
