// mortot: life-table comparison studies from the command line.

#include "mortot/analysis.hpp"
#include "mortot/distances.hpp"
#include "mortot/errors.hpp"
#include "mortot/hmd.hpp"
#include "mortot/plot_data.hpp"
#include "mortot/report_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace an = mortot::analysis;
namespace hmd = mortot::hmd;

namespace {

constexpr int usage_exit = 2;

struct MetricFlags {
    double p = 2.0;
    double kl_smoothing = mortot::default_kl_smoothing;
    std::string overlap = "jaccard";

    mortot::CompareOptions options() const {
        mortot::CompareOptions o;
        o.p = p;
        o.kl_smoothing = kl_smoothing;
        const auto v = mortot::parse_overlap_variant(overlap);
        if (!v) {
            throw mortot::DomainError(fmt::format("unknown overlap variant '{}'", overlap));
        }
        o.overlap_variant = *v;
        return o;
    }
};

void add_metric_flags(CLI::App *cmd, MetricFlags &m) {
    cmd->add_option("--p", m.p, "Order of the Wasserstein distance reported as wp")
        ->check(CLI::Range(1.0, 1e6));
    cmd->add_option("--kl-smoothing", m.kl_smoothing, "Floor applied to histograms before KL, 0 for none")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--overlap-variant", m.overlap, "Non-overlap index variant")
        ->check(CLI::IsMember({"jaccard", "one_minus_min_sum"}));
}

an::OutputFormat parse_format(const std::string &s) {
    return s == "json" ? an::OutputFormat::json : an::OutputFormat::csv;
}

hmd::Sex parse_sex(const std::string &s) {
    if (s == "female") {
        return hmd::Sex::female;
    }
    if (s == "male") {
        return hmd::Sex::male;
    }
    return hmd::Sex::total;
}

an::YearRange parse_years(const std::string &text) {
    const auto dash = text.find('-', 1);
    try {
        if (dash == std::string::npos) {
            const int y = std::stoi(text);
            return {y, y};
        }
        an::YearRange r{std::stoi(text.substr(0, dash)), std::stoi(text.substr(dash + 1))};
        if (r.first > r.last) {
            throw mortot::DomainError(fmt::format("year range '{}' is empty", text));
        }
        return r;
    } catch (const std::logic_error &) {
        throw mortot::DomainError(fmt::format("cannot read year range '{}'", text));
    }
}

void write_output(const std::string &text, const std::string &out) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) {
        throw mortot::IoError(fmt::format("cannot open '{}' for writing", out));
    }
    f << text;
    if (!f.flush()) {
        throw mortot::IoError(fmt::format("write to '{}' failed", out));
    }
}

an::PopulationKey key_for(const hmd::File &f, int year) {
    return {f.code, f.sex, year};
}

int run_validate(const std::string &path, bool lenient, std::optional<int> year) {
    const auto file = hmd::load(path, lenient);
    if (year) {
        const auto t = hmd::extract_table(file, *year);
        std::cout << fmt::format("{} {}: ok, {} age groups, e0 {:.2f}\n", path, *year, t.size(),
                                 mortot::e0_survival_area(t));
        return 0;
    }
    for (const auto &issue : file.issues) {
        std::cout << fmt::format("note line {} (year {}): {}\n", issue.line, issue.year,
                                 issue.message);
    }
    std::size_t ok = 0;
    std::size_t incomplete = 0;
    std::size_t failed = 0;
    for (const int y : file.years()) {
        try {
            (void)hmd::extract_table(file, y);
            ++ok;
        } catch (const mortot::CompletenessError &e) {
            ++incomplete;
            std::cout << fmt::format("skip {}: {}\n", y, e.what());
        } catch (const mortot::DomainError &e) {
            ++failed;
            std::cout << fmt::format("fail {}: {}\n", y, e.what());
        }
    }
    std::cout << fmt::format("{}: code={} sex={} kind={} years={} ok={} incomplete={} failed={}\n",
                             path, file.code, hmd::to_string(file.sex),
                             hmd::to_string(file.kind), file.years().size(), ok, incomplete,
                             failed);
    return failed == 0 ? 0 : static_cast<int>(mortot::ErrorCategory::domain);
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Compare life tables by Wasserstein distance and life expectancy gap"};
    app.require_subcommand(1);

    std::string format = "csv";
    std::string out;
    bool lenient = false;
    MetricFlags metrics;

    // validate
    auto *validate = app.add_subcommand("validate", "Parse an HMD life-table file and check every year");
    std::string validate_file;
    std::optional<int> validate_year;
    validate->add_option("file", validate_file, "HMD 1x1 life-table file")->required();
    validate->add_option("--year", validate_year, "Check only this year; errors set the exit code");
    validate->add_flag("--lenient", lenient, "Accept any ascending age grid ending in an open interval");

    // compare
    auto *compare = app.add_subcommand("compare", "Compare two life tables");
    std::string file_a;
    std::string file_b;
    int year_a = 0;
    int year_b = 0;
    compare->add_option("fileA", file_a)->required();
    compare->add_option("yearA", year_a)->required();
    compare->add_option("fileB", file_b)->required();
    compare->add_option("yearB", year_b)->required();
    add_metric_flags(compare, metrics);
    compare->add_flag("--lenient", lenient);

    // studies
    const char *env_dir = std::getenv("MORTOT_DATA_DIR");
    an::StudyConfig config;
    std::string data_dir = env_dir ? env_dir : "";
    std::string sex = "total";
    std::string years;
    std::string year_mode = "per_pair";
    std::uint64_t seed = config.seed;
    std::size_t sample_size = config.sample_size;
    unsigned threads = 0;
    std::vector<std::string> countries;

    const std::map<std::string, an::StudyKind> study_kinds{
        {"sample", an::StudyKind::sample_pairs},
        {"allpairs", an::StudyKind::all_pairs_by_year},
        {"sexgap", an::StudyKind::sex_gap},
        {"cohort", an::StudyKind::cohort_pairs},
    };
    const std::map<std::string, std::string> study_help{
        {"sample", "Random country pairs, one year per pair"},
        {"allpairs", "All country pairs in every year of the range"},
        {"sexgap", "Women against men per country and year"},
        {"cohort", "All pairs of cohort tables across the selected populations"},
    };
    std::map<std::string, CLI::App *> study_cmds;
    for (const auto &[name, kind] : study_kinds) {
        auto *cmd = app.add_subcommand(name, study_help.at(name));
        study_cmds[name] = cmd;
        cmd->add_option("--data-dir", data_dir,
                        "Directory searched for HMD files (default: $MORTOT_DATA_DIR)");
        cmd->add_option("--years", years, "Year range, e.g. 1990-2020");
        cmd->add_option("--countries", countries, "Population codes to include")->delimiter(',');
        cmd->add_option("--threads", threads, "Worker threads, 0 for all cores");
        add_metric_flags(cmd, metrics);
        if (kind != an::StudyKind::sex_gap) {
            cmd->add_option("--sex", sex, "Sex of the tables")
                ->check(CLI::IsMember({"female", "male", "total"}));
        }
        if (kind == an::StudyKind::sample_pairs) {
            cmd->add_option("--seed", seed, "Seed of the pair sampler");
            cmd->add_option("--n", sample_size, "Number of sampled pairs");
            cmd->add_option("--year-mode", year_mode, "One year per pair or one shared year")
                ->check(CLI::IsMember({"per_pair", "global"}));
        }
    }

    // plotdata
    auto *plot = app.add_subcommand("plotdata", "Emit tidy tables for plotting");
    std::string plot_kind;
    std::string plot_in;
    double bin_width = 0.5;
    std::vector<std::string> overlay_args;
    plot->add_option("--kind", plot_kind, "histogram, scatter, cdf_overlay or distribution_overlay")
        ->required()
        ->check(CLI::IsMember({"histogram", "scatter", "cdf_overlay", "distribution_overlay"}));
    plot->add_option("--in", plot_in, "Pair reports (CSV or JSON lines) for histogram and scatter");
    plot->add_option("--bin-width", bin_width, "Histogram bin width in years");
    plot->add_option("pair", overlay_args, "fileA yearA fileB yearB for overlays")->expected(0, 4);
    plot->add_flag("--lenient", lenient);

    for (auto *cmd : app.get_subcommands({})) {
        if (cmd != validate) {
            cmd->add_option("--format", format, "Output format")
                ->check(CLI::IsMember({"csv", "json"}));
            cmd->add_option("--out", out, "Output file (default: stdout)");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return usage_exit;
    }

    try {
        if (validate->parsed()) {
            return run_validate(validate_file, lenient, validate_year);
        }
        if (compare->parsed()) {
            const auto fa = hmd::load(file_a, lenient);
            const auto fb = hmd::load(file_b, lenient);
            an::PairRecord rec;
            rec.a = key_for(fa, year_a);
            rec.b = key_for(fb, year_b);
            rec.report = mortot::compare(hmd::extract_table(fa, year_a),
                                         hmd::extract_table(fb, year_b), metrics.options());
            write_output(an::format_pair(rec, parse_format(format)), out);
            return 0;
        }
        if (plot->parsed()) {
            const auto kind = *an::parse_plot_kind(plot_kind);
            const auto fmt_out = parse_format(format);
            if (kind == an::PlotKind::histogram || kind == an::PlotKind::scatter) {
                if (plot_in.empty()) {
                    throw mortot::DomainError("histogram and scatter need --in <reports>");
                }
                std::ifstream in(plot_in, std::ios::binary);
                if (!in) {
                    throw mortot::IoError(fmt::format("cannot open '{}'", plot_in));
                }
                write_output(an::emit_plot_data(an::read_pair_records(in), kind, fmt_out, bin_width),
                             out);
                return 0;
            }
            if (overlay_args.size() != 4) {
                throw mortot::DomainError("overlays need fileA yearA fileB yearB");
            }
            const auto fa = hmd::load(overlay_args[0], lenient);
            const auto fb = hmd::load(overlay_args[2], lenient);
            const auto ta = hmd::extract_table(fa, parse_years(overlay_args[1]).first);
            const auto tb = hmd::extract_table(fb, parse_years(overlay_args[3]).first);
            write_output(an::emit_overlay(ta, tb, kind, fmt_out), out);
            return 0;
        }
        for (const auto &[name, cmd] : study_cmds) {
            if (!cmd->parsed()) {
                continue;
            }
            if (data_dir.empty()) {
                throw mortot::SetupError("no data directory: pass --data-dir or set MORTOT_DATA_DIR");
            }
            config.data_dir = data_dir;
            config.kind = study_kinds.at(name);
            config.sample_size = sample_size;
            config.seed = seed;
            config.sex = parse_sex(sex);
            config.year_mode = year_mode == "global" ? an::YearMode::global : an::YearMode::per_pair;
            config.metrics = metrics.options();
            config.format = parse_format(format);
            config.countries = countries;
            config.threads = threads;
            if (!years.empty()) {
                config.years = parse_years(years);
            }
            write_output(an::format_study(an::run_study(config)), out);
            return 0;
        }
    } catch (const mortot::Error &e) {
        std::cerr << fmt::format("mortot: {} error: {}\n", mortot::category_name(e.category()),
                                 e.what());
        return static_cast<int>(e.category());
    } catch (const std::exception &e) {
        std::cerr << "mortot: " << e.what() << "\n";
        return 1;
    }
    return usage_exit;
}
