#include "mortot/report_io.hpp"

#include "mortot/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <sstream>

namespace mortot::analysis {

namespace {

using nlohmann::json;

constexpr int distance_digits = 4;
constexpr int stat_digits = 2;
constexpr int ratio_digits = 4;

// Fixed-point text with "-0.00" folded to "0.00"; inf and nan stay literal.
std::string fixed(double value, int digits) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    auto text = fmt::format("{:.{}f}", value, digits);
    if (text.front() == '-' && text.find_first_not_of("-0.") == std::string::npos) {
        text.erase(text.begin());
    }
    return text;
}

json rounded(double value, int digits) {
    if (!std::isfinite(value)) {
        return nullptr;
    }
    const double scale = std::pow(10.0, digits);
    const double r = std::round(value * scale) / scale;
    return r == 0.0 ? 0.0 : r;
}

std::string years_text(const StudyConfig &config) {
    if (!config.years && config.kind == StudyKind::sample_pairs) {
        return "all";
    }
    const auto range = effective_years(config);
    return fmt::format("{}-{}", range.first, range.last);
}

constexpr const char *csv_columns =
    "index,code_a,sex_a,year_a,code_b,sex_b,year_b,e0_a,e0_b,w1,p,wp,e0_gap,e0_gap_abs,"
    "kl_ab,kl_ba,kl_sym,non_overlap,overlap_variant,crossing_count,integer_age_crossings,"
    "dominance";

std::string csv_row(const PairRecord &rec) {
    const auto &r = rec.report;
    const auto d = distance_digits;
    return fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                       rec.index, rec.a.code, hmd::to_string(rec.a.sex), rec.a.year, rec.b.code,
                       hmd::to_string(rec.b.sex), rec.b.year, fixed(r.e0_a, d), fixed(r.e0_b, d),
                       fixed(r.w1, d), fixed(r.p, d), fixed(r.wp, d), fixed(r.e0_gap_signed, d),
                       fixed(r.e0_gap_abs, d), fixed(r.kl_ab, d), fixed(r.kl_ba, d),
                       fixed(r.kl_symmetric(), d), fixed(r.non_overlap, d),
                       to_string(r.overlap_variant), r.crossing_count, r.integer_age_crossings,
                       to_string(r.dominance));
}

json json_row(const PairRecord &rec) {
    const auto &r = rec.report;
    const auto d = distance_digits;
    json j;
    j["type"] = "pair";
    j["index"] = rec.index;
    j["code_a"] = rec.a.code;
    j["sex_a"] = hmd::to_string(rec.a.sex);
    j["year_a"] = rec.a.year;
    j["code_b"] = rec.b.code;
    j["sex_b"] = hmd::to_string(rec.b.sex);
    j["year_b"] = rec.b.year;
    j["e0_a"] = rounded(r.e0_a, d);
    j["e0_b"] = rounded(r.e0_b, d);
    j["w1"] = rounded(r.w1, d);
    j["p"] = rounded(r.p, d);
    j["wp"] = rounded(r.wp, d);
    j["e0_gap"] = rounded(r.e0_gap_signed, d);
    j["e0_gap_abs"] = rounded(r.e0_gap_abs, d);
    j["kl_ab"] = rounded(r.kl_ab, d);
    j["kl_ab_infinite"] = std::isinf(r.kl_ab);
    j["kl_ba"] = rounded(r.kl_ba, d);
    j["kl_ba_infinite"] = std::isinf(r.kl_ba);
    j["kl_sym"] = rounded(r.kl_symmetric(), d);
    j["kl_sym_infinite"] = std::isinf(r.kl_symmetric());
    j["non_overlap"] = rounded(r.non_overlap, d);
    j["overlap_variant"] = to_string(r.overlap_variant);
    j["crossing_count"] = r.crossing_count;
    j["integer_age_crossings"] = r.integer_age_crossings;
    j["dominance"] = to_string(r.dominance);
    return j;
}

json header_json(const StudyConfig &c) {
    json j;
    j["type"] = "header";
    j["tool"] = "mortot";
    j["study"] = to_string(c.kind);
    j["seed"] = c.seed;
    j["sample_size"] = c.sample_size;
    j["sex"] = c.kind == StudyKind::sex_gap ? "female_vs_male" : hmd::to_string(c.sex);
    j["years"] = years_text(c);
    j["year_mode"] = to_string(c.year_mode);
    j["p"] = c.metrics.p;
    j["kl_smoothing"] = c.metrics.kl_smoothing;
    j["overlap_variant"] = to_string(c.metrics.overlap_variant);
    j["crossing_tolerance"] = c.metrics.crossing_tolerance;
    return j;
}

std::string stats_csv(const char *name, const MeasureStats &m, int digits) {
    return fmt::format("# {},{},{},{},{}\n", name, fixed(m.min, digits), fixed(m.mean, digits),
                       fixed(m.max, digits), m.count);
}

json stats_json(const MeasureStats &m, int digits) {
    return {{"min", rounded(m.min, digits)},
            {"mean", rounded(m.mean, digits)},
            {"max", rounded(m.max, digits)},
            {"count", m.count}};
}

hmd::Sex parse_sex(const std::string &text) {
    if (text == "female") {
        return hmd::Sex::female;
    }
    if (text == "male") {
        return hmd::Sex::male;
    }
    if (text == "total") {
        return hmd::Sex::total;
    }
    throw FormatError(fmt::format("unknown sex '{}'", text), 0);
}

Dominance parse_dominance(const std::string &text) {
    for (const auto d : {Dominance::a_dominates, Dominance::b_dominates, Dominance::crossing}) {
        if (text == to_string(d)) {
            return d;
        }
    }
    throw FormatError(fmt::format("unknown dominance '{}'", text), 0);
}

double parse_number(const std::string &text, int line) {
    if (text == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception &) {
    }
    throw FormatError(fmt::format("line {}: '{}' is not a number", line, text), line);
}

std::vector<std::string> split_csv(const std::string &line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    return out;
}

PairRecord record_from_fields(const std::map<std::string, std::string> &f, int line) {
    auto get = [&](const char *key) -> const std::string & {
        const auto it = f.find(key);
        if (it == f.end()) {
            throw FormatError(fmt::format("line {}: missing column '{}'", line, key), line);
        }
        return it->second;
    };
    auto num = [&](const char *key) { return parse_number(get(key), line); };
    PairRecord rec;
    rec.index = static_cast<std::size_t>(num("index"));
    rec.a = {get("code_a"), parse_sex(get("sex_a")), static_cast<int>(num("year_a"))};
    rec.b = {get("code_b"), parse_sex(get("sex_b")), static_cast<int>(num("year_b"))};
    auto &r = rec.report;
    r.e0_a = num("e0_a");
    r.e0_b = num("e0_b");
    r.w1 = num("w1");
    r.p = num("p");
    r.wp = num("wp");
    r.e0_gap_signed = num("e0_gap");
    r.e0_gap_abs = num("e0_gap_abs");
    r.kl_ab = num("kl_ab");
    r.kl_ba = num("kl_ba");
    r.non_overlap = num("non_overlap");
    const auto variant = parse_overlap_variant(get("overlap_variant"));
    if (!variant) {
        throw FormatError(fmt::format("line {}: unknown overlap variant", line), line);
    }
    r.overlap_variant = *variant;
    r.crossing_count = static_cast<int>(num("crossing_count"));
    r.integer_age_crossings = static_cast<int>(num("integer_age_crossings"));
    r.dominance = parse_dominance(get("dominance"));
    return rec;
}

std::string json_field_text(const json &j, const char *key) {
    if (!j.contains(key)) {
        return {};
    }
    const auto &v = j.at(key);
    if (v.is_string()) {
        return v.get<std::string>();
    }
    if (v.is_boolean()) {
        return v.get<bool>() ? "true" : "false";
    }
    if (v.is_null()) {
        const auto flag = std::string(key) + "_infinite";
        return j.value(flag, false) ? "inf" : "nan";
    }
    return fmt::format("{:.17g}", v.get<double>());
}

} // namespace

std::string format_pair(const PairRecord &record, OutputFormat format) {
    if (format == OutputFormat::json) {
        return json_row(record).dump() + "\n";
    }
    return fmt::format("{}\n{}\n", csv_columns, csv_row(record));
}

std::string format_study(const StudyResult &result) {
    const auto &c = result.config;
    const auto &s = result.summary;
    std::string out;
    if (c.format == OutputFormat::json) {
        out += header_json(c).dump() + "\n";
        for (const auto &rec : result.pairs) {
            out += json_row(rec).dump() + "\n";
        }
        json summary;
        summary["type"] = "summary";
        summary["pairs"] = s.pairs;
        summary["non_crossing"] = s.non_crossing;
        summary["infinite_kl"] = s.infinite_kl;
        summary["pearson_w1_e0_gap_abs"] = rounded(s.pearson_w1_e0_gap, ratio_digits);
        summary["w1"] = stats_json(s.w1, stat_digits);
        summary["e0_gap_abs"] = stats_json(s.e0_gap_abs, stat_digits);
        summary["abs_w1_minus_e0_gap"] = stats_json(s.abs_diff, ratio_digits);
        summary["kl_symmetric"] = stats_json(s.kl_symmetric, ratio_digits);
        summary["non_overlap"] = stats_json(s.non_overlap, ratio_digits);
        json by_year = json::array();
        for (const auto &y : s.by_year) {
            by_year.push_back({{"year", y.year},
                               {"pairs", y.pairs},
                               {"mean_abs_w1_minus_e0_gap", rounded(y.mean_abs_diff, ratio_digits)},
                               {"max_abs_w1_minus_e0_gap", rounded(y.max_abs_diff, ratio_digits)}});
        }
        summary["by_year"] = std::move(by_year);
        out += summary.dump() + "\n";
        return out;
    }

    const auto h = header_json(c);
    out += fmt::format("# mortot study={} seed={} sample_size={} sex={} years={} year_mode={} "
                       "p={} kl_smoothing={} overlap={} crossing_tolerance={}\n",
                       h["study"].get<std::string>(), c.seed, c.sample_size,
                       h["sex"].get<std::string>(), h["years"].get<std::string>(),
                       to_string(c.year_mode), c.metrics.p, c.metrics.kl_smoothing,
                       to_string(c.metrics.overlap_variant), c.metrics.crossing_tolerance);
    out += csv_columns;
    out += "\n";
    for (const auto &rec : result.pairs) {
        out += csv_row(rec);
        out += "\n";
    }
    out += fmt::format("# summary pairs={} non_crossing={} infinite_kl={} pearson_w1_e0_gap_abs={}\n",
                       s.pairs, s.non_crossing, s.infinite_kl,
                       fixed(s.pearson_w1_e0_gap, ratio_digits));
    out += "# measure,min,mean,max,count\n";
    out += stats_csv("w1", s.w1, stat_digits);
    out += stats_csv("e0_gap_abs", s.e0_gap_abs, stat_digits);
    out += stats_csv("abs_w1_minus_e0_gap", s.abs_diff, ratio_digits);
    out += stats_csv("kl_symmetric", s.kl_symmetric, ratio_digits);
    out += stats_csv("non_overlap", s.non_overlap, ratio_digits);
    out += "# year,pairs,mean_abs_w1_minus_e0_gap,max_abs_w1_minus_e0_gap\n";
    for (const auto &y : s.by_year) {
        out += fmt::format("# {},{},{},{}\n", y.year, y.pairs, fixed(y.mean_abs_diff, ratio_digits),
                           fixed(y.max_abs_diff, ratio_digits));
    }
    return out;
}

std::vector<PairRecord> read_pair_records(std::istream &in) {
    std::vector<PairRecord> out;
    std::vector<std::string> header;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (line.front() == '{') {
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error &e) {
                throw FormatError(fmt::format("line {}: {}", line_no, e.what()), line_no);
            }
            if (j.value("type", "") != "pair") {
                continue;
            }
            std::map<std::string, std::string> fields;
            for (const auto &[key, value] : j.items()) {
                fields[key] = json_field_text(j, key.c_str());
            }
            out.push_back(record_from_fields(fields, line_no));
            continue;
        }
        if (header.empty()) {
            header = split_csv(line);
            continue;
        }
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw FormatError(fmt::format("line {}: expected {} cells, found {}", line_no,
                                          header.size(), cells.size()),
                              line_no);
        }
        std::map<std::string, std::string> fields;
        for (std::size_t k = 0; k < cells.size(); ++k) {
            fields[header[k]] = cells[k];
        }
        out.push_back(record_from_fields(fields, line_no));
    }
    return out;
}

} // namespace mortot::analysis
