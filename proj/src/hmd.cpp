#include "mortot/hmd.hpp"

#include "mortot/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace mortot::hmd {

namespace {

constexpr std::array<std::string_view, 10> header_columns{"Year", "Age", "mx", "qx", "ax",
                                                          "lx",   "dx",  "Lx", "Tx", "ex"};
constexpr int hmd_open_age = 110;

std::vector<std::string_view> split_whitespace(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        const auto start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        if (i > start) {
            out.push_back(line.substr(start, i - start));
        }
    }
    return out;
}

bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(),
                       [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

int parse_int(std::string_view token, int line, const char *what) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw FormatError(fmt::format("line {}: {} '{}' is not an integer", line, what, token),
                          line);
    }
    return value;
}

std::optional<double> parse_value(std::string_view token, int line, std::string_view column) {
    if (token == ".") {
        return std::nullopt;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(value)) {
        throw FormatError(
            fmt::format("line {}: {} value '{}' is not numeric", line, column, token), line);
    }
    return value;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

void infer_labels(File &file, std::string_view source_name) {
    const auto title = lower(file.title);
    const auto comma = file.title.find(',');
    file.country = comma == std::string::npos ? std::string{} : file.title.substr(0, comma);

    if (title.find("female") != std::string::npos) {
        file.sex = Sex::female;
    } else if (title.find("male") != std::string::npos) {
        file.sex = Sex::male;
    } else {
        file.sex = Sex::total;
    }
    file.kind = title.find("cohort") != std::string::npos ? TableKind::cohort : TableKind::period;

    if (source_name.empty()) {
        return;
    }
    const auto name = std::filesystem::path(std::string(source_name)).filename().string();
    const auto dot = name.find('.');
    if (dot != std::string::npos) {
        file.code = name.substr(0, dot);
        const auto rest = lower(name.substr(dot + 1));
        if (rest.size() >= 6 && rest.compare(1, 2, "lt") == 0) {
            switch (rest[0]) {
            case 'f': file.sex = Sex::female; break;
            case 'm': file.sex = Sex::male; break;
            case 'b': file.sex = Sex::total; break;
            default: break;
            }
            if (rest.compare(3, 3, "coh") == 0) {
                file.kind = TableKind::cohort;
            } else if (rest.compare(3, 3, "per") == 0) {
                file.kind = TableKind::period;
            }
        }
    }
}

using YearKey = std::pair<int, char>;

// Row indices per (year, suffix), in file order.
std::map<YearKey, std::vector<std::size_t>> group_rows(const File &file) {
    std::map<YearKey, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < file.rows.size(); ++i) {
        groups[{file.rows[i].year, file.rows[i].year_suffix}].push_back(i);
    }
    return groups;
}

// Unsuffixed year first, then the post-change "+" territory, then "-".
std::optional<std::vector<std::size_t>> select_year(const File &file, int year) {
    const auto groups = group_rows(file);
    for (const char suffix : {'\0', '+', '-'}) {
        if (const auto it = groups.find({year, suffix}); it != groups.end()) {
            return it->second;
        }
    }
    return std::nullopt;
}

std::optional<std::string> grid_problem(const File &file, const std::vector<std::size_t> &rows,
                                        bool lenient) {
    if (rows.empty()) {
        return "no rows";
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto &row = file.rows[rows[k]];
        const bool last = k + 1 == rows.size();
        if (row.open_interval != last) {
            return last ? "last age is not an open interval"
                        : fmt::format("open interval at age {} before the last row", row.age);
        }
        if (k > 0 && row.age <= file.rows[rows[k - 1]].age) {
            return fmt::format("ages not ascending at age {}", row.age);
        }
    }
    if (file.rows[rows.front()].age != 0) {
        return "ages do not start at 0";
    }
    if (!lenient) {
        if (rows.size() != hmd_open_age + 1 || file.rows[rows.back()].age != hmd_open_age) {
            return fmt::format("expected ages 0..{}+ ({} rows), found {} rows", hmd_open_age,
                               hmd_open_age + 1, rows.size());
        }
    }
    return std::nullopt;
}

bool contiguous(const File &file, const std::vector<std::size_t> &rows) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (file.rows[rows[k]].age != static_cast<int>(k)) {
            return false;
        }
    }
    return true;
}

std::vector<std::string> missing_columns(const File &file, const std::vector<std::size_t> &rows) {
    std::array<bool, 8> missing{};
    for (const auto i : rows) {
        const auto &r = file.rows[i];
        const std::array<const std::optional<double> *, 8> values{&r.mx, &r.qx, &r.ax, &r.lx,
                                                                  &r.dx, &r.Lx, &r.Tx, &r.ex};
        for (std::size_t c = 0; c < values.size(); ++c) {
            missing[c] = missing[c] || !values[c]->has_value();
        }
    }
    std::vector<std::string> out;
    for (std::size_t c = 0; c < missing.size(); ++c) {
        if (missing[c]) {
            out.emplace_back(header_columns[c + 2]);
        }
    }
    return out;
}

std::string join(const std::vector<std::string> &parts) {
    std::string out;
    for (const auto &p : parts) {
        if (!out.empty()) {
            out += ",";
        }
        out += p;
    }
    return out;
}

std::string year_label(int year, char suffix) {
    return suffix == '\0' ? std::to_string(year) : fmt::format("{}{}", year, suffix);
}

void check_years(File &file, bool lenient) {
    for (const auto &[key, rows] : group_rows(file)) {
        const auto label = year_label(key.first, key.second);
        if (const auto problem = grid_problem(file, rows, lenient)) {
            file.issues.push_back({Issue::Kind::grid, file.rows[rows.front()].line, key.first,
                                   fmt::format("year {}: {}", label, *problem)});
        }
        std::optional<double> previous;
        for (const auto i : rows) {
            const auto &row = file.rows[i];
            if (!row.lx) {
                continue;
            }
            if (previous && *row.lx > *previous) {
                file.issues.push_back(
                    {Issue::Kind::monotonicity, row.line, key.first,
                     fmt::format("year {}: lx increases at age {} ({} > {})", label, row.age,
                                 *row.lx, *previous)});
            }
            previous = row.lx;
        }
    }
}

} // namespace

std::string_view to_string(Sex sex) {
    switch (sex) {
    case Sex::female: return "female";
    case Sex::male: return "male";
    case Sex::total: return "total";
    }
    return "unknown";
}

std::string_view to_string(TableKind kind) {
    return kind == TableKind::cohort ? "cohort" : "period";
}

std::vector<int> File::years() const {
    std::set<int> distinct;
    for (const auto &row : rows) {
        distinct.insert(row.year);
    }
    return {distinct.begin(), distinct.end()};
}

bool File::has_year(int year) const {
    return std::any_of(rows.begin(), rows.end(), [year](const Row &r) { return r.year == year; });
}

bool File::convertible(int year) const {
    const auto rows_for_year = select_year(*this, year);
    if (!rows_for_year) {
        return false;
    }
    const bool has_grid_issue = std::any_of(issues.begin(), issues.end(), [&](const Issue &issue) {
        return issue.year == year && issue.kind == Issue::Kind::grid;
    });
    return !has_grid_issue && contiguous(*this, *rows_for_year) &&
           missing_columns(*this, *rows_for_year).empty();
}

File parse(std::string_view text, const ParseOptions &options) {
    File file;
    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start <= text.size();) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        start = end + 1;
    }

    std::size_t header = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_blank(lines[i])) {
            continue;
        }
        const auto tokens = split_whitespace(lines[i]);
        if (tokens.front() == "Year") {
            header = i;
            break;
        }
        if (file.title.empty()) {
            file.title = std::string(lines[i]);
        }
    }
    if (header == lines.size()) {
        throw FormatError("missing column header line", 0);
    }
    const auto header_tokens = split_whitespace(lines[header]);
    if (!std::equal(header_tokens.begin(), header_tokens.end(), header_columns.begin(),
                    header_columns.end())) {
        throw FormatError(fmt::format("line {}: malformed header, expected '{}'", header + 1,
                                      "Year Age mx qx ax lx dx Lx Tx ex"),
                          static_cast<int>(header + 1));
    }
    infer_labels(file, options.source_name);

    std::set<std::tuple<int, char, int>> seen;
    for (std::size_t i = header + 1; i < lines.size(); ++i) {
        if (is_blank(lines[i])) {
            continue;
        }
        const int line_no = static_cast<int>(i + 1);
        const auto tokens = split_whitespace(lines[i]);
        if (tokens.size() != header_columns.size()) {
            throw FormatError(fmt::format("line {}: expected {} fields, found {}", line_no,
                                          header_columns.size(), tokens.size()),
                              line_no);
        }
        Row row;
        row.line = line_no;
        auto year_token = tokens[0];
        if (!year_token.empty() && (year_token.back() == '+' || year_token.back() == '-')) {
            row.year_suffix = year_token.back();
            year_token.remove_suffix(1);
        }
        row.year = parse_int(year_token, line_no, "Year");
        auto age_token = tokens[1];
        if (!age_token.empty() && age_token.back() == '+') {
            row.open_interval = true;
            age_token.remove_suffix(1);
        }
        row.age = parse_int(age_token, line_no, "Age");
        std::array<std::optional<double> *, 8> fields{&row.mx, &row.qx, &row.ax, &row.lx,
                                                      &row.dx, &row.Lx, &row.Tx, &row.ex};
        for (std::size_t c = 0; c < fields.size(); ++c) {
            *fields[c] = parse_value(tokens[c + 2], line_no, header_columns[c + 2]);
        }
        if (!seen.insert({row.year, row.year_suffix, row.age}).second) {
            throw FormatError(fmt::format("line {}: duplicate row for year {} age {}", line_no,
                                          year_label(row.year, row.year_suffix), row.age),
                              line_no);
        }
        file.rows.push_back(std::move(row));
    }
    check_years(file, options.lenient_grid);
    return file;
}

File load(const std::filesystem::path &path, bool lenient_grid) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(fmt::format("cannot read '{}'", path.string()));
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse(buffer.str(), {lenient_grid, path.filename().string()});
    } catch (const FormatError &e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()), e.line());
    }
}

namespace {

LifeTable extract_rows(const File &file, const std::vector<std::size_t> &rows, int year) {
    if (!contiguous(file, rows) || !file.rows[rows.back()].open_interval) {
        throw CompletenessError(fmt::format("year {}: age grid is not 0, 1, ..., omega+", year),
                                "Age");
    }
    if (const auto missing = missing_columns(file, rows); !missing.empty()) {
        throw CompletenessError(
            fmt::format("year {}: missing values in columns {}", year, join(missing)), join(missing));
    }

    const auto n = rows.size();
    std::vector<double> lx(n);
    std::vector<double> ax(n);
    std::vector<double> mx(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto &r = file.rows[rows[k]];
        lx[k] = *r.lx;
        ax[k] = *r.ax;
        mx[k] = *r.mx;
    }
    auto table = build_from_lx(lx, ax, mx);

    // Published dx and lx are rounded separately.
    const double slack = 1.0 + 1e-9 * table.radix();
    for (std::size_t k = 0; k < n; ++k) {
        const auto &r = file.rows[rows[k]];
        if (std::abs(*r.dx - table.dx()[k]) > slack) {
            throw DomainError(fmt::format("line {}: published dx {} disagrees with lx differences {}",
                                          r.line, *r.dx, table.dx()[k]));
        }
    }
    if (const auto violations = validate(table); !violations.empty()) {
        throw DomainError(fmt::format("year {}: {} life-table violations, first: {}", year,
                                      violations.size(), describe(violations.front())));
    }
    return table;
}

} // namespace

LifeTable extract_table(const File &file, int year) {
    const auto rows = select_year(file, year);
    if (!rows) {
        throw NotFoundError(fmt::format("year {} not present in {} file", year,
                                        file.code.empty() ? file.country : file.code));
    }
    return extract_rows(file, *rows, year);
}

std::map<int, LifeTable> extract_all(const File &file) {
    const auto groups = group_rows(file);
    std::set<int> grid_issues;
    for (const auto &issue : file.issues) {
        if (issue.kind == Issue::Kind::grid) {
            grid_issues.insert(issue.year);
        }
    }
    std::map<int, LifeTable> out;
    for (const auto year : file.years()) {
        const std::vector<std::size_t> *rows = nullptr;
        for (const char suffix : {'\0', '+', '-'}) {
            if (const auto it = groups.find({year, suffix}); it != groups.end()) {
                rows = &it->second;
                break;
            }
        }
        if (rows == nullptr || grid_issues.count(year) != 0 || !contiguous(file, *rows) ||
            !missing_columns(file, *rows).empty()) {
            continue;
        }
        out.emplace(year, extract_rows(file, *rows, year));
    }
    return out;
}

std::string serialize(const File &file) {
    auto value = [](const std::optional<double> &v, int width, int precision) {
        auto text = v ? fmt::format("{:>{}.{}f}", *v, width, precision)
                      : fmt::format("{:>{}}", ".", width);
        if (text.size() >= static_cast<std::size_t>(width)) {
            text.insert(text.begin(), ' ');
        }
        return text;
    };
    std::string out = file.title;
    out += "\n\n";
    out += fmt::format("{:>7}{:>13}{:>12}{:>9}{:>6}{:>8}{:>8}{:>8}{:>9}{:>7}\n", "Year", "Age",
                       "mx", "qx", "ax", "lx", "dx", "Lx", "Tx", "ex");
    for (const auto &r : file.rows) {
        const auto age = r.open_interval ? fmt::format("{}+", r.age) : std::to_string(r.age);
        out += fmt::format("{:>7}{:>13}", year_label(r.year, r.year_suffix), age);
        out += value(r.mx, 12, 5);
        out += value(r.qx, 9, 5);
        out += value(r.ax, 6, 2);
        out += value(r.lx, 8, 0);
        out += value(r.dx, 8, 0);
        out += value(r.Lx, 8, 0);
        out += value(r.Tx, 9, 0);
        out += value(r.ex, 7, 2);
        out += "\n";
    }
    return out;
}

} // namespace mortot::hmd
