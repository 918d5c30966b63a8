#pragma once

#include "mortot/lifetable.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mortot::hmd {

enum class Sex { female, male, total };
enum class TableKind { period, cohort };

std::string_view to_string(Sex sex);
std::string_view to_string(TableKind kind);

/// One data row of a 1x1 life-table file. Missing values (".") stay empty.
struct Row {
    int year = 0;
    /// Territorial-change suffix on the year token ("1921-" / "1921+"), or '\0'.
    char year_suffix = '\0';
    int age = 0;
    bool open_interval = false; // "110+"
    std::optional<double> mx, qx, ax, lx, dx, Lx, Tx, ex;
    int line = 0;
};

struct Issue {
    enum class Kind { grid, monotonicity };
    Kind kind = Kind::grid;
    int line = 0; // 1-based
    int year = 0;
    std::string message;
};

struct File {
    std::string title;   // first line, verbatim
    std::string country; // country name from the title
    std::string code;    // population code from the file name, e.g. "DNK"
    Sex sex = Sex::total;
    TableKind kind = TableKind::period;
    std::vector<Row> rows; // file order
    std::vector<Issue> issues;

    /// Distinct years in ascending order.
    std::vector<int> years() const;
    bool has_year(int year) const;
    /// True if the year passes the grid checks and has no missing values.
    bool convertible(int year) const;
};

struct ParseOptions {
    /// Accept any ascending age grid ending in an open interval.
    bool lenient_grid = false;
    /// File name used to infer code, sex and kind (e.g. "DNK.bltper_1x1.txt").
    std::string source_name;
};

/// Parses HMD life-table text: a title line, a blank line, the column header
/// `Year Age mx qx ax lx dx Lx Tx ex`, then whitespace-separated rows.
/// Throws FormatError on a malformed header, wrong field count, non-numeric
/// field, or duplicate (year, age). Grid and monotonicity problems are
/// collected in File::issues.
File parse(std::string_view text, const ParseOptions &options = {});

/// Reads and parses a file; throws IoError if it cannot be read.
File load(const std::filesystem::path &path, bool lenient_grid = false);

/// Extracts one year (or cohort) as a LifeTable built from the published
/// lx and ax columns. Throws NotFoundError if the year is absent,
/// CompletenessError naming the columns with missing values (or "Age" for a
/// broken grid), and DomainError if the published columns are inconsistent
/// beyond their rounding.
LifeTable extract_table(const File &file, int year);

/// Every convertible year extracted, keyed by year. Years with missing
/// values or a broken grid are skipped; a convertible year whose published
/// columns are inconsistent still throws.
std::map<int, LifeTable> extract_all(const File &file);

/// Writes the file back in HMD layout at published precision.
std::string serialize(const File &file);

} // namespace mortot::hmd
