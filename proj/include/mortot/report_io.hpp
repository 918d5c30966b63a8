#pragma once

#include "mortot/analysis.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mortot::analysis {

/// Renders a study as CSV (a `#` header line, one row per pair, then `#`
/// summary lines) or JSON lines (header, pair and summary objects).
/// Distances carry 4 decimals, w1 and e0-gap summary statistics 2.
std::string format_study(const StudyResult &result);

/// Renders one comparison in the same row layout as the study output.
std::string format_pair(const PairRecord &record, OutputFormat format);

/// Reads pair records back from either output format (auto-detected).
/// Values come back at the printed precision.
std::vector<PairRecord> read_pair_records(std::istream &in);

} // namespace mortot::analysis
