#pragma once

#include "mortot/analysis.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mortot::analysis {

enum class PlotKind { histogram, scatter, cdf_overlay, distribution_overlay };

std::string_view to_string(PlotKind kind);
std::optional<PlotKind> parse_plot_kind(std::string_view text);

/// Tidy plot table. Columns:
///   histogram: measure, bin_lower, bin_upper, count (for w1 and e0_gap_abs)
///   scatter:   w1, e0_gap_abs, kl_symmetric, non_overlap
/// Throws DomainError on empty input, overlay kinds, or bin_width <= 0.
std::string emit_plot_data(const std::vector<PairRecord> &records, PlotKind kind,
                           OutputFormat format, double bin_width = 0.5);

/// Overlays for one pair of tables on their shared integer-age grid.
///   cdf_overlay:          age, cdf_a, cdf_b, survivorship_a, survivorship_b
///   distribution_overlay: age, deaths_a, deaths_b (fractions of the radix)
std::string emit_overlay(const LifeTable &a, const LifeTable &b, PlotKind kind,
                         OutputFormat format);

} // namespace mortot::analysis
