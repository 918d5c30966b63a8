#include "mortot/plot_data.hpp"

#include "mortot/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <variant>

namespace mortot::analysis {

namespace {

using Cell = std::variant<std::string, long long, double>;

struct PlotTable {
    std::string kind;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    int digits = 6;
};

std::string render(const PlotTable &t, OutputFormat format) {
    if (format == OutputFormat::json) {
        nlohmann::json doc;
        doc["kind"] = t.kind;
        doc["columns"] = t.columns;
        auto rows = nlohmann::json::array();
        const double scale = std::pow(10.0, t.digits);
        for (const auto &row : t.rows) {
            auto out = nlohmann::json::array();
            for (const auto &cell : row) {
                std::visit(
                    [&out, scale](const auto &v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, double>) {
                            out.push_back(std::round(v * scale) / scale);
                        } else {
                            out.push_back(v);
                        }
                    },
                    cell);
            }
            rows.push_back(std::move(out));
        }
        doc["rows"] = std::move(rows);
        return doc.dump() + "\n";
    }

    std::string out;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        out += (c == 0 ? "" : ",") + t.columns[c];
    }
    out += "\n";
    for (const auto &row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) {
                out += ",";
            }
            std::visit(
                [&out, &t](const auto &v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) {
                        out += fmt::format("{:.{}f}", v, t.digits);
                    } else if constexpr (std::is_same_v<T, long long>) {
                        out += std::to_string(v);
                    } else {
                        out += v;
                    }
                },
                row[c]);
        }
        out += "\n";
    }
    return out;
}

void add_histogram(PlotTable &t, const char *measure, const std::vector<double> &values,
                   double width, double upper) {
    const auto bins = static_cast<std::size_t>(std::floor(std::max(upper, 0.0) / width)) + 1;
    std::vector<long long> counts(bins, 0);
    for (const double v : values) {
        auto k = static_cast<std::size_t>(std::floor(std::max(v, 0.0) / width));
        counts[std::min(k, bins - 1)] += 1;
    }
    for (std::size_t k = 0; k < bins; ++k) {
        t.rows.push_back({std::string(measure), static_cast<double>(k) * width,
                          static_cast<double>(k + 1) * width, counts[k]});
    }
}

} // namespace

std::string_view to_string(PlotKind kind) {
    switch (kind) {
    case PlotKind::histogram: return "histogram";
    case PlotKind::scatter: return "scatter";
    case PlotKind::cdf_overlay: return "cdf_overlay";
    case PlotKind::distribution_overlay: return "distribution_overlay";
    }
    return "unknown";
}

std::optional<PlotKind> parse_plot_kind(std::string_view text) {
    for (const auto k : {PlotKind::histogram, PlotKind::scatter, PlotKind::cdf_overlay,
                         PlotKind::distribution_overlay}) {
        if (text == to_string(k)) {
            return k;
        }
    }
    return std::nullopt;
}

std::string emit_plot_data(const std::vector<PairRecord> &records, PlotKind kind,
                           OutputFormat format, double bin_width) {
    if (records.empty()) {
        throw DomainError("plot data needs at least one pair report");
    }
    PlotTable t;
    t.kind = std::string(to_string(kind));
    switch (kind) {
    case PlotKind::histogram: {
        if (!(bin_width > 0.0)) {
            throw DomainError(fmt::format("histogram bin width must be positive, got {}", bin_width));
        }
        t.columns = {"measure", "bin_lower", "bin_upper", "count"};
        t.digits = 4;
        std::vector<double> w1;
        std::vector<double> gap;
        for (const auto &r : records) {
            w1.push_back(r.report.w1);
            gap.push_back(r.report.e0_gap_abs);
        }
        // Shared bins so both measures overlay directly.
        const double upper = std::max(*std::max_element(w1.begin(), w1.end()),
                                      *std::max_element(gap.begin(), gap.end()));
        add_histogram(t, "w1", w1, bin_width, upper);
        add_histogram(t, "e0_gap_abs", gap, bin_width, upper);
        break;
    }
    case PlotKind::scatter:
        t.columns = {"w1", "e0_gap_abs", "kl_symmetric", "non_overlap"};
        t.digits = 4;
        for (const auto &r : records) {
            t.rows.push_back({r.report.w1, r.report.e0_gap_abs, r.report.kl_symmetric(),
                              r.report.non_overlap});
        }
        break;
    case PlotKind::cdf_overlay:
    case PlotKind::distribution_overlay:
        throw DomainError("overlay plots take a pair of life tables, not pair reports");
    }
    return render(t, format);
}

std::string emit_overlay(const LifeTable &a, const LifeTable &b, PlotKind kind,
                         OutputFormat format) {
    if (a.size() != b.size()) {
        throw DomainError(fmt::format("age grids differ: {} vs {} age groups", a.size(), b.size()));
    }
    PlotTable t;
    t.kind = std::string(to_string(kind));
    const auto sa = survivorship(a);
    const auto sb = survivorship(b);
    switch (kind) {
    case PlotKind::cdf_overlay:
        t.columns = {"age", "cdf_a", "cdf_b", "survivorship_a", "survivorship_b"};
        for (std::size_t x = 0; x < a.size(); ++x) {
            t.rows.push_back({static_cast<long long>(x), 1.0 - sa[x], 1.0 - sb[x], sa[x], sb[x]});
        }
        break;
    case PlotKind::distribution_overlay:
        t.columns = {"age", "deaths_a", "deaths_b"};
        for (std::size_t x = 0; x < a.size(); ++x) {
            t.rows.push_back({static_cast<long long>(x), a.dx()[x] / a.radix(),
                              b.dx()[x] / b.radix()});
        }
        break;
    case PlotKind::histogram:
    case PlotKind::scatter:
        throw DomainError("histogram and scatter plots take pair reports, not life tables");
    }
    return render(t, format);
}

} // namespace mortot::analysis
