#include "mortot/lifetable.hpp"

#include "mortot/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mortot {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

// Fills Lx, Tx and ex from lx, dx and ax.
void complete_person_years(LifeTableColumns &c) {
    const auto n = c.lx.size();
    c.Lx.assign(n, 0.0);
    c.Tx.assign(n, 0.0);
    c.ex.assign(n, nan);
    for (std::size_t x = 0; x + 1 < n; ++x) {
        c.Lx[x] = c.lx[x + 1] + c.ax[x] * c.dx[x];
    }
    c.Lx[n - 1] = c.ax[n - 1] * c.dx[n - 1];

    double above = 0.0;
    for (std::size_t x = n; x-- > 0;) {
        above += c.Lx[x];
        c.Tx[x] = above;
        if (c.lx[x] > 0.0) {
            c.ex[x] = c.Tx[x] / c.lx[x];
        }
    }
}

void require_finite(std::span<const double> values, const char *column) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DomainError(fmt::format("{} at age {} is not finite", column, i));
        }
    }
}

} // namespace

const char *category_name(ErrorCategory category) noexcept {
    switch (category) {
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::format: return "format";
    case ErrorCategory::not_found: return "not-found";
    case ErrorCategory::completeness: return "completeness";
    case ErrorCategory::capacity: return "capacity";
    case ErrorCategory::setup: return "setup";
    case ErrorCategory::io: return "io";
    }
    return "unknown";
}

LifeTable::LifeTable(LifeTableColumns columns) : columns_{std::move(columns)} {
    const auto n = columns_.lx.size();
    if (n < 2) {
        throw DomainError("life table needs at least two age groups");
    }
    for (const auto *col : {&columns_.mx, &columns_.qx, &columns_.ax, &columns_.dx,
                            &columns_.Lx, &columns_.Tx, &columns_.ex}) {
        if (col->size() != n) {
            throw DomainError(fmt::format("life table columns differ in length ({} vs {})",
                                          col->size(), n));
        }
    }
}

LifeTable build_from_mx(std::span<const double> mx, std::span<const double> ax, double radix) {
    const auto n = mx.size();
    if (n == 0) {
        throw DomainError("empty mortality rate column");
    }
    if (n < 2) {
        throw DomainError("life table needs at least two age groups");
    }
    if (ax.size() != n && ax.size() + 1 != n) {
        throw DomainError(fmt::format("ax has {} entries for {} age groups", ax.size(), n));
    }
    if (!(radix > 0.0) || !std::isfinite(radix)) {
        throw DomainError(fmt::format("radix must be positive, got {}", radix));
    }
    require_finite(mx, "mx");
    require_finite(ax, "ax");
    for (std::size_t x = 0; x < n; ++x) {
        if (mx[x] < 0.0) {
            throw DomainError(fmt::format("negative mx {} at age {}", mx[x], x));
        }
    }
    for (std::size_t x = 0; x + 1 < n; ++x) {
        if (ax[x] < 0.0 || ax[x] > 1.0) {
            throw DomainError(fmt::format("ax {} at age {} outside [0, 1]", ax[x], x));
        }
    }

    LifeTableColumns c;
    c.radix = radix;
    c.mx.assign(mx.begin(), mx.end());
    c.ax.assign(ax.begin(), ax.end());
    if (ax.size() + 1 == n) {
        if (!(mx[n - 1] > 0.0)) {
            throw DomainError("terminal mx must be positive to derive terminal ax");
        }
        c.ax.push_back(1.0 / mx[n - 1]);
    } else if (!(ax[n - 1] > 0.0)) {
        throw DomainError(fmt::format("terminal ax must be positive, got {}", ax[n - 1]));
    }

    c.qx.resize(n);
    c.lx.resize(n);
    c.dx.resize(n);
    c.lx[0] = radix;
    for (std::size_t x = 0; x + 1 < n; ++x) {
        const double q = c.mx[x] / (1.0 + (1.0 - c.ax[x]) * c.mx[x]);
        c.qx[x] = std::min(q, 1.0);
        c.dx[x] = c.lx[x] * c.qx[x];
        c.lx[x + 1] = c.lx[x] - c.dx[x];
    }
    c.qx[n - 1] = 1.0;
    c.dx[n - 1] = c.lx[n - 1];

    complete_person_years(c);
    return LifeTable{std::move(c)};
}

LifeTable build_from_mx(std::span<const double> mx, double radix, AxDefaults defaults) {
    if (mx.empty()) {
        throw DomainError("empty mortality rate column");
    }
    std::vector<double> ax(mx.size() - 1, defaults.other);
    if (!ax.empty()) {
        ax[0] = defaults.infant;
    }
    return build_from_mx(mx, ax, radix);
}

LifeTable build_from_lx(std::span<const double> lx, std::span<const double> ax,
                        std::span<const double> mx) {
    const auto n = lx.size();
    if (n < 2) {
        throw DomainError("life table needs at least two age groups");
    }
    if (ax.size() != n) {
        throw DomainError(fmt::format("ax has {} entries for {} age groups", ax.size(), n));
    }
    if (!mx.empty() && mx.size() != n) {
        throw DomainError(fmt::format("mx has {} entries for {} age groups", mx.size(), n));
    }
    require_finite(lx, "lx");
    require_finite(ax, "ax");
    if (!(lx[0] > 0.0)) {
        throw DomainError("lx at age 0 must be positive");
    }

    LifeTableColumns c;
    c.radix = lx[0];
    c.lx.assign(lx.begin(), lx.end());
    c.ax.assign(ax.begin(), ax.end());
    c.dx.resize(n);
    c.qx.resize(n);
    for (std::size_t x = 0; x + 1 < n; ++x) {
        c.dx[x] = c.lx[x] - c.lx[x + 1];
        c.qx[x] = c.lx[x] > 0.0 ? c.dx[x] / c.lx[x] : 1.0;
    }
    c.dx[n - 1] = c.lx[n - 1];
    c.qx[n - 1] = 1.0;

    complete_person_years(c);
    if (mx.empty()) {
        c.mx.resize(n);
        for (std::size_t x = 0; x < n; ++x) {
            c.mx[x] = c.Lx[x] > 0.0 ? c.dx[x] / c.Lx[x] : nan;
        }
    } else {
        c.mx.assign(mx.begin(), mx.end());
    }
    return LifeTable{std::move(c)};
}

std::vector<Violation> validate(const LifeTable &table, double relative_tolerance) {
    std::vector<Violation> out;
    const auto &c = table.columns();
    const auto n = table.size();
    const int omega = table.terminal_age();
    const double radix = table.radix();
    const double tol = relative_tolerance * std::abs(radix);

    auto report = [&out](std::string column, int age, double magnitude, std::string message) {
        out.push_back({std::move(column), age, magnitude, std::move(message)});
    };

    if (!(radix > 0.0) || !std::isfinite(radix)) {
        report("radix", -1, radix, "radix must be positive");
        return out;
    }
    if (std::abs(c.lx[0] - radix) > tol) {
        report("lx", 0, c.lx[0] - radix, "l(0) differs from radix");
    }

    for (std::size_t i = 0; i < n; ++i) {
        const int age = static_cast<int>(i);
        const bool terminal = age == omega;
        if (!std::isnan(c.mx[i]) && !(c.mx[i] >= 0.0 && std::isfinite(c.mx[i]))) {
            report("mx", age, c.mx[i], "death rate must be finite and non-negative");
        }
        if (!(c.qx[i] >= 0.0 && c.qx[i] <= 1.0)) {
            report("qx", age, c.qx[i], "probability of dying outside [0, 1]");
        } else if (terminal && c.qx[i] != 1.0) {
            report("qx", age, 1.0 - c.qx[i], "terminal qx must be 1");
        }
        if (terminal) {
            if (!(c.ax[i] > 0.0 && std::isfinite(c.ax[i]))) {
                report("ax", age, c.ax[i], "terminal ax must be positive");
            }
        } else if (!(c.ax[i] >= 0.0 && c.ax[i] <= 1.0)) {
            report("ax", age, c.ax[i], "ax outside [0, 1]");
        }
        if (!(c.dx[i] >= -tol)) {
            report("dx", age, c.dx[i], "negative deaths");
        }
        if (!terminal) {
            if (!(c.lx[i + 1] <= c.lx[i] + tol)) {
                report("lx", age + 1, c.lx[i + 1] - c.lx[i], "survivorship increases");
            }
            const double step = c.lx[i] - c.dx[i] - c.lx[i + 1];
            if (!(std::abs(step) <= tol)) {
                report("dx", age, step, "l(x+1) != l(x) - d(x)");
            }
            const double person_years = c.lx[i + 1] + c.ax[i] * c.dx[i] - c.Lx[i];
            if (!(std::abs(person_years) <= tol)) {
                report("Lx", age, person_years, "Lx != l(x+1) + a(x) d(x)");
            }
        } else {
            const double person_years = c.ax[i] * c.dx[i] - c.Lx[i];
            if (!(std::abs(person_years) <= tol * std::max(1.0, c.ax[i]))) {
                report("Lx", age, person_years, "terminal Lx != a d");
            }
        }
    }

    const double deaths = std::accumulate(c.dx.begin(), c.dx.end(), 0.0);
    if (!(std::abs(deaths - radix) <= tol)) {
        report("dx", -1, deaths - radix, "deaths do not sum to radix");
    }

    // Sums of n terms carry n roundings.
    const double sum_tol = tol * static_cast<double>(n) * 100.0;
    double above = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        above += c.Lx[i];
        const int age = static_cast<int>(i);
        if (!(std::abs(c.Tx[i] - above) <= sum_tol)) {
            report("Tx", age, c.Tx[i] - above, "Tx != sum of Ly above x");
        }
        if (c.lx[i] > 0.0) {
            const double expected = c.Tx[i] / c.lx[i];
            const double diff = c.ex[i] - expected;
            if (!(std::abs(diff) <= relative_tolerance * std::max(1.0, std::abs(expected)) * 100.0)) {
                report("ex", age, diff, "ex != Tx / lx");
            }
        }
    }
    return out;
}

std::string describe(const Violation &v) {
    if (v.age < 0) {
        return fmt::format("{}: {} (magnitude {:.6g})", v.column, v.message, v.magnitude);
    }
    return fmt::format("{} at age {}: {} (magnitude {:.6g})", v.column, v.age, v.message,
                       v.magnitude);
}

namespace {

std::vector<int> floor_bins(std::span<const double> locations) {
    std::vector<int> bins(locations.size());
    std::transform(locations.begin(), locations.end(), bins.begin(),
                   [](double x) { return static_cast<int>(std::floor(x)); });
    return bins;
}

} // namespace

AgeAtDeathDistribution::AgeAtDeathDistribution(std::vector<double> locations,
                                               std::vector<double> masses)
    : AgeAtDeathDistribution(locations, std::move(masses), floor_bins(locations)) {}

AgeAtDeathDistribution::AgeAtDeathDistribution(std::vector<double> locations,
                                               std::vector<double> masses,
                                               std::vector<int> age_bins)
    : locations_{std::move(locations)}, masses_{std::move(masses)}, age_bins_{std::move(age_bins)} {
    if (locations_.empty()) {
        throw DomainError("distribution needs at least one atom");
    }
    if (masses_.size() != locations_.size() || age_bins_.size() != locations_.size()) {
        throw DomainError("distribution locations, masses and bins differ in length");
    }
    for (std::size_t i = 0; i < locations_.size(); ++i) {
        if (!std::isfinite(locations_[i])) {
            throw DomainError(fmt::format("atom {} has a non-finite location", i));
        }
        if (!(masses_[i] >= 0.0) || !std::isfinite(masses_[i])) {
            throw DomainError(fmt::format("atom {} has invalid mass {}", i, masses_[i]));
        }
        if (i > 0 && !(locations_[i] > locations_[i - 1])) {
            throw DomainError(fmt::format("locations not strictly increasing at atom {}", i));
        }
    }
    const double total = std::accumulate(masses_.begin(), masses_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12) {
        throw DomainError(fmt::format("masses sum to {:.17g}, expected 1", total));
    }
}

AgeAtDeathDistribution AgeAtDeathDistribution::point_mass(double location) {
    return AgeAtDeathDistribution({location}, {1.0});
}

AgeAtDeathDistribution AgeAtDeathDistribution::shifted(double offset) const {
    std::vector<double> moved(locations_);
    for (auto &x : moved) {
        x += offset;
    }
    return AgeAtDeathDistribution(std::move(moved), masses_, age_bins_);
}

StepCdf::StepCdf(const AgeAtDeathDistribution &dist)
    : breakpoints_(dist.locations().begin(), dist.locations().end()) {
    values_.resize(breakpoints_.size());
    const auto masses = dist.masses();
    std::partial_sum(masses.begin(), masses.end(), values_.begin());
}

double StepCdf::operator()(double x) const {
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    if (it == breakpoints_.begin()) {
        return 0.0;
    }
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double StepCdf::left_limit(double x) const {
    const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x);
    if (it == breakpoints_.begin()) {
        return 0.0;
    }
    return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

AgeAtDeathDistribution to_distribution(const LifeTable &table) {
    if (const auto violations = validate(table); !violations.empty()) {
        throw DomainError(fmt::format("invalid life table ({} violations, first: {})",
                                      violations.size(), describe(violations.front())));
    }
    std::vector<double> locations;
    std::vector<double> masses;
    std::vector<int> bins;
    locations.reserve(table.size());
    masses.reserve(table.size());
    bins.reserve(table.size());
    const auto ax = table.ax();
    const auto dx = table.dx();
    for (std::size_t x = 0; x < table.size(); ++x) {
        const double location = static_cast<double>(x) + ax[x];
        const double mass = dx[x] / table.radix();
        if (mass == 0.0) {
            continue;
        }
        // ax = 1 followed by ax = 0 puts two atoms on the same age.
        if (!locations.empty() && location <= locations.back()) {
            masses.back() += mass;
            continue;
        }
        locations.push_back(location);
        masses.push_back(mass);
        bins.push_back(static_cast<int>(x));
    }
    return AgeAtDeathDistribution(std::move(locations), std::move(masses), std::move(bins));
}

std::vector<double> survivorship(const LifeTable &table) {
    std::vector<double> out(table.lx().begin(), table.lx().end());
    for (auto &l : out) {
        l /= table.radix();
    }
    return out;
}

double e0_mean(const AgeAtDeathDistribution &dist) {
    const auto x = dist.locations();
    const auto m = dist.masses();
    return std::inner_product(x.begin(), x.end(), m.begin(), 0.0);
}

double e0_survival_area(const LifeTable &table) {
    if (const auto violations = validate(table); !violations.empty()) {
        throw DomainError(fmt::format("invalid life table ({} violations, first: {})",
                                      violations.size(), describe(violations.front())));
    }
    const auto L = table.Lx();
    return std::accumulate(L.begin(), L.end(), 0.0) / table.radix();
}

} // namespace mortot
