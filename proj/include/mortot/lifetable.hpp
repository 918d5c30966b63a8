#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mortot {

inline constexpr double default_radix = 100000.0;

/// Raw column storage of a single-year life table. Row i describes the age
/// interval [i, i+1); the last row is the open interval [omega, inf).
struct LifeTableColumns {
    std::vector<double> mx; // central death rate
    std::vector<double> qx; // probability of dying in the interval
    std::vector<double> ax; // years lived in the interval by those dying in it
    std::vector<double> lx; // survivors at exact age x
    std::vector<double> dx; // deaths in the interval
    std::vector<double> Lx; // person-years lived in the interval
    std::vector<double> Tx; // person-years lived above age x
    std::vector<double> ex; // remaining life expectancy; NaN where lx == 0
    double radix = default_radix;
};

/// Immutable single-year life table on the age grid 0, 1, ..., omega+.
///
/// Construction only checks that the columns have a common length of at
/// least two; use validate() for the demographic invariants. The factory
/// functions below always produce tables that pass validate().
class LifeTable {
public:
    explicit LifeTable(LifeTableColumns columns);

    std::size_t size() const noexcept { return columns_.lx.size(); }
    int terminal_age() const noexcept { return static_cast<int>(size()) - 1; }
    double radix() const noexcept { return columns_.radix; }

    std::span<const double> mx() const noexcept { return columns_.mx; }
    std::span<const double> qx() const noexcept { return columns_.qx; }
    std::span<const double> ax() const noexcept { return columns_.ax; }
    std::span<const double> lx() const noexcept { return columns_.lx; }
    std::span<const double> dx() const noexcept { return columns_.dx; }
    std::span<const double> Lx() const noexcept { return columns_.Lx; }
    std::span<const double> Tx() const noexcept { return columns_.Tx; }
    std::span<const double> ex() const noexcept { return columns_.ex; }

    const LifeTableColumns &columns() const noexcept { return columns_; }

private:
    LifeTableColumns columns_;
};

/// Separation factors used when building from rates without explicit ax.
struct AxDefaults {
    double infant = 0.14;
    double other = 0.5;
};

/// Builds a table from central death rates with the single-decrement
/// conversion qx = mx / (1 + (1 - ax) mx), clamped at 1.
///
/// `ax` holds either one value per age, or one value per non-terminal age in
/// which case the terminal ax is 1 / mx(omega). Throws DomainError on empty
/// or short input, negative rates, or separation factors out of range.
LifeTable build_from_mx(std::span<const double> mx, std::span<const double> ax,
                        double radix = default_radix);

/// Same, with ax taken from `defaults` and terminal ax = 1 / mx(omega).
LifeTable build_from_mx(std::span<const double> mx, double radix = default_radix,
                        AxDefaults defaults = {});

/// Builds a table from a survivorship column and separation factors; radix is
/// lx[0]. Deaths are the first differences of lx and the terminal row
/// absorbs the remaining survivors. `mx`, when non-empty, is carried through
/// as published; otherwise it is derived as dx / Lx.
LifeTable build_from_lx(std::span<const double> lx, std::span<const double> ax,
                        std::span<const double> mx = {});

struct Violation {
    std::string column;
    int age = -1; // -1 for table-wide checks
    double magnitude = 0.0;
    std::string message;
};

/// Checks every structural invariant of a life table. Person-valued checks
/// use `relative_tolerance * radix` as the absolute slack.
std::vector<Violation> validate(const LifeTable &table, double relative_tolerance = 1e-12);

std::string describe(const Violation &violation);

/// Discrete age-at-death measure: point masses at strictly increasing
/// locations, with the integer age interval each atom falls in.
class AgeAtDeathDistribution {
public:
    /// Bins default to floor(location).
    AgeAtDeathDistribution(std::vector<double> locations, std::vector<double> masses);
    AgeAtDeathDistribution(std::vector<double> locations, std::vector<double> masses,
                           std::vector<int> age_bins);

    static AgeAtDeathDistribution point_mass(double location);

    std::size_t size() const noexcept { return locations_.size(); }
    std::span<const double> locations() const noexcept { return locations_; }
    std::span<const double> masses() const noexcept { return masses_; }
    std::span<const int> age_bins() const noexcept { return age_bins_; }

    /// Same masses with every location moved by `offset` years.
    AgeAtDeathDistribution shifted(double offset) const;

private:
    std::vector<double> locations_;
    std::vector<double> masses_;
    std::vector<int> age_bins_;
};

/// Right-continuous step CDF: value(k) holds on [breakpoint(k), breakpoint(k+1)).
class StepCdf {
public:
    explicit StepCdf(const AgeAtDeathDistribution &dist);

    std::span<const double> breakpoints() const noexcept { return breakpoints_; }
    std::span<const double> values() const noexcept { return values_; }

    /// F(x) = P(age at death <= x).
    double operator()(double x) const;
    /// F(x-) = P(age at death < x); survivorship at exact age x is 1 - F(x-).
    double left_limit(double x) const;

private:
    std::vector<double> breakpoints_;
    std::vector<double> values_;
};

/// One atom per age with deaths, at x + ax with mass dx / radix. Throws
/// DomainError if the table fails validate().
AgeAtDeathDistribution to_distribution(const LifeTable &table);

/// l(x) / radix at every integer age.
std::vector<double> survivorship(const LifeTable &table);

/// Mean age at death.
double e0_mean(const AgeAtDeathDistribution &dist);

/// Area under the survival curve, sum of Lx over radix. Throws DomainError
/// if the table fails validate().
double e0_survival_area(const LifeTable &table);

} // namespace mortot
