#pragma once

#include "mortot/lifetable.hpp"

#include <optional>
#include <string_view>

namespace mortot {

/// W1: area between the two CDFs, integrated exactly over the merged
/// breakpoint grid.
double w1_distance(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b);

/// Wp via the quantile coupling on the merged cumulative-mass grid.
/// Throws DomainError for p < 1.
double wp_distance(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b, double p);

/// Signed life expectancy gap, mean(a) - mean(b).
double e0_gap(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b);

/// Integral of F_b - F_a over the merged grid; equals e0_gap(a, b).
double signed_cdf_area(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b);

/// KL(a || b) in nats on integer-age bins. With smoothing > 0 both
/// histograms are floored at `smoothing` and renormalised first. Returns
/// +inf when a puts mass on a bin where b has none.
double kl_divergence(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b,
                     double smoothing = 0.0);

enum class OverlapVariant { one_minus_min_sum, jaccard };

std::string_view to_string(OverlapVariant variant);
std::optional<OverlapVariant> parse_overlap_variant(std::string_view text);

/// Non-overlap of the integer-age histograms, in [0, 1].
double non_overlap_index(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b,
                         OverlapVariant variant = OverlapVariant::jaccard);

enum class Dominance { a_dominates, b_dominates, crossing };

std::string_view to_string(Dominance dominance);

struct CrossingDiagnostics {
    int crossing_count = 0;
    Dominance dominance = Dominance::a_dominates;
};

inline constexpr double default_crossing_tolerance = 1e-10;

/// Sign changes of l_a(x) - l_b(x) over integer ages, survivorship taken
/// relative to each radix. Differences within `tolerance` count as zero and
/// do not interrupt a dominance run. Throws DomainError on mismatched grids.
CrossingDiagnostics crossing_diagnostics(const LifeTable &a, const LifeTable &b,
                                         double tolerance = default_crossing_tolerance);

/// Same test on the exact step survivorship functions, i.e. on every
/// segment of the merged atom grid. This refines the integer-age test: it
/// also sees crossings inside an age interval caused by differing ax.
CrossingDiagnostics step_crossing_diagnostics(const AgeAtDeathDistribution &a,
                                              const AgeAtDeathDistribution &b,
                                              double tolerance = default_crossing_tolerance);

/// Floor for the KL histograms in comparisons. Rounded life tables often
/// have zero deaths at extreme ages in one table only, which would make KL
/// infinite; a floor this small moves finite values by far less than the
/// printed precision. Pass 0 for the unsmoothed divergence.
inline constexpr double default_kl_smoothing = 1e-10;

struct CompareOptions {
    double p = 2.0;
    double kl_smoothing = default_kl_smoothing;
    OverlapVariant overlap_variant = OverlapVariant::jaccard;
    double crossing_tolerance = default_crossing_tolerance;
};

struct PairReport {
    double e0_a = 0.0;
    double e0_b = 0.0;
    double w1 = 0.0;
    double p = 2.0;
    double wp = 0.0;
    double e0_gap_signed = 0.0;
    double e0_gap_abs = 0.0;
    double kl_ab = 0.0;
    double kl_ba = 0.0;
    double non_overlap = 0.0;
    OverlapVariant overlap_variant = OverlapVariant::jaccard;
    /// Crossings of the exact step survivorship functions.
    int crossing_count = 0;
    Dominance dominance = Dominance::a_dominates;
    /// Crossings seen on the integer-age grid only.
    int integer_age_crossings = 0;

    double kl_symmetric() const { return 0.5 * (kl_ab + kl_ba); }
};

PairReport compare(const LifeTable &a, const LifeTable &b, const CompareOptions &options = {});

} // namespace mortot
