#include "mortot/distances.hpp"

#include "mortot/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace mortot {

namespace {

constexpr double infinity = std::numeric_limits<double>::infinity();

// Walks the merged breakpoint grid and calls visit(F_a, F_b, length) for
// every segment between consecutive breakpoints.
template <typename Visit>
void for_each_segment(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b,
                      Visit &&visit) {
    const auto xa = a.locations();
    const auto xb = b.locations();
    const auto ma = a.masses();
    const auto mb = b.masses();
    std::size_t i = 0;
    std::size_t j = 0;
    double fa = 0.0;
    double fb = 0.0;
    double prev = std::min(xa.front(), xb.front());
    while (i < xa.size() || j < xb.size()) {
        const double next = std::min(i < xa.size() ? xa[i] : infinity,
                                     j < xb.size() ? xb[j] : infinity);
        if (next > prev) {
            visit(fa, fb, next - prev);
        }
        while (i < xa.size() && xa[i] == next) {
            fa += ma[i++];
        }
        while (j < xb.size() && xb[j] == next) {
            fb += mb[j++];
        }
        prev = next;
    }
}

std::vector<double> cumulative(std::span<const double> masses) {
    std::vector<double> out(masses.size());
    std::partial_sum(masses.begin(), masses.end(), out.begin());
    return out;
}

struct Histograms {
    std::vector<double> a;
    std::vector<double> b;
};

// Sums masses per integer age bin on the union of both bin sets.
Histograms integer_age_histograms(const AgeAtDeathDistribution &a,
                                  const AgeAtDeathDistribution &b) {
    std::map<int, std::pair<double, double>> bins;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bins[a.age_bins()[i]].first += a.masses()[i];
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        bins[b.age_bins()[i]].second += b.masses()[i];
    }
    Histograms h;
    h.a.reserve(bins.size());
    h.b.reserve(bins.size());
    for (const auto &[age, masses] : bins) {
        h.a.push_back(masses.first);
        h.b.push_back(masses.second);
    }
    return h;
}

void floor_and_renormalise(std::vector<double> &p, double floor_value) {
    double total = 0.0;
    for (auto &v : p) {
        v = std::max(v, floor_value);
        total += v;
    }
    for (auto &v : p) {
        v /= total;
    }
}

CrossingDiagnostics classify(std::span<const double> differences, double tolerance) {
    CrossingDiagnostics out;
    int last_sign = 0;
    bool any_positive = false;
    bool any_negative = false;
    for (const double d : differences) {
        const int sign = d > tolerance ? 1 : (d < -tolerance ? -1 : 0);
        if (sign == 0) {
            continue;
        }
        if (last_sign != 0 && sign != last_sign) {
            ++out.crossing_count;
        }
        last_sign = sign;
        any_positive = any_positive || sign > 0;
        any_negative = any_negative || sign < 0;
    }
    if (!any_negative) {
        out.dominance = Dominance::a_dominates;
    } else if (!any_positive) {
        out.dominance = Dominance::b_dominates;
    } else {
        out.dominance = Dominance::crossing;
    }
    return out;
}

} // namespace

double w1_distance(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b) {
    double area = 0.0;
    for_each_segment(a, b, [&area](double fa, double fb, double length) {
        area += std::abs(fa - fb) * length;
    });
    return area;
}

double signed_cdf_area(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b) {
    double area = 0.0;
    for_each_segment(a, b, [&area](double fa, double fb, double length) {
        area += (fb - fa) * length;
    });
    return area;
}

double wp_distance(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b, double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) {
        throw DomainError(fmt::format("Wasserstein exponent must be >= 1, got {}", p));
    }
    const auto ca = cumulative(a.masses());
    const auto cb = cumulative(b.masses());
    std::vector<double> grid;
    grid.reserve(ca.size() + cb.size());
    std::merge(ca.begin(), ca.end(), cb.begin(), cb.end(), std::back_inserter(grid));

    auto quantile = [](const std::vector<double> &cdf, std::span<const double> x, double u) {
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const auto idx = std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
        return x[idx];
    };

    double total = 0.0;
    double prev = 0.0;
    for (const double u : grid) {
        if (u > prev) {
            const double gap =
                std::abs(quantile(ca, a.locations(), prev) - quantile(cb, b.locations(), prev));
            total += (u - prev) * (p == 1.0 ? gap : std::pow(gap, p));
            prev = u;
        }
    }
    return p == 1.0 ? total : std::pow(total, 1.0 / p);
}

double e0_gap(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b) {
    return e0_mean(a) - e0_mean(b);
}

double kl_divergence(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b,
                     double smoothing) {
    if (!(smoothing >= 0.0)) {
        throw DomainError(fmt::format("KL smoothing must be >= 0, got {}", smoothing));
    }
    auto h = integer_age_histograms(a, b);
    if (smoothing > 0.0) {
        floor_and_renormalise(h.a, smoothing);
        floor_and_renormalise(h.b, smoothing);
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < h.a.size(); ++i) {
        const double p = h.a[i];
        const double q = h.b[i];
        if (p <= 0.0) {
            continue;
        }
        if (q <= 0.0) {
            return infinity;
        }
        kl += p * std::log(p / q);
    }
    return std::max(kl, 0.0);
}

std::string_view to_string(OverlapVariant variant) {
    switch (variant) {
    case OverlapVariant::one_minus_min_sum: return "one_minus_min_sum";
    case OverlapVariant::jaccard: return "jaccard";
    }
    return "unknown";
}

std::optional<OverlapVariant> parse_overlap_variant(std::string_view text) {
    if (text == "one_minus_min_sum") {
        return OverlapVariant::one_minus_min_sum;
    }
    if (text == "jaccard") {
        return OverlapVariant::jaccard;
    }
    return std::nullopt;
}

double non_overlap_index(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b,
                         OverlapVariant variant) {
    const auto h = integer_age_histograms(a, b);
    double shared = 0.0;
    double joint = 0.0;
    for (std::size_t i = 0; i < h.a.size(); ++i) {
        shared += std::min(h.a[i], h.b[i]);
        joint += std::max(h.a[i], h.b[i]);
    }
    const double value =
        variant == OverlapVariant::jaccard ? 1.0 - shared / joint : 1.0 - shared;
    return std::clamp(value, 0.0, 1.0);
}

std::string_view to_string(Dominance dominance) {
    switch (dominance) {
    case Dominance::a_dominates: return "A_dominates";
    case Dominance::b_dominates: return "B_dominates";
    case Dominance::crossing: return "crossing";
    }
    return "unknown";
}

CrossingDiagnostics crossing_diagnostics(const LifeTable &a, const LifeTable &b,
                                         double tolerance) {
    if (a.size() != b.size()) {
        throw DomainError(fmt::format("age grids differ: {} vs {} age groups", a.size(), b.size()));
    }
    std::vector<double> differences(a.size());
    for (std::size_t x = 0; x < a.size(); ++x) {
        differences[x] = a.lx()[x] / a.radix() - b.lx()[x] / b.radix();
    }
    return classify(differences, tolerance);
}

CrossingDiagnostics step_crossing_diagnostics(const AgeAtDeathDistribution &a,
                                              const AgeAtDeathDistribution &b,
                                              double tolerance) {
    std::vector<double> differences;
    differences.reserve(a.size() + b.size());
    // S_a - S_b = F_b - F_a on each segment.
    for_each_segment(a, b, [&differences](double fa, double fb, double) {
        differences.push_back(fb - fa);
    });
    return classify(differences, tolerance);
}

PairReport compare(const LifeTable &a, const LifeTable &b, const CompareOptions &options) {
    if (a.size() != b.size()) {
        throw DomainError(fmt::format("age grids differ: {} vs {} age groups", a.size(), b.size()));
    }
    const auto da = to_distribution(a);
    const auto db = to_distribution(b);

    PairReport r;
    r.e0_a = e0_mean(da);
    r.e0_b = e0_mean(db);
    r.w1 = w1_distance(da, db);
    r.p = options.p;
    r.wp = wp_distance(da, db, options.p);
    r.e0_gap_signed = r.e0_a - r.e0_b;
    r.e0_gap_abs = std::abs(r.e0_gap_signed);
    r.kl_ab = kl_divergence(da, db, options.kl_smoothing);
    r.kl_ba = kl_divergence(db, da, options.kl_smoothing);
    r.overlap_variant = options.overlap_variant;
    r.non_overlap = non_overlap_index(da, db, options.overlap_variant);
    const auto step = step_crossing_diagnostics(da, db, options.crossing_tolerance);
    r.crossing_count = step.crossing_count;
    r.dominance = step.dominance;
    r.integer_age_crossings = crossing_diagnostics(a, b, options.crossing_tolerance).crossing_count;
    return r;
}

} // namespace mortot
