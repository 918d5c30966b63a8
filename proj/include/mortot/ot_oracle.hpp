#pragma once

#include "mortot/lifetable.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mortot {

/// Coupling between two discrete measures, stored row-major
/// (rows = source atoms, columns = target atoms).
class TransportPlan {
public:
    TransportPlan(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double operator()(std::size_t i, std::size_t j) const { return mass_[i * cols_ + j]; }
    double &operator()(std::size_t i, std::size_t j) { return mass_[i * cols_ + j]; }

    std::vector<double> row_sums() const;
    std::vector<double> col_sums() const;
    double total() const;

    /// True if no two positive entries (i, j), (k, l) have i < k and j > l.
    bool is_monotone(double zero = 0.0) const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> mass_;
};

/// (sum_ij plan_ij |x_i - y_j|^p)^(1/p).
double plan_cost(const TransportPlan &plan, std::span<const double> source,
                 std::span<const double> target, double p);

struct ExactTransport {
    double cost = 0.0; // Wp, i.e. already raised to 1/p
    TransportPlan plan;
};

inline constexpr std::size_t default_atom_cap = 64;

/// Exact Kantorovich problem between two discrete measures, solved as a
/// transportation problem with the primal simplex method. Zero-mass atoms
/// are dropped before solving and come back as empty rows/columns. On sorted
/// inputs the returned plan is rearranged into the monotone coupling, which
/// is optimal for every p >= 1 on the line.
///
/// Throws CapacityError when either side has more than `atom_cap` atoms
/// after dropping zeros, DomainError for p < 1 or when either side's masses
/// do not sum to 1 within 1e-10.
ExactTransport solve_exact(std::span<const double> source_locations,
                           std::span<const double> source_masses,
                           std::span<const double> target_locations,
                           std::span<const double> target_masses, double p,
                           std::size_t atom_cap = default_atom_cap);

ExactTransport solve_exact(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b,
                           double p, std::size_t atom_cap = default_atom_cap);

/// Greedy fill in sorted order. Throws DomainError if locations are unsorted.
TransportPlan northwest_corner_plan(std::span<const double> source_locations,
                                    std::span<const double> source_masses,
                                    std::span<const double> target_locations,
                                    std::span<const double> target_masses);

TransportPlan northwest_corner_plan(const AgeAtDeathDistribution &a,
                                    const AgeAtDeathDistribution &b);

} // namespace mortot
