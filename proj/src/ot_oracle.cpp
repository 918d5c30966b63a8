#include "mortot/ot_oracle.hpp"

#include "mortot/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <numeric>
#include <stdexcept>

namespace mortot {

TransportPlan::TransportPlan(std::size_t rows, std::size_t cols)
    : rows_{rows}, cols_{cols}, mass_(rows * cols, 0.0) {}

std::vector<double> TransportPlan::row_sums() const {
    std::vector<double> out(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            out[i] += (*this)(i, j);
        }
    }
    return out;
}

std::vector<double> TransportPlan::col_sums() const {
    std::vector<double> out(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            out[j] += (*this)(i, j);
        }
    }
    return out;
}

double TransportPlan::total() const { return std::accumulate(mass_.begin(), mass_.end(), 0.0); }

bool TransportPlan::is_monotone(double zero) const {
    // For each row, the columns used must not start before the last column
    // used by any earlier row.
    std::size_t reach = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
        std::size_t first = cols_;
        std::size_t last = 0;
        for (std::size_t j = 0; j < cols_; ++j) {
            if ((*this)(i, j) > zero) {
                first = std::min(first, j);
                last = j;
            }
        }
        if (first == cols_) {
            continue;
        }
        if (first < reach) {
            return false;
        }
        reach = last;
    }
    return true;
}

double plan_cost(const TransportPlan &plan, std::span<const double> source,
                 std::span<const double> target, double p) {
    double total = 0.0;
    for (std::size_t i = 0; i < plan.rows(); ++i) {
        for (std::size_t j = 0; j < plan.cols(); ++j) {
            if (plan(i, j) != 0.0) {
                total += plan(i, j) * std::pow(std::abs(source[i] - target[j]), p);
            }
        }
    }
    return std::pow(total, 1.0 / p);
}

namespace {

// Primal transportation simplex on a dense m x n instance. The basis is a
// spanning tree over row and column nodes with m + n - 1 cells, degenerate
// zero-flow cells included. Entering and leaving cells follow Bland's
// smallest-index rule so degenerate pivots cannot cycle.
class TransportationSimplex {
public:
    TransportationSimplex(std::vector<double> cost, std::vector<double> supply,
                          std::vector<double> demand)
        : m_{supply.size()}, n_{demand.size()}, cost_{std::move(cost)},
          flow_(m_ * n_, 0.0), basic_(m_ * n_, false), supply_{std::move(supply)},
          demand_{std::move(demand)} {
        const double scale = std::max(1.0, *std::max_element(cost_.begin(), cost_.end()));
        reduced_cost_tolerance_ = 1e-13 * scale;
    }

    void solve() {
        initial_basis();
        const std::size_t max_pivots = 50 * (m_ + n_) * (m_ + n_) + 1000;
        for (std::size_t pivots = 0;; ++pivots) {
            if (pivots > max_pivots) {
                throw std::logic_error("transportation simplex exceeded its pivot limit");
            }
            compute_potentials();
            const auto entering = find_entering();
            if (!entering) {
                return;
            }
            pivot(*entering);
        }
    }

    double flow(std::size_t i, std::size_t j) const { return flow_[i * n_ + j]; }

    double objective() const {
        double total = 0.0;
        for (std::size_t k = 0; k < flow_.size(); ++k) {
            total += flow_[k] * cost_[k];
        }
        return total;
    }

private:
    // Northwest corner rule over columns taken in reverse order. This is a
    // valid basic feasible solution but, on sorted 1D inputs, the
    // anti-monotone one, so the simplex has real work to do.
    void initial_basis() {
        auto s = supply_;
        auto d = demand_;
        std::size_t i = 0;
        std::size_t c = 0;
        while (true) {
            const std::size_t j = n_ - 1 - c;
            const double amount = std::min(s[i], d[j]);
            flow_[i * n_ + j] = amount;
            basic_[i * n_ + j] = true;
            s[i] -= amount;
            d[j] -= amount;
            if (i == m_ - 1 && c == n_ - 1) {
                break;
            }
            if (i == m_ - 1) {
                ++c;
            } else if (c == n_ - 1) {
                ++i;
            } else if (s[i] <= d[j]) {
                ++i;
            } else {
                ++c;
            }
        }
    }

    void compute_potentials() {
        u_.assign(m_, 0.0);
        v_.assign(n_, 0.0);
        std::vector<bool> row_done(m_, false);
        std::vector<bool> col_done(n_, false);
        build_adjacency();
        std::deque<std::size_t> queue{0};
        row_done[0] = true;
        while (!queue.empty()) {
            const auto node = queue.front();
            queue.pop_front();
            for (const auto other : adjacency_[node]) {
                if (node < m_) {
                    const auto j = other - m_;
                    if (!col_done[j]) {
                        v_[j] = cost_[node * n_ + j] - u_[node];
                        col_done[j] = true;
                        queue.push_back(other);
                    }
                } else {
                    const auto j = node - m_;
                    if (!row_done[other]) {
                        u_[other] = cost_[other * n_ + j] - v_[j];
                        row_done[other] = true;
                        queue.push_back(other);
                    }
                }
            }
        }
    }

    void build_adjacency() {
        adjacency_.assign(m_ + n_, {});
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (basic_[i * n_ + j]) {
                    adjacency_[i].push_back(m_ + j);
                    adjacency_[m_ + j].push_back(i);
                }
            }
        }
    }

    std::optional<std::size_t> find_entering() const {
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) {
                const auto k = i * n_ + j;
                if (!basic_[k] && cost_[k] - u_[i] - v_[j] < -reduced_cost_tolerance_) {
                    return k;
                }
            }
        }
        return std::nullopt;
    }

    void pivot(std::size_t entering) {
        const auto ei = entering / n_;
        const auto ej = entering % n_;

        // Tree path from row node ei to column node m + ej.
        std::vector<std::size_t> parent(m_ + n_, m_ + n_);
        std::deque<std::size_t> queue{ei};
        parent[ei] = ei;
        while (!queue.empty()) {
            const auto node = queue.front();
            queue.pop_front();
            if (node == m_ + ej) {
                break;
            }
            for (const auto other : adjacency_[node]) {
                if (parent[other] == m_ + n_) {
                    parent[other] = node;
                    queue.push_back(other);
                }
            }
        }

        // Walking back from the column node, path cells alternate -, +, -, ...
        std::vector<std::size_t> minus_cells;
        std::vector<std::size_t> plus_cells;
        bool minus = true;
        for (auto node = m_ + ej; node != ei; node = parent[node]) {
            const auto prev = parent[node];
            const auto row = node < m_ ? node : prev;
            const auto col = (node < m_ ? prev : node) - m_;
            (minus ? minus_cells : plus_cells).push_back(row * n_ + col);
            minus = !minus;
        }

        double theta = flow_[minus_cells.front()];
        for (const auto k : minus_cells) {
            theta = std::min(theta, flow_[k]);
        }
        std::size_t leaving = flow_.size();
        for (const auto k : minus_cells) {
            if (flow_[k] == theta) {
                leaving = std::min(leaving, k);
            }
        }

        flow_[entering] += theta;
        for (const auto k : plus_cells) {
            flow_[k] += theta;
        }
        for (const auto k : minus_cells) {
            flow_[k] -= theta;
        }
        flow_[leaving] = 0.0;
        basic_[leaving] = false;
        basic_[entering] = true;
    }

    std::size_t m_;
    std::size_t n_;
    std::vector<double> cost_;
    std::vector<double> flow_;
    std::vector<bool> basic_;
    std::vector<double> supply_;
    std::vector<double> demand_;
    std::vector<double> u_;
    std::vector<double> v_;
    std::vector<std::vector<std::size_t>> adjacency_;
    double reduced_cost_tolerance_ = 0.0;
};

struct Support {
    std::vector<std::size_t> index; // original atom index of each kept atom
    std::vector<double> location;
    std::vector<double> mass;
};

Support positive_atoms(std::span<const double> locations, std::span<const double> masses,
                       const char *side) {
    if (locations.size() != masses.size()) {
        throw DomainError(fmt::format("{} locations and masses differ in length", side));
    }
    Support s;
    double total = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (!(masses[i] >= 0.0) || !std::isfinite(masses[i]) || !std::isfinite(locations[i])) {
            throw DomainError(fmt::format("{} atom {} is invalid", side, i));
        }
        total += masses[i];
        if (masses[i] > 0.0) {
            s.index.push_back(i);
            s.location.push_back(locations[i]);
            s.mass.push_back(masses[i]);
        }
    }
    if (std::abs(total - 1.0) > 1e-10) {
        throw DomainError(fmt::format("{} masses sum to {:.17g}, expected 1", side, total));
    }
    return s;
}

bool ascending(std::span<const double> x) { return std::is_sorted(x.begin(), x.end()); }

// Swaps crossing mass pairs (i -> j, k -> l with i < k, j > l) into
// (i -> l, k -> j). Marginals are preserved and, on the line, the cost under
// any convex |x - y|^p does not increase. The fixed point is the monotone
// coupling.
void uncross(TransportPlan &plan) {
    const auto m = plan.rows();
    const auto n = plan.cols();
    const std::size_t max_passes = 4 * (m + n) * (m + n) + 16;
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
        bool changed = false;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 1; j < n; ++j) {
                for (std::size_t k = i + 1; k < m && plan(i, j) > 0.0; ++k) {
                    for (std::size_t l = 0; l < j && plan(i, j) > 0.0; ++l) {
                        const double moved = std::min(plan(i, j), plan(k, l));
                        if (moved <= 0.0) {
                            continue;
                        }
                        plan(i, j) -= moved;
                        plan(k, l) -= moved;
                        plan(i, l) += moved;
                        plan(k, j) += moved;
                        changed = true;
                    }
                }
            }
        }
        if (!changed) {
            return;
        }
    }
    throw std::logic_error("plan rearrangement did not converge");
}

} // namespace

ExactTransport solve_exact(std::span<const double> source_locations,
                           std::span<const double> source_masses,
                           std::span<const double> target_locations,
                           std::span<const double> target_masses, double p,
                           std::size_t atom_cap) {
    if (!(p >= 1.0) || !std::isfinite(p)) {
        throw DomainError(fmt::format("Wasserstein exponent must be >= 1, got {}", p));
    }
    const auto src = positive_atoms(source_locations, source_masses, "source");
    const auto dst = positive_atoms(target_locations, target_masses, "target");
    if (src.mass.size() > atom_cap || dst.mass.size() > atom_cap) {
        throw CapacityError(fmt::format("exact solver is capped at {} atoms per side, got {} x {}",
                                        atom_cap, src.mass.size(), dst.mass.size()));
    }

    const auto m = src.mass.size();
    const auto n = dst.mass.size();
    std::vector<double> cost(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cost[i * n + j] = std::pow(std::abs(src.location[i] - dst.location[j]), p);
        }
    }
    // Absorb the sub-1e-10 imbalance into the last target so the problem is
    // exactly balanced.
    auto demand = dst.mass;
    demand.back() += std::accumulate(src.mass.begin(), src.mass.end(), 0.0) -
                     std::accumulate(demand.begin(), demand.end(), 0.0);
    demand.back() = std::max(demand.back(), 0.0);

    TransportationSimplex simplex(std::move(cost), src.mass, std::move(demand));
    simplex.solve();

    TransportPlan plan(source_masses.size(), target_masses.size());
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            plan(src.index[i], dst.index[j]) = simplex.flow(i, j);
        }
    }
    if (ascending(source_locations) && ascending(target_locations)) {
        uncross(plan);
    }
    return {std::pow(std::max(simplex.objective(), 0.0), 1.0 / p), std::move(plan)};
}

ExactTransport solve_exact(const AgeAtDeathDistribution &a, const AgeAtDeathDistribution &b,
                           double p, std::size_t atom_cap) {
    return solve_exact(a.locations(), a.masses(), b.locations(), b.masses(), p, atom_cap);
}

TransportPlan northwest_corner_plan(std::span<const double> source_locations,
                                    std::span<const double> source_masses,
                                    std::span<const double> target_locations,
                                    std::span<const double> target_masses) {
    if (!ascending(source_locations) || !ascending(target_locations)) {
        throw DomainError("northwest corner plan needs locations sorted ascending");
    }
    if (source_locations.size() != source_masses.size() ||
        target_locations.size() != target_masses.size() || source_masses.empty() ||
        target_masses.empty()) {
        throw DomainError("northwest corner plan needs matching, non-empty atom lists");
    }
    std::vector<double> s(source_masses.begin(), source_masses.end());
    std::vector<double> d(target_masses.begin(), target_masses.end());
    TransportPlan plan(s.size(), d.size());
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < s.size() && j < d.size()) {
        const double amount = std::min(s[i], d[j]);
        plan(i, j) += amount;
        s[i] -= amount;
        d[j] -= amount;
        if (s[i] <= d[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    // Rounding residue lands on the last cell.
    if (i < s.size()) {
        for (; i < s.size(); ++i) {
            plan(i, d.size() - 1) += s[i];
        }
    }
    return plan;
}

TransportPlan northwest_corner_plan(const AgeAtDeathDistribution &a,
                                    const AgeAtDeathDistribution &b) {
    return northwest_corner_plan(a.locations(), a.masses(), b.locations(), b.masses());
}

} // namespace mortot
