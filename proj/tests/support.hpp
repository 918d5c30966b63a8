#pragma once

// Shared generators and independent reference computations for the tests.

#include "mortot/hmd.hpp"
#include "mortot/lifetable.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace testsupport {

inline constexpr int omega = 110;

/// Gompertz-Makeham hazard on ages 0..omega.
inline std::vector<double> gompertz_mx(double alpha, double beta, double makeham = 0.0) {
    std::vector<double> mx(omega + 1);
    for (int x = 0; x <= omega; ++x) {
        mx[static_cast<std::size_t>(x)] = makeham + alpha * std::exp(beta * x);
    }
    return mx;
}

struct GompertzParams {
    double alpha;
    double beta;
    double makeham;
};

inline GompertzParams random_params(std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> la(std::log(1e-5), std::log(5e-4));
    std::uniform_real_distribution<double> b(0.07, 0.12);
    std::uniform_real_distribution<double> m(0.0, 2e-3);
    return {std::exp(la(rng)), b(rng), m(rng)};
}

inline mortot::LifeTable random_gompertz_table(std::mt19937_64 &rng) {
    const auto p = random_params(rng);
    return mortot::build_from_mx(gompertz_mx(p.alpha, p.beta, p.makeham));
}

/// Random valid table with its own separation factor at every age.
inline mortot::LifeTable random_table(std::mt19937_64 &rng, double radix = mortot::default_radix) {
    const auto p = random_params(rng);
    const auto mx = gompertz_mx(p.alpha, p.beta, p.makeham);
    std::uniform_real_distribution<double> a(0.05, 0.95);
    std::vector<double> ax(mx.size() - 1);
    for (auto &v : ax) {
        v = a(rng);
    }
    return mortot::build_from_mx(mx, ax, radix);
}

/// Up to `max_atoms` atoms on [0, 100], strictly increasing, positive masses.
inline mortot::AgeAtDeathDistribution random_distribution(std::mt19937_64 &rng,
                                                         std::size_t max_atoms = 8) {
    std::uniform_int_distribution<std::size_t> count(1, max_atoms);
    std::uniform_real_distribution<double> loc(0.0, 100.0);
    std::uniform_real_distribution<double> w(0.01, 1.0);
    const auto n = count(rng);
    std::vector<double> xs;
    while (xs.size() < n) {
        const double x = loc(rng);
        if (std::find(xs.begin(), xs.end(), x) == xs.end()) {
            xs.push_back(x);
        }
    }
    std::sort(xs.begin(), xs.end());
    std::vector<double> ms(n);
    for (auto &m : ms) {
        m = w(rng);
    }
    const double total = std::accumulate(ms.begin(), ms.end(), 0.0);
    for (auto &m : ms) {
        m /= total;
    }
    // Put the rounding residue on the largest atom so the sum is 1 to the ulp.
    const double residue = 1.0 - std::accumulate(ms.begin(), ms.end(), 0.0);
    *std::max_element(ms.begin(), ms.end()) += residue;
    return {std::move(xs), std::move(ms)};
}

/// Reference columns from the textbook recurrences, written out separately
/// from the library.
struct ReferenceColumns {
    std::vector<double> qx, lx, dx, Lx, Tx, ex;
};

inline ReferenceColumns reference_from_mx(const std::vector<double> &mx,
                                          const std::vector<double> &ax, double radix) {
    const auto n = mx.size();
    ReferenceColumns r;
    r.qx.resize(n);
    r.lx.resize(n);
    r.dx.resize(n);
    r.Lx.resize(n);
    r.Tx.resize(n);
    r.ex.resize(n);
    double l = radix;
    for (std::size_t x = 0; x < n; ++x) {
        r.lx[x] = l;
        if (x + 1 == n) {
            r.qx[x] = 1.0;
            r.dx[x] = l;
            r.Lx[x] = l / mx[x];
        } else {
            const double q = std::min(1.0, mx[x] / (1.0 + (1.0 - ax[x]) * mx[x]));
            r.qx[x] = q;
            r.dx[x] = l * q;
            r.Lx[x] = (l - r.dx[x]) + ax[x] * r.dx[x];
            l -= r.dx[x];
        }
    }
    double t = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        t += r.Lx[k];
        r.Tx[k] = t;
        r.ex[k] = r.lx[k] > 0.0 ? t / r.lx[k] : std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

/// Exact optimum of a small transportation problem by enumerating every
/// basis (spanning set of m+n-1 cells) and keeping the cheapest feasible
/// vertex. Exponential; meant for m, n <= 4.
inline double brute_force_transport(const std::vector<double> &xa, const std::vector<double> &ma,
                                    const std::vector<double> &xb, const std::vector<double> &mb,
                                    double p) {
    const std::size_t m = xa.size();
    const std::size_t n = xb.size();
    const std::size_t cells = m * n;
    const std::size_t k = m + n - 1;
    double best = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> pick(k);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
        // Peel leaves: a row or column with one open basis cell fixes it.
        std::vector<double> supply(ma);
        std::vector<double> demand(mb);
        std::vector<bool> open(k, true);
        std::vector<double> flow(cells, 0.0);
        std::size_t remaining = k;
        bool progress = true;
        while (remaining > 0 && progress) {
            progress = false;
            for (std::size_t r = 0; r < m + n && !progress; ++r) {
                std::size_t count = 0;
                std::size_t which = 0;
                for (std::size_t t = 0; t < k; ++t) {
                    if (!open[t]) {
                        continue;
                    }
                    const auto i = pick[t] / n;
                    const auto j = pick[t] % n;
                    if ((r < m && i == r) || (r >= m && j == r - m)) {
                        ++count;
                        which = t;
                    }
                }
                if (count != 1) {
                    continue;
                }
                const auto i = pick[which] / n;
                const auto j = pick[which] % n;
                const double v = r < m ? supply[i] : demand[j];
                flow[pick[which]] = v;
                supply[i] -= v;
                demand[j] -= v;
                open[which] = false;
                --remaining;
                progress = true;
            }
        }
        bool feasible = remaining == 0;
        for (std::size_t c = 0; c < cells && feasible; ++c) {
            feasible = flow[c] >= -1e-12;
        }
        for (const double s : supply) {
            feasible = feasible && std::abs(s) < 1e-9;
        }
        for (const double d : demand) {
            feasible = feasible && std::abs(d) < 1e-9;
        }
        if (feasible) {
            double cost = 0.0;
            for (std::size_t c = 0; c < cells; ++c) {
                cost += std::max(flow[c], 0.0) * std::pow(std::abs(xa[c / n] - xb[c % n]), p);
            }
            best = std::min(best, cost);
        }

        // Next k-combination of the cells.
        std::size_t t = k;
        while (t > 0 && pick[t - 1] == cells - k + t - 1) {
            --t;
        }
        if (t == 0) {
            break;
        }
        ++pick[t - 1];
        for (std::size_t u = t; u < k; ++u) {
            pick[u] = pick[u - 1] + 1;
        }
    }
    return std::pow(best, 1.0 / p);
}

/// HMD-layout text for `tables` keyed by year, at published precision.
inline std::string hmd_text(const std::string &title, const std::vector<std::pair<int, mortot::LifeTable>> &tables) {
    mortot::hmd::File file;
    file.title = title;
    int line = 4;
    for (const auto &[year, t] : tables) {
        for (std::size_t x = 0; x < t.size(); ++x) {
            mortot::hmd::Row row;
            row.year = year;
            row.age = static_cast<int>(x);
            row.open_interval = x + 1 == t.size();
            row.mx = t.mx()[x];
            row.qx = t.qx()[x];
            row.ax = t.ax()[x];
            row.lx = std::round(t.lx()[x]);
            row.Lx = std::round(t.Lx()[x]);
            row.Tx = std::round(t.Tx()[x]);
            row.ex = std::isfinite(t.ex()[x]) ? t.ex()[x] : 0.0;
            row.line = line++;
            file.rows.push_back(row);
        }
    }
    // Published dx are differences of the rounded lx, as in HMD files.
    for (std::size_t i = 0; i < file.rows.size(); ++i) {
        auto &row = file.rows[i];
        const bool last = row.open_interval;
        row.dx = last ? *row.lx : *row.lx - *file.rows[i + 1].lx;
    }
    return mortot::hmd::serialize(file);
}

inline void write_file(const std::filesystem::path &path, const std::string &text) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << text;
}

/// A scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string &tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                fmt::format("mortot-{}-{}-{}", tag, ::getpid(), counter++);
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Period files for `codes` over `years`, each country a Gompertz table with
/// its own parameters drawn from `seed`.
inline void write_synthetic_corpus(const std::filesystem::path &dir,
                                   const std::vector<std::string> &codes,
                                   const std::vector<int> &years, std::uint64_t seed,
                                   const std::string &sex_letter = "b",
                                   const std::string &kind = "per") {
    std::mt19937_64 rng(seed);
    for (const auto &code : codes) {
        std::vector<std::pair<int, mortot::LifeTable>> tables;
        for (const int y : years) {
            tables.emplace_back(y, random_gompertz_table(rng));
        }
        const auto title = fmt::format("{}, Life tables ({}), Total\tLast modified: 01 Jan 2024;  Methods Protocol: v6 (2017)",
                                       code, kind == "coh" ? "cohort 1x1" : "period 1x1");
        write_file(dir / fmt::format("{}.{}lt{}_1x1.txt", code, sex_letter, kind),
                   hmd_text(title, tables));
    }
}

} // namespace testsupport
