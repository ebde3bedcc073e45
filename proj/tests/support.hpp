// Independent reference implementations and fixture builders for the tests.
// Nothing here calls into the library's numerical code.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bulletcmp/analyze.hpp"
#include "bulletcmp/compare.hpp"
#include "bulletcmp/signal.hpp"

namespace oracle {

using Rng = std::mt19937_64;

struct Series {
    std::vector<double> values;
    std::vector<std::uint8_t> mask;
};

inline Series random_series(Rng& rng, std::size_t n, double mask_rate) {
    std::normal_distribution<double> z(0, 1);
    std::uniform_real_distribution<double> u(0, 1);
    Series s;
    s.values.resize(n);
    s.mask.resize(n);
    double walk = 0;
    for (std::size_t i = 0; i < n; ++i) {
        walk = 0.6 * walk + z(rng);
        s.values[i] = walk;
        s.mask[i] = u(rng) < mask_rate ? 0 : 1;
        if (!s.mask[i]) s.values[i] = 0;
    }
    return s;
}

// ---- lagged correlation ---------------------------------------------------

struct Corr {
    bool ok = false;
    double value = 0;
    std::size_t overlap = 0;
};

// Pearson correlation of the pairs (x_s, y_{s+k}) that are both measured,
// written out the textbook way: means first, then centred sums.
inline Corr pearson_at(const Series& x, const Series& y, int k, std::size_t min_overlap) {
    std::vector<double> a, b;
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(x.values.size()); ++s) {
        const std::ptrdiff_t t = s + k;
        if (t < 0 || t >= static_cast<std::ptrdiff_t>(y.values.size())) continue;
        if (!x.mask[static_cast<std::size_t>(s)] || !y.mask[static_cast<std::size_t>(t)]) continue;
        a.push_back(x.values[static_cast<std::size_t>(s)]);
        b.push_back(y.values[static_cast<std::size_t>(t)]);
    }
    Corr c;
    c.overlap = a.size();
    if (a.empty() || a.size() < min_overlap) return c;
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0) || !(sbb > 0)) return c;
    c.ok = true;
    c.value = std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
    return c;
}

struct Best {
    bool valid = false;
    double value = 0;
    int lag = 0;
    std::size_t overlap = 0;
};

// Every lag in [-m, m]; the winner is the largest value, then the smallest
// |lag|, then the negative lag.
inline Best exhaustive_ccf(const Series& x, const Series& y, int m, std::size_t min_overlap) {
    Best best;
    for (int k = -m; k <= m; ++k) {
        const auto c = pearson_at(x, y, k, min_overlap);
        if (!c.ok) continue;
        bool take = !best.valid || c.value > best.value;
        if (best.valid && c.value == best.value)
            take = std::abs(k) < std::abs(best.lag) || (std::abs(k) == std::abs(best.lag) && k < best.lag);
        if (take) best = {true, c.value, k, c.overlap};
    }
    return best;
}

// ---- CCF_diff ---------------------------------------------------------------

using Matrix6 = std::array<std::array<double, 6>, 6>;

struct DiffResult {
    int phase = 0;
    double in = 0, out = 0, diff = 0;
};

// Direct evaluation of
//   CCF_diff = 1/n sum_{(i,j) in P} c_ij - 1/(n(n-1)) sum_{(i,j) not in P} c_ij
// at the cyclic phase P whose in-phase mean is largest (smallest phase on ties).
inline DiffResult ccf_diff_formula(const Matrix6& c) {
    const int n = 6;
    DiffResult best;
    double best_in = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < n; ++p) {
        double in = 0;
        for (int i = 0; i < n; ++i) in += c[i][(i + p) % n];
        in /= n;
        if (in > best_in) {
            best_in = in;
            best.phase = p;
        }
    }
    double in = 0, out = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (j == (i + best.phase) % n)
                in += c[i][j];
            else
                out += c[i][j];
        }
    best.in = in / n;
    best.out = out / (n * (n - 1));
    best.diff = best.in - best.out;
    return best;
}

inline bulletcmp::LandMatrix to_land_matrix(const Matrix6& c) {
    bulletcmp::LandMatrix m;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) m.at(i, j) = {c[i][j], 0, 100, true};
    return m;
}

// ---- LOESS ------------------------------------------------------------------

// Weighted least squares at one point, solved with Eigen's pivoted QR on the
// square-root-weighted design. Neighbours are picked by sorting distances.
inline double wls_point(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& rw,
                        std::size_t i, std::size_t q, int degree) {
    const std::size_t n = x.size();
    std::vector<double> d(n);
    for (std::size_t j = 0; j < n; ++j) d[j] = std::abs(x[j] - x[i]);
    std::vector<double> sorted = d;
    std::sort(sorted.begin(), sorted.end());
    double h = sorted[q - 1];

    auto distinct_positive = [&](double radius) {
        std::set<double> pos;
        for (std::size_t j = 0; j < n; ++j)
            if (d[j] < radius) pos.insert(x[j]);
        return pos.size();
    };
    const auto need = static_cast<std::size_t>(degree + 1);
    while (distinct_positive(h) < need) {
        auto it = std::upper_bound(sorted.begin(), sorted.end(), h);
        h = it == sorted.end() ? h * 1.001 : *it;
        if (it == sorted.end()) break;
    }

    const int p = degree + 1;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(n), p);
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    double total = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double u = (x[j] - x[i]) / h;
        double w = 0;
        if (std::abs(u) < 1) w = std::pow(1 - std::pow(std::abs(u), 3), 3) * rw[j];
        total += w;
        const double sw = std::sqrt(w);
        for (int c = 0; c < p; ++c) a(static_cast<Eigen::Index>(j), c) = sw * std::pow(u, c);
        b(static_cast<Eigen::Index>(j)) = sw * y[j];
    }
    if (!(total > 0)) return y[i];
    const Eigen::VectorXd beta = a.colPivHouseholderQr().solve(b);
    return beta(0);
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Cleveland's robust LOESS on measured points, unmasked input.
inline std::vector<double> loess(const std::vector<double>& x, const std::vector<double>& y,
                                 const bulletcmp::LoessParams& params) {
    const std::size_t n = x.size();
    const auto q = static_cast<std::size_t>(std::ceil(params.span * static_cast<double>(n) - 1e-9));
    std::vector<double> rw(n, 1.0), fit(n);
    double y_scale = 0;
    for (double v : y) y_scale = std::max(y_scale, std::abs(v));
    for (int iter = 0;; ++iter) {
        for (std::size_t i = 0; i < n; ++i) fit[i] = wls_point(x, y, rw, i, q, params.degree);
        if (iter == params.robust_iterations) break;
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = std::abs(y[i] - fit[i]);
        const double s = median(r);
        if (!(s > 1e-12 * y_scale)) break;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = r[i] / (6 * s);
            rw[i] = u < 1 ? (1 - u * u) * (1 - u * u) : 0;
        }
    }
    return fit;
}

// ---- complete linkage ------------------------------------------------------

struct NaiveMerge {
    std::size_t a, b;
    double height;
};

// O(K^3): every step rescans all cluster pairs and recomputes the maximum
// member distance from scratch.
inline std::vector<NaiveMerge> naive_complete_linkage(const bulletcmp::DistanceMatrix& d) {
    const std::size_t k = d.k;
    struct Cluster {
        std::size_t id;
        std::vector<std::size_t> members;
    };
    std::vector<Cluster> live;
    for (std::size_t i = 0; i < k; ++i) live.push_back({i, {i}});
    std::vector<NaiveMerge> out;
    for (std::size_t step = 0; step + 1 < k; ++step) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        std::pair<std::size_t, std::size_t> best_key;
        for (std::size_t i = 0; i < live.size(); ++i)
            for (std::size_t j = i + 1; j < live.size(); ++j) {
                double h = 0;
                for (auto p : live[i].members)
                    for (auto r : live[j].members) h = std::max(h, d.at(p, r));
                const auto ki = *std::min_element(live[i].members.begin(), live[i].members.end());
                const auto kj = *std::min_element(live[j].members.begin(), live[j].members.end());
                const std::pair<std::size_t, std::size_t> key{std::min(ki, kj), std::max(ki, kj)};
                if (h < best || (h == best && key < best_key)) {
                    best = h;
                    bi = i;
                    bj = j;
                    best_key = key;
                }
            }
        auto& ci = live[bi];
        auto& cj = live[bj];
        const auto ki = *std::min_element(ci.members.begin(), ci.members.end());
        const auto kj = *std::min_element(cj.members.begin(), cj.members.end());
        const std::size_t a = ki < kj ? ci.id : cj.id, b = ki < kj ? cj.id : ci.id;
        out.push_back({a, b, best});
        Cluster merged{k + step, ci.members};
        merged.members.insert(merged.members.end(), cj.members.begin(), cj.members.end());
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(bj));
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(bi));
        live.push_back(merged);
    }
    return out;
}

// Every dendrogram cluster must occupy a contiguous run of the leaf order.
inline bool clusters_contiguous(const bulletcmp::Dendrogram& dend, const std::vector<std::size_t>& order) {
    const std::size_t k = order.size();
    std::vector<std::size_t> pos(k);
    for (std::size_t i = 0; i < k; ++i) pos[order[i]] = i;
    std::vector<std::vector<std::size_t>> members(k + dend.merges.size());
    for (std::size_t i = 0; i < k; ++i) members[i] = {i};
    for (std::size_t s = 0; s < dend.merges.size(); ++s) {
        auto& m = members[k + s];
        m = members[dend.merges[s].a];
        m.insert(m.end(), members[dend.merges[s].b].begin(), members[dend.merges[s].b].end());
        std::size_t lo = k, hi = 0;
        for (auto leaf : m) {
            lo = std::min(lo, pos[leaf]);
            hi = std::max(hi, pos[leaf]);
        }
        if (hi - lo + 1 != m.size()) return false;
    }
    return true;
}

}  // namespace oracle
