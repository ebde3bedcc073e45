#include "bulletcmp/analyze.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace bulletcmp {

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const auto mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

void check_upper(std::size_t k, const std::vector<double>& scores, const std::vector<std::uint8_t>& reliable) {
    if (scores.size() != k * (k + 1) / 2) throw std::invalid_argument("score vector does not match bullet count");
    if (!reliable.empty() && reliable.size() != scores.size())
        throw std::invalid_argument("reliability vector does not match score vector");
}

bool is_reliable(const std::vector<double>& scores, const std::vector<std::uint8_t>& reliable, std::size_t idx) {
    return std::isfinite(scores[idx]) && (reliable.empty() || reliable[idx]);
}

}  // namespace

std::vector<double> upper_scores(const ComparisonSet& set) {
    std::vector<double> out;
    out.reserve(set.pairs().size());
    for (const auto& p : set.pairs()) out.push_back(p.score.ccf_diff);
    return out;
}

std::vector<std::uint8_t> upper_reliability(const ComparisonSet& set) {
    std::vector<std::uint8_t> out;
    out.reserve(set.pairs().size());
    for (const auto& p : set.pairs()) out.push_back(!p.score.unreliable && std::isfinite(p.score.ccf_diff));
    return out;
}

// ---- distances ---------------------------------------------------------

DistanceMatrix score_to_distance(std::size_t k, const std::vector<double>& scores,
                                 const std::vector<std::uint8_t>& reliable) {
    check_upper(k, scores, reliable);
    DistanceMatrix d(k);
    double s_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const auto idx = ComparisonSet::pair_index(i, j, k);
            if (is_reliable(scores, reliable, idx)) s_max = std::max(s_max, scores[idx]);
        }

    double d_max = 0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const auto idx = ComparisonSet::pair_index(i, j, k);
            if (is_reliable(scores, reliable, idx)) {
                const double v = s_max - scores[idx];
                d.at(i, j) = d.at(j, i) = v;
                d_max = std::max(d_max, v);
            }
        }
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const auto idx = ComparisonSet::pair_index(i, j, k);
            if (!is_reliable(scores, reliable, idx)) {
                d.at(i, j) = d.at(j, i) = d_max;
                d.flagged[i * k + j] = d.flagged[j * k + i] = 1;
            }
        }
    return d;
}

DistanceMatrix score_to_distance(const ComparisonSet& set) {
    if (set.size() == 0) throw std::invalid_argument("score_to_distance: empty comparison set");
    return score_to_distance(set.size(), upper_scores(set), upper_reliability(set));
}

// ---- clustering --------------------------------------------------------

Dendrogram complete_linkage(const DistanceMatrix& d, std::vector<std::string> leaf_ids) {
    const std::size_t k = d.k;
    if (leaf_ids.empty())
        for (std::size_t i = 0; i < k; ++i) leaf_ids.push_back(std::to_string(i));
    if (leaf_ids.size() != k) throw std::invalid_argument("complete_linkage: leaf id count does not match matrix");

    Dendrogram out;
    out.leaf_ids = std::move(leaf_ids);
    if (k < 2) return out;

    // Slot s holds an active cluster: its id, its smallest leaf index, its size.
    std::vector<double> dist = d.values;
    std::vector<std::size_t> id(k), key(k), size(k, 1);
    std::vector<std::uint8_t> active(k, 1);
    std::iota(id.begin(), id.end(), std::size_t{0});
    std::iota(key.begin(), key.end(), std::size_t{0});

    for (std::size_t step = 0; step + 1 < k; ++step) {
        std::size_t bp = 0, bq = 0;
        double best = std::numeric_limits<double>::infinity();
        bool found = false;
        for (std::size_t p = 0; p < k; ++p) {
            if (!active[p]) continue;
            for (std::size_t q = p + 1; q < k; ++q) {
                if (!active[q]) continue;
                const double v = dist[p * k + q];
                const auto lo = std::min(key[p], key[q]), hi = std::max(key[p], key[q]);
                const auto blo = std::min(key[bp], key[bq]), bhi = std::max(key[bp], key[bq]);
                if (!found || v < best || (v == best && std::pair(lo, hi) < std::pair(blo, bhi))) {
                    best = v;
                    bp = p;
                    bq = q;
                    found = true;
                }
            }
        }
        if (key[bq] < key[bp]) std::swap(bp, bq);
        out.merges.push_back({id[bp], id[bq], best, size[bp] + size[bq]});

        for (std::size_t r = 0; r < k; ++r) {
            if (!active[r] || r == bp || r == bq) continue;
            const double v = std::max(dist[bp * k + r], dist[bq * k + r]);
            dist[bp * k + r] = dist[r * k + bp] = v;
        }
        active[bq] = 0;
        id[bp] = k + step;
        size[bp] += size[bq];
        key[bp] = std::min(key[bp], key[bq]);
    }
    return out;
}

std::vector<std::size_t> leaf_order(const Dendrogram& dendrogram) {
    const std::size_t k = dendrogram.leaf_ids.size();
    std::vector<std::size_t> order;
    if (k == 0) return order;
    if (dendrogram.merges.size() + 1 != k) throw std::invalid_argument("leaf_order: dendrogram needs K - 1 merges");
    std::vector<std::size_t> stack{k + dendrogram.merges.size() - 1};
    if (k == 1) stack = {0};
    while (!stack.empty()) {
        const auto c = stack.back();
        stack.pop_back();
        if (c < k) {
            order.push_back(c);
            continue;
        }
        const auto& m = dendrogram.merges[c - k];
        stack.push_back(m.b);  // visited second
        stack.push_back(m.a);
    }
    return order;
}

// ---- variogram ---------------------------------------------------------

Variogram variogram(const std::vector<std::string>& ids, const std::vector<double>& upper,
                    const std::vector<std::uint8_t>& reliable, const std::map<std::string, int>& shot_numbers,
                    const LoessParams& trend_params) {
    const std::size_t k = ids.size();
    check_upper(k, upper, reliable);
    std::vector<int> shots(k);
    for (std::size_t i = 0; i < k; ++i) {
        auto it = shot_numbers.find(ids[i]);
        if (it == shot_numbers.end()) throw std::invalid_argument("variogram: no shot number for bullet '" + ids[i] + "'");
        shots[i] = it->second;
    }

    Variogram out;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const int dist = std::abs(shots[i] - shots[j]);
            if (dist == 0) continue;
            const auto idx = ComparisonSet::pair_index(i, j, k);
            out.points.push_back({dist, upper[idx], ids[i], ids[j], is_reliable(upper, reliable, idx)});
        }

    std::vector<std::size_t> fit_order;
    for (std::size_t p = 0; p < out.points.size(); ++p)
        if (out.points[p].reliable) fit_order.push_back(p);
    std::stable_sort(fit_order.begin(), fit_order.end(),
                     [&](auto a, auto b) { return out.points[a].distance < out.points[b].distance; });
    std::vector<double> xs, ys;
    for (auto p : fit_order) {
        xs.push_back(out.points[p].distance);
        ys.push_back(out.points[p].score);
    }
    try {
        const auto fit = loess_smooth(xs, ys, trend_params);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!out.trend.xs.empty() && out.trend.xs.back() == xs[i]) continue;
            out.trend.xs.push_back(xs[i]);
            out.trend.ys.push_back(fit[i]);
        }
    } catch (const InsufficientData&) {
        // Too few distinct distances for a trend; points are still reported.
    }
    return out;
}

Variogram variogram(const ComparisonSet& set, const std::map<std::string, int>& shot_numbers,
                    const LoessParams& trend_params) {
    std::vector<std::string> ids;
    for (const auto& b : set.bullets()) ids.push_back(b.id);
    return variogram(ids, upper_scores(set), upper_reliability(set), shot_numbers, trend_params);
}

// ---- outliers ----------------------------------------------------------

const char* to_string(OutlierCriterion c) { return c == OutlierCriterion::quantile ? "quantile" : "mad_band"; }

OutlierReport flag_outliers(const std::vector<std::string>& ids, const std::vector<double>& upper,
                            const std::vector<std::uint8_t>& reliable, double quantile) {
    const std::size_t k = ids.size();
    check_upper(k, upper, reliable);
    if (k < 4) throw std::invalid_argument("flag_outliers needs at least 4 bullets");
    if (!(quantile > 0 && quantile < 1)) throw std::invalid_argument("flag_outliers quantile must lie in (0, 1)");

    OutlierReport r;
    r.medians.resize(k);
    std::vector<double> finite;
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const auto idx = ComparisonSet::pair_index(i, j, k);
            if (is_reliable(upper, reliable, idx)) row.push_back(upper[idx]);
        }
        r.medians[i] = median(std::move(row));
        if (std::isfinite(r.medians[i])) finite.push_back(r.medians[i]);
    }
    if (finite.empty()) return r;

    r.centre = median(finite);
    std::vector<double> dev;
    for (double m : finite) dev.push_back(std::abs(m - r.centre));
    r.mad = median(std::move(dev));

    const double z = boost::math::quantile(boost::math::normal(), quantile);
    r.quantile_threshold = r.centre + z * 1.4826 * r.mad;
    r.band_threshold = r.centre - 3.0 * r.mad;
    r.binding = r.quantile_threshold < r.band_threshold ? OutlierCriterion::quantile : OutlierCriterion::mad_band;
    const double threshold = std::min(r.quantile_threshold, r.band_threshold);

    for (std::size_t i = 0; i < k; ++i)
        if (std::isfinite(r.medians[i]) && r.medians[i] < threshold)
            r.flags.push_back({ids[i], r.medians[i], r.binding});
    std::sort(r.flags.begin(), r.flags.end(), [](const OutlierFlag& a, const OutlierFlag& b) {
        return a.median_score != b.median_score ? a.median_score < b.median_score : a.bullet_id < b.bullet_id;
    });
    return r;
}

OutlierReport flag_outliers(const ComparisonSet& set, double quantile) {
    std::vector<std::string> ids;
    for (const auto& b : set.bullets()) ids.push_back(b.id);
    return flag_outliers(ids, upper_scores(set), upper_reliability(set), quantile);
}

}  // namespace bulletcmp

namespace bulletcmp {

Analysis analyze_scores(const std::vector<std::string>& ids, const std::vector<double>& upper,
                        const std::vector<std::uint8_t>& reliable, const std::map<std::string, int>& shot_numbers,
                        const AnalysisParams& params) {
    Analysis a;
    a.ids = ids;
    const auto d = score_to_distance(ids.size(), upper, reliable);
    for (std::size_t i = 0; i < d.k; ++i)
        for (std::size_t j = i + 1; j < d.k; ++j)
            if (d.flagged[i * d.k + j]) a.distance_flags.emplace_back(ids[i], ids[j]);
    a.dendrogram = complete_linkage(d, ids);
    for (auto leaf : leaf_order(a.dendrogram)) a.leaf_order.push_back(ids[leaf]);
    a.variogram = variogram(ids, upper, reliable, shot_numbers, params.trend);
    if (ids.size() >= 4) a.outliers = flag_outliers(ids, upper, reliable, params.outlier_quantile);
    return a;
}

}  // namespace bulletcmp
