#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "bulletcmp/compare.hpp"
#include "bulletcmp/signal.hpp"

namespace bulletcmp {

/// Dense symmetric K x K matrix.
struct DistanceMatrix {
    std::size_t k = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> flagged;  // distance derived from an unreliable score

    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n) : k(n), values(n * n, 0.0), flagged(n * n, 0) {}

    double& at(std::size_t i, std::size_t j) { return values[i * k + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * k + j]; }
};

/// d(i, j) = s_max - s(i, j) with s_max the largest reliable off-diagonal
/// score; unreliable pairs get the largest distance and are flagged.
DistanceMatrix score_to_distance(const ComparisonSet& set);

/// Upper-triangular score matrix variant, used by tests and the CLI when only
/// scores (no signals) are at hand. `reliable` may be empty (all reliable).
DistanceMatrix score_to_distance(std::size_t k, const std::vector<double>& scores,
                                 const std::vector<std::uint8_t>& reliable);

struct Merge {
    // Cluster ids: 0..K-1 are leaves, K + s is the cluster formed at step s.
    std::size_t a = 0, b = 0;
    double height = 0;
    std::size_t size = 0;

    friend bool operator==(const Merge&, const Merge&) = default;
};

struct Dendrogram {
    std::vector<std::string> leaf_ids;
    std::vector<Merge> merges;

    friend bool operator==(const Dendrogram&, const Dendrogram&) = default;
};

/// Agglomerative clustering with maximum inter-member distance. At every step
/// the closest pair merges; ties go to the pair whose (smaller, larger)
/// minimum-leaf keys are lexicographically smallest. In each Merge, `a` is the
/// child containing the smaller leaf index.
Dendrogram complete_linkage(const DistanceMatrix& d, std::vector<std::string> leaf_ids = {});

/// Leaf indices in dendrogram order; the child holding the smaller leaf index
/// goes first at every merge.
std::vector<std::size_t> leaf_order(const Dendrogram& dendrogram);

struct VariogramPoint {
    int distance = 0;
    double score = 0;
    std::string bullet1, bullet2;
    bool reliable = true;

    friend bool operator==(const VariogramPoint&, const VariogramPoint&) = default;
};

struct TrendCurve {
    std::vector<double> xs;
    std::vector<double> ys;

    friend bool operator==(const TrendCurve&, const TrendCurve&) = default;
};

struct Variogram {
    std::vector<VariogramPoint> points;
    TrendCurve trend;

    friend bool operator==(const Variogram&, const Variogram&) = default;
};

/// One point per unordered pair with distinct shot numbers; the trend is a
/// LOESS fit over the reliable points, evaluated at each distinct distance.
Variogram variogram(const ComparisonSet& set, const std::map<std::string, int>& shot_numbers,
                    const LoessParams& trend_params = {});

Variogram variogram(const std::vector<std::string>& ids, const std::vector<double>& upper_scores,
                    const std::vector<std::uint8_t>& reliable, const std::map<std::string, int>& shot_numbers,
                    const LoessParams& trend_params = {});

enum class OutlierCriterion { quantile, mad_band };

struct OutlierFlag {
    std::string bullet_id;
    double median_score = 0;
    OutlierCriterion criterion = OutlierCriterion::mad_band;  // the stricter, binding threshold

    friend bool operator==(const OutlierFlag&, const OutlierFlag&) = default;
};

struct OutlierReport {
    std::vector<double> medians;  // per bullet, in set order
    double centre = 0;            // median of medians
    double mad = 0;               // median absolute deviation of medians
    double quantile_threshold = 0;
    double band_threshold = 0;
    OutlierCriterion binding = OutlierCriterion::mad_band;
    std::vector<OutlierFlag> flags;  // ascending by median score

    friend bool operator==(const OutlierReport&, const OutlierReport&) = default;
};

/// Each bullet's median off-diagonal score is compared with a robust normal
/// reference (centre = median of medians, scale = 1.4826 * MAD): the
/// `quantile` point of that reference and the centre - 3 * MAD band. A bullet
/// is flagged when its median lies strictly below the lower (stricter) of the
/// two; the report records which one that was. Requires K >= 4.
OutlierReport flag_outliers(const ComparisonSet& set, double quantile = 0.05);

OutlierReport flag_outliers(const std::vector<std::string>& ids, const std::vector<double>& upper_scores,
                            const std::vector<std::uint8_t>& reliable, double quantile = 0.05);

const char* to_string(OutlierCriterion c);

struct AnalysisParams {
    LoessParams trend{0.75, 2, 2};
    double outlier_quantile = 0.05;
};

/// Everything derived from one score matrix.
struct Analysis {
    std::vector<std::string> ids;
    Dendrogram dendrogram;
    std::vector<std::string> leaf_order;
    Variogram variogram;
    OutlierReport outliers;
    std::vector<std::pair<std::string, std::string>> distance_flags;  // pairs clustered at max distance

    friend bool operator==(const Analysis&, const Analysis&) = default;
};

Analysis analyze_scores(const std::vector<std::string>& ids, const std::vector<double>& upper_scores,
                        const std::vector<std::uint8_t>& reliable, const std::map<std::string, int>& shot_numbers,
                        const AnalysisParams& params);

/// Upper-triangular score vector (diagonal included) in ComparisonSet order.
std::vector<double> upper_scores(const ComparisonSet& set);
std::vector<std::uint8_t> upper_reliability(const ComparisonSet& set);

}  // namespace bulletcmp
