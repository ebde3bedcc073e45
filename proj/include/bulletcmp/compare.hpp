#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bulletcmp/signal.hpp"

namespace bulletcmp {

inline constexpr int kLands = 6;

/// Non-owning view of a masked sequence.
struct SeriesView {
    std::span<const double> values;
    std::span<const std::uint8_t> mask;

    SeriesView(std::span<const double> v, std::span<const std::uint8_t> m) : values(v), mask(m) {}
    SeriesView(const Signal& s) : values(s.values), mask(s.mask) {}  // NOLINT(google-explicit-constructor)

    std::size_t size() const { return values.size(); }
};

struct LagSearchParams {
    int max_lag = 500;
    // Explicit minimum overlap; when unset, N_Y - M (never below the floor).
    std::optional<std::size_t> min_overlap;
    std::size_t min_overlap_floor = 3;

    /// Lag bound actually searched: M, clamped to N_Y - 1.
    int effective_max_lag(std::size_t ny) const;
    std::size_t min_overlap_for(std::size_t ny) const;
};

enum class CorrStatus { ok, insufficient_overlap, undefined };

struct LagCorrelation {
    double value = std::numeric_limits<double>::quiet_NaN();
    std::size_t overlap = 0;
    CorrStatus status = CorrStatus::undefined;

    bool ok() const { return status == CorrStatus::ok; }
};

/// Pearson correlation of x_s against y_{s+k} over the indices where both are
/// in range and measured. Positive k pairs x with later samples of y.
LagCorrelation corr_at_lag(SeriesView x, SeriesView y, int k, std::size_t min_overlap);

struct LandPairResult {
    double ccf = std::numeric_limits<double>::quiet_NaN();
    int lag = 0;
    std::size_t overlap = 0;
    bool valid = false;

    /// Bitwise on the floating fields, so unset (NaN) values compare equal.
    friend bool operator==(const LandPairResult&, const LandPairResult&);
};

/// Maximal lagged correlation over k in [-M, M]. Ties go to the smallest |k|,
/// then to the negative lag.
LandPairResult ccf_max(SeriesView x, SeriesView y, const LagSearchParams& params);

/// Exhaustive reference: evaluates every lag with corr_at_lag. Same result as
/// ccf_max, bit for bit, at a multiple of the cost.
LandPairResult ccf_max_serial(SeriesView x, SeriesView y, const LagSearchParams& params);

struct AlignedPair {
    std::vector<std::ptrdiff_t> index;  // position s in x; y is taken at s + lag
    std::vector<double> x, y;
    std::vector<std::uint8_t> x_mask, y_mask;

    std::size_t size() const { return index.size(); }
};

/// Pairs x_s with y_{s+lag} over the in-range overlap.
AlignedPair align(SeriesView x, SeriesView y, int lag);

// ---- bullets ------------------------------------------------------------

struct BulletSignals {
    std::string id;
    std::string barrel_id;
    int shot_number = 0;
    std::array<std::shared_ptr<const Signal>, kLands> lands;  // null = excluded
};

struct LandMatrix {
    std::string bullet1_id, bullet2_id;
    std::array<LandPairResult, kLands * kLands> entries;

    // 0-based land indices
    LandPairResult& at(int i, int j) { return entries[static_cast<std::size_t>(i * kLands + j)]; }
    const LandPairResult& at(int i, int j) const { return entries[static_cast<std::size_t>(i * kLands + j)]; }

    friend bool operator==(const LandMatrix&, const LandMatrix&) = default;
};

/// In-phase partner of land i (0-based) under a cyclic phase offset.
constexpr int phase_partner(int i, int phase) { return (i + phase) % kLands; }

struct BulletScore {
    int phase = 0;
    double in_phase_avg = std::numeric_limits<double>::quiet_NaN();
    double out_phase_avg = std::numeric_limits<double>::quiet_NaN();
    double ccf_diff = std::numeric_limits<double>::quiet_NaN();
    int n_in_phase = 0;
    int n_out_phase = 0;
    bool unreliable = true;
    // Averages were taken over fewer than 6 / 30 entries because of invalid lands.
    bool exclusion_adjusted = false;

    /// Bitwise on the floating fields, so unset (NaN) values compare equal.
    friend bool operator==(const BulletScore&, const BulletScore&);
};

struct CompareParams {
    LagSearchParams lag;
    int min_in_phase = 3;
};

LandMatrix land_matrix(const BulletSignals& b1, const BulletSignals& b2, const LagSearchParams& params);

/// Cyclic offset (0..5) maximizing the mean of valid in-phase entries; the
/// smallest offset wins ties. Throws InsufficientData if no phase has a valid entry.
int best_phase(const LandMatrix& m);

/// In-phase mean minus out-of-phase mean at the best phase, over valid entries.
BulletScore ccf_diff(const LandMatrix& m, int min_in_phase = 3);

struct PairComparison {
    LandMatrix matrix;
    BulletScore score;

    friend bool operator==(const PairComparison&, const PairComparison&) = default;
};

PairComparison compare_bullets(const BulletSignals& b1, const BulletSignals& b2, const CompareParams& params);

/// All unordered pairs of a bullet set, self-comparisons included. Stored
/// upper-triangular: the (i, j) entry with i <= j is authoritative and (j, i)
/// mirrors it.
class ComparisonSet {
public:
    ComparisonSet() = default;
    ComparisonSet(std::vector<BulletSignals> bullets, std::vector<PairComparison> pairs);

    std::size_t size() const { return bullets_.size(); }
    const std::vector<BulletSignals>& bullets() const { return bullets_; }
    const std::vector<PairComparison>& pairs() const { return pairs_; }

    std::optional<std::size_t> index_of(const std::string& id) const;

    static std::size_t pair_index(std::size_t i, std::size_t j, std::size_t k);
    std::size_t pair_index(std::size_t i, std::size_t j) const { return pair_index(i, j, size()); }

    const PairComparison& pair(std::size_t i, std::size_t j) const { return pairs_[pair_index(i, j)]; }
    const BulletScore& score(std::size_t i, std::size_t j) const { return pair(i, j).score; }

    friend bool operator==(const ComparisonSet&, const ComparisonSet&);

private:
    std::vector<BulletSignals> bullets_;
    std::vector<PairComparison> pairs_;
};

/// Runs every pair, fanned out across `threads` OpenMP workers (0 = runtime
/// default). Results are slotted by pair index, so the output does not
/// depend on the worker count.
ComparisonSet compare_set(std::vector<BulletSignals> bullets, const CompareParams& params, int threads = 0);

std::vector<BulletScore> cross_set_compare(const BulletSignals& probe, const std::vector<BulletSignals>& references,
                                           const CompareParams& params);

struct Substitution {
    ComparisonSet set;
    std::vector<std::pair<std::size_t, std::size_t>> recomputed;  // (i, j), i <= j
};

using LandSignals = std::array<std::shared_ptr<const Signal>, kLands>;

/// Swaps in new land signals for the named bullets and recomputes only the
/// pairs that touch them; every other pair is copied unchanged.
Substitution substitute_bullets(const ComparisonSet& set, const std::map<std::string, LandSignals>& replacements,
                                const CompareParams& params);

}  // namespace bulletcmp
