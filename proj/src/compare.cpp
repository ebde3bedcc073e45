#include "bulletcmp/compare.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bulletcmp {

namespace {

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

int worker_count(int requested) {
#ifdef _OPENMP
    return requested > 0 ? requested : omp_get_max_threads();
#else
    (void)requested;
    return 1;
#endif
}

bool same_signals(const LandSignals& a, const LandSignals& b) {
    for (int l = 0; l < kLands; ++l) {
        const auto& x = a[static_cast<std::size_t>(l)];
        const auto& y = b[static_cast<std::size_t>(l)];
        if (static_cast<bool>(x) != static_cast<bool>(y)) return false;
        if (x && x != y && !(*x == *y)) return false;
    }
    return true;
}

// Running mean; a run of equal values averages to exactly that value.
struct Mean {
    double value = 0;
    int n = 0;
    void add(double x) { value += (x - value) / ++n; }
};

}  // namespace

bool operator==(const LandPairResult& a, const LandPairResult& b) {
    return same_bits(a.ccf, b.ccf) && a.lag == b.lag && a.overlap == b.overlap && a.valid == b.valid;
}

bool operator==(const BulletScore& a, const BulletScore& b) {
    return a.phase == b.phase && same_bits(a.in_phase_avg, b.in_phase_avg) &&
           same_bits(a.out_phase_avg, b.out_phase_avg) && same_bits(a.ccf_diff, b.ccf_diff) &&
           a.n_in_phase == b.n_in_phase && a.n_out_phase == b.n_out_phase && a.unreliable == b.unreliable &&
           a.exclusion_adjusted == b.exclusion_adjusted;
}

LandMatrix land_matrix(const BulletSignals& b1, const BulletSignals& b2, const LagSearchParams& params) {
    LandMatrix m;
    m.bullet1_id = b1.id;
    m.bullet2_id = b2.id;
    for (int i = 0; i < kLands; ++i) {
        const auto& x = b1.lands[static_cast<std::size_t>(i)];
        for (int j = 0; j < kLands; ++j) {
            const auto& y = b2.lands[static_cast<std::size_t>(j)];
            if (x && y) m.at(i, j) = ccf_max(*x, *y, params);
        }
    }
    return m;
}

int best_phase(const LandMatrix& m) {
    int best = -1;
    double best_mean = 0;
    for (int phase = 0; phase < kLands; ++phase) {
        double sum = 0;
        int n = 0;
        for (int i = 0; i < kLands; ++i) {
            const auto& e = m.at(i, phase_partner(i, phase));
            if (e.valid) {
                sum += e.ccf;
                ++n;
            }
        }
        if (n == 0) continue;
        const double mean = sum / n;
        if (best < 0 || mean > best_mean) {
            best = phase;
            best_mean = mean;
        }
    }
    if (best < 0) throw InsufficientData("best_phase: no phase has a valid in-phase entry");
    return best;
}

BulletScore ccf_diff(const LandMatrix& m, int min_in_phase) {
    BulletScore s;
    int phase = 0;
    try {
        phase = best_phase(m);
    } catch (const InsufficientData&) {
        s.exclusion_adjusted = true;
        return s;
    }
    s.phase = phase;
    Mean in, out;
    for (int i = 0; i < kLands; ++i) {
        for (int j = 0; j < kLands; ++j) {
            const auto& e = m.at(i, j);
            if (!e.valid) continue;
            (j == phase_partner(i, phase) ? in : out).add(e.ccf);
        }
    }
    s.n_in_phase = in.n;
    s.n_out_phase = out.n;
    s.in_phase_avg = in.value;
    if (out.n > 0) {
        s.out_phase_avg = out.value;
        s.ccf_diff = s.in_phase_avg - s.out_phase_avg;
    }
    s.exclusion_adjusted = s.n_in_phase < kLands || s.n_out_phase < kLands * (kLands - 1);
    s.unreliable = s.n_in_phase < min_in_phase || s.n_out_phase == 0;
    return s;
}

PairComparison compare_bullets(const BulletSignals& b1, const BulletSignals& b2, const CompareParams& params) {
    PairComparison pc;
    pc.matrix = land_matrix(b1, b2, params.lag);
    pc.score = ccf_diff(pc.matrix, params.min_in_phase);
    return pc;
}

// ---- comparison sets ---------------------------------------------------

ComparisonSet::ComparisonSet(std::vector<BulletSignals> bullets, std::vector<PairComparison> pairs)
    : bullets_(std::move(bullets)), pairs_(std::move(pairs)) {
    const auto k = bullets_.size();
    if (pairs_.size() != k * (k + 1) / 2)
        throw std::invalid_argument("comparison set needs " + std::to_string(k * (k + 1) / 2) + " pairs for " +
                                    std::to_string(k) + " bullets");
}

std::size_t ComparisonSet::pair_index(std::size_t i, std::size_t j, std::size_t k) {
    if (i > j) std::swap(i, j);
    // rows 0..i-1 hold k, k-1, ... entries
    return i * k - (i * (i + 1)) / 2 + j;
}

std::optional<std::size_t> ComparisonSet::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < bullets_.size(); ++i)
        if (bullets_[i].id == id) return i;
    return std::nullopt;
}

bool operator==(const ComparisonSet& a, const ComparisonSet& b) {
    if (a.bullets_.size() != b.bullets_.size() || a.pairs_ != b.pairs_) return false;
    for (std::size_t i = 0; i < a.bullets_.size(); ++i) {
        const auto& x = a.bullets_[i];
        const auto& y = b.bullets_[i];
        if (x.id != y.id || x.barrel_id != y.barrel_id || x.shot_number != y.shot_number) return false;
        if (!same_signals(x.lands, y.lands)) return false;
    }
    return true;
}

namespace {

void run_pairs(const std::vector<BulletSignals>& bullets, const std::vector<std::pair<std::size_t, std::size_t>>& todo,
               std::vector<PairComparison>& out, const CompareParams& params, int threads) {
    const auto n = static_cast<std::ptrdiff_t>(todo.size());
    const std::size_t k = bullets.size();
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) num_threads(worker_count(threads))
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        const auto [i, j] = todo[static_cast<std::size_t>(t)];
        try {
            out[ComparisonSet::pair_index(i, j, k)] = compare_bullets(bullets[i], bullets[j], params);
        } catch (...) {
#pragma omp critical
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace

ComparisonSet compare_set(std::vector<BulletSignals> bullets, const CompareParams& params, int threads) {
    const std::size_t k = bullets.size();
    std::vector<std::pair<std::size_t, std::size_t>> todo;
    todo.reserve(k * (k + 1) / 2);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) todo.emplace_back(i, j);
    std::vector<PairComparison> pairs(todo.size());
    run_pairs(bullets, todo, pairs, params, threads);
    return ComparisonSet(std::move(bullets), std::move(pairs));
}

std::vector<BulletScore> cross_set_compare(const BulletSignals& probe, const std::vector<BulletSignals>& references,
                                           const CompareParams& params) {
    std::vector<BulletScore> out(references.size());
    const auto n = static_cast<std::ptrdiff_t>(references.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t r = 0; r < n; ++r)
        out[static_cast<std::size_t>(r)] = compare_bullets(probe, references[static_cast<std::size_t>(r)], params).score;
    return out;
}

Substitution substitute_bullets(const ComparisonSet& set, const std::map<std::string, LandSignals>& replacements,
                                const CompareParams& params) {
    std::vector<BulletSignals> bullets = set.bullets();
    std::vector<std::uint8_t> touched(bullets.size(), 0);
    for (const auto& [id, lands] : replacements) {
        const auto idx = set.index_of(id);
        if (!idx) throw std::invalid_argument("substitute_bullets: unknown bullet id '" + id + "'");
        bullets[*idx].lands = lands;
        touched[*idx] = 1;
    }

    Substitution out;
    std::vector<PairComparison> pairs = set.pairs();
    for (std::size_t i = 0; i < bullets.size(); ++i)
        for (std::size_t j = i; j < bullets.size(); ++j)
            if (touched[i] || touched[j]) out.recomputed.emplace_back(i, j);
    run_pairs(bullets, out.recomputed, pairs, params, 0);
    out.set = ComparisonSet(std::move(bullets), std::move(pairs));
    return out;
}

}  // namespace bulletcmp
