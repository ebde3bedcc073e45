// Acceptance suite: one PASS/FAIL line per criterion. Exit status is
// the number of failures.
#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bulletcmp/analyze.hpp"
#include "bulletcmp/bundle.hpp"
#include "bulletcmp/compare.hpp"
#include "bulletcmp/signal.hpp"
#include "bulletcmp/synth.hpp"
#include "bundle_fixture.hpp"
#include "fixtures.hpp"
#include "support.hpp"

using namespace bulletcmp;

namespace {

// ---- pinned tolerances and budgets ----------------------------------------
constexpr double kShiftTol = 1e-9;
constexpr double kLoessOracleTol = 1e-8;
constexpr double kPolyTol = 1e-9;
constexpr double kDiffDriftTol = 1e-12;
constexpr double kPhaseHitRate = 0.95;
constexpr double kGrooveHitRate = 0.95;
constexpr double kGrooveWithin = 10;  // samples
constexpr double kCcfSeconds = 5, kShiftSeconds = 5, kEndToEndSeconds = 60;
constexpr double kBundleLimitBytes = 200.0 * 1024 * 1024;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---- shared synthetic two-barrel set -----------------------------------------

struct TwoBarrel {
    SynthSet synth;
    ComparisonSet set;
    double seconds = 0;
};

const TwoBarrel& two_barrel() {
    static const TwoBarrel tb = [] {
        TwoBarrel t;
        const auto t0 = Clock::now();
        SynthParams p;  // 2 barrels x 8 bullets, length 2000, noise 0.05
        p.seed = 2024;
        t.synth = generate_synth(p);
        CompareParams cp;
        cp.lag.max_lag = 500;
        t.set = compare_set(fixture::to_signals(t.synth), cp);
        t.seconds = seconds_since(t0);
        return t;
    }();
    return tb;
}

// ---- criteria -------------------------------------------------------------------

Outcome ccf_oracle() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> len(10, 200);
    std::uniform_int_distribution<int> lag(0, 50);
    std::uniform_real_distribution<double> rate(0, 0.1);
    int checked = 0;
    for (int t = 0; t < 200; ++t) {
        const auto x = oracle::random_series(rng, len(rng), rate(rng));
        const auto y = oracle::random_series(rng, len(rng), rate(rng));
        LagSearchParams params;
        params.max_lag = lag(rng);
        const auto ny = y.values.size();
        const int m = std::min(params.max_lag, static_cast<int>(ny) - 1);
        // odd pairs use an explicit overlap so unequal lengths still score
        if (t % 2) params.min_overlap = 10;
        const auto need = params.min_overlap ? *params.min_overlap : std::max<std::size_t>(3, ny - static_cast<std::size_t>(m));
        const auto ref = oracle::exhaustive_ccf(x, y, m, need);
        const auto got = ccf_max({x.values, x.mask}, {y.values, y.mask}, params);
        o.require(got.valid == ref.valid, "validity differs on pair " + std::to_string(t));
        if (!ref.valid) continue;
        ++checked;
        o.require(same_bits(got.ccf, ref.value) && got.lag == ref.lag,
                  "pair " + std::to_string(t) + " differs from exhaustive search");
    }
    const double secs = seconds_since(t0);
    o.require(secs < kCcfSeconds, "took " + fmt("%.2f s", secs));
    if (o.pass) o.detail = std::to_string(checked) + " valid pairs bitwise equal, " + fmt("%.2f s", secs);
    return o;
}

Outcome shift_recovery() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(102);
    const std::size_t n = 2000;
    const int m = 500;
    const auto base = fixture::red_noise(rng, n + 2 * m);
    double worst = 0;
    std::vector<int> shifts{-500, -499, -250, -1, 0, 1, 7, 250, 499, 500};
    std::uniform_int_distribution<int> pick(-m, m);
    for (int i = 0; i < 30; ++i) shifts.push_back(pick(rng));
    for (int d : shifts) {
        // y_s = x_{s - d}: y is x delayed by d, found at lag +d
        std::vector<double> x(base.begin() + m, base.begin() + m + n);
        std::vector<double> y(base.begin() + m - d, base.begin() + m - d + n);
        LagSearchParams params;
        params.max_lag = m;
        const auto r = ccf_max(*fixture::make_signal(x), *fixture::make_signal(y), params);
        o.require(r.valid && r.lag == d, "shift " + std::to_string(d) + " found at lag " + std::to_string(r.lag));
        worst = std::max(worst, std::abs(r.ccf - 1.0));
    }
    o.require(worst <= kShiftTol, "ccf off by " + fmt("%.3g", worst));
    const double secs = seconds_since(t0);
    o.require(secs < kShiftSeconds, "took " + fmt("%.2f s", secs));
    if (o.pass) o.detail = std::to_string(shifts.size()) + " shifts, max |ccf-1| " + fmt("%.2g", worst) + ", " + fmt("%.2f s", secs);
    return o;
}

Outcome loess_oracle() {
    Outcome o;
    std::mt19937_64 rng(103);
    std::normal_distribution<double> z(0, 1);
    std::uniform_real_distribution<double> u(0, 10);
    auto xs_of = [&](std::size_t n) {
        std::vector<double> xs(n);
        for (auto& x : xs) x = u(rng);
        std::sort(xs.begin(), xs.end());
        return xs;
    };
    double worst = 0, worst_poly = 0;
    for (int t = 0; t < 50; ++t) {
        const auto xs = xs_of(30 + static_cast<std::size_t>(t));
        std::vector<double> ys(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = std::cos(xs[i]) + 0.2 * z(rng);
        const LoessParams params{0.3 + 0.01 * t, 1 + t % 2, t % 3};
        const auto fit = loess_smooth(xs, ys, params);
        const auto ref = oracle::loess(xs, ys, params);
        for (std::size_t i = 0; i < xs.size(); ++i) worst = std::max(worst, std::abs(fit[i] - ref[i]));
    }
    for (int t = 0; t < 20; ++t) {
        const auto xs = xs_of(40);
        for (int degree : {1, 2})
            for (int fit_degree = degree; fit_degree <= 2; ++fit_degree) {
                std::vector<double> ys(xs.size());
                for (std::size_t i = 0; i < xs.size(); ++i)
                    ys[i] = 2.0 - 0.4 * xs[i] + (degree == 2 ? 0.15 * xs[i] * xs[i] : 0.0);
                const auto fit = loess_smooth(xs, ys, LoessParams{0.5, fit_degree, 2});
                for (std::size_t i = 0; i < xs.size(); ++i) worst_poly = std::max(worst_poly, std::abs(fit[i] - ys[i]));
            }
    }
    o.require(worst <= kLoessOracleTol, "oracle gap " + fmt("%.3g", worst));
    o.require(worst_poly <= kPolyTol, "polynomial gap " + fmt("%.3g", worst_poly));
    if (o.pass) o.detail = "oracle gap " + fmt("%.2g", worst) + ", polynomial gap " + fmt("%.2g", worst_poly);
    return o;
}

Outcome ccf_diff_formula() {
    Outcome o;
    oracle::Matrix6 flat;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) flat[i][j] = i == j ? 0.9 : 0.1;
    const auto trivial = ccf_diff(oracle::to_land_matrix(flat));
    o.require(trivial.phase == 0 && trivial.in_phase_avg == 0.9 && trivial.out_phase_avg == 0.1 &&
                  trivial.ccf_diff == 0.8,
              "diagonal 0.9 / off-diagonal 0.1 gave " + fmt("%.17g", trivial.ccf_diff));

    std::mt19937_64 rng(104);
    std::uniform_real_distribution<double> u(-0.3, 1.0);
    double worst = 0, drift = 0;
    for (int t = 0; t < 100; ++t) {
        oracle::Matrix6 c;
        for (auto& row : c)
            for (auto& v : row) v = u(rng);
        const auto got = ccf_diff(oracle::to_land_matrix(c));
        const auto ref = oracle::ccf_diff_formula(c);
        o.require(got.phase == ref.phase, "phase differs on matrix " + std::to_string(t));
        worst = std::max({worst, std::abs(got.ccf_diff - ref.diff), std::abs(got.in_phase_avg - ref.in),
                          std::abs(got.out_phase_avg - ref.out)});
        for (int d = 1; d < 6; ++d) {
            oracle::Matrix6 r;
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) r[i][(j + d) % 6] = c[i][j];
            const auto moved = ccf_diff(oracle::to_land_matrix(r));
            o.require(moved.phase == (got.phase + d) % 6, "relabel did not shift the phase");
            drift = std::max(drift, std::abs(moved.ccf_diff - got.ccf_diff));
        }
    }
    o.require(worst <= kDiffDriftTol, "formula gap " + fmt("%.3g", worst));
    o.require(drift <= kDiffDriftTol, "relabel drift " + fmt("%.3g", drift));
    if (o.pass) o.detail = "formula gap " + fmt("%.2g", worst) + ", relabel drift " + fmt("%.2g", drift);
    return o;
}

Outcome end_to_end() {
    Outcome o;
    const auto& tb = two_barrel();
    const auto& bullets = tb.set.bullets();
    double min_same = INFINITY, max_diff = -INFINITY;
    int same_pairs = 0, on_phase = 0;
    for (std::size_t i = 0; i < bullets.size(); ++i)
        for (std::size_t j = i + 1; j < bullets.size(); ++j) {
            const auto& pc = tb.set.pair(i, j);
            if (bullets[i].barrel_id == bullets[j].barrel_id) {
                min_same = std::min(min_same, pc.score.ccf_diff);
                ++same_pairs;
                on_phase += best_phase(pc.matrix) == planted_phase(tb.synth.bullets[i], tb.synth.bullets[j]);
            } else {
                max_diff = std::max(max_diff, pc.score.ccf_diff);
            }
        }
    const double rate = static_cast<double>(on_phase) / same_pairs;
    o.require(min_same > max_diff, "overlap: min same " + fmt("%.4f", min_same) + " <= max different " + fmt("%.4f", max_diff));
    o.require(rate >= kPhaseHitRate, "planted phase on " + fmt("%.3f", rate) + " of same-source pairs");
    o.require(tb.seconds < kEndToEndSeconds, "took " + fmt("%.1f s", tb.seconds));
    if (o.pass)
        o.detail = "min same " + fmt("%.3f", min_same) + " > max different " + fmt("%.3f", max_diff) + ", phase " +
                   std::to_string(on_phase) + "/" + std::to_string(same_pairs) + ", " + fmt("%.1f s", tb.seconds);
    return o;
}

Outcome clustering() {
    Outcome o;
    std::mt19937_64 rng(105);
    std::uniform_real_distribution<double> u(0, 1);
    auto heights_monotone = [](const Dendrogram& d) {
        for (std::size_t s = 1; s < d.merges.size(); ++s)
            if (d.merges[s].height < d.merges[s - 1].height) return false;
        return true;
    };
    for (int t = 0; t < 50; ++t) {
        const std::size_t k = 2 + static_cast<std::size_t>(t % 7);
        DistanceMatrix d(k);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = i + 1; j < k; ++j) {
                double v = u(rng);
                if (t % 2) v = std::round(v * 4) / 4;
                d.at(i, j) = d.at(j, i) = v;
            }
        const auto dend = complete_linkage(d);
        const auto ref = oracle::naive_complete_linkage(d);
        bool same = dend.merges.size() == ref.size();
        for (std::size_t s = 0; same && s < ref.size(); ++s)
            same = dend.merges[s].a == ref[s].a && dend.merges[s].b == ref[s].b && dend.merges[s].height == ref[s].height;
        o.require(same, "merge sequence differs on instance " + std::to_string(t));
        o.require(heights_monotone(dend), "heights decrease on instance " + std::to_string(t));
        o.require(oracle::clusters_contiguous(dend, leaf_order(dend)), "non-contiguous cluster");
    }

    const auto& set = two_barrel().set;
    std::vector<std::string> ids;
    for (const auto& b : set.bullets()) ids.push_back(b.id);
    const auto dend = complete_linkage(score_to_distance(set), ids);
    o.require(heights_monotone(dend), "heights decrease on the two-barrel set");
    std::string barrels;
    for (auto leaf : leaf_order(dend)) {
        const auto& b = set.bullets()[leaf].barrel_id;
        if (barrels.empty() || barrels.back() != b[0]) barrels += b;
    }
    o.require(barrels.size() == 2, "barrel runs in leaf order: " + barrels);
    if (o.pass) o.detail = "50 oracle instances agree, leaf order runs " + barrels;
    return o;
}

Outcome variogram_distances() {
    Outcome o;
    const std::vector<std::string> ids{"X11", "X12", "X50"};
    const std::vector<double> upper{1, 0.5, 0.2, 1, 0.3, 1};
    const auto v = variogram(ids, upper, {}, {{"X11", 11}, {"X12", 12}, {"X50", 50}});
    std::map<std::pair<std::string, std::string>, int> d;
    for (const auto& p : v.points) d[{p.bullet1, p.bullet2}] = p.distance;
    o.require(v.points.size() == 3, "expected 3 points");
    o.require(d[{"X11", "X12"}] == 1 && d[{"X12", "X50"}] == 38, "distances differ from {1, 38}");
    o.require(d[{"X11", "X50"}] == 39, "11 vs 50 is not 39");
    if (o.pass) o.detail = "{1, 38, 39}; 11 vs 50 -> 39";
    return o;
}

Outcome groove_detection() {
    Outcome o;
    SynthParams p;
    p.shoulders = true;
    p.land_length = 2000;
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto s = synth_profile(p, 5000 + seed);
        const auto g = detect_grooves(s.profile, {});
        const double dl = std::abs(static_cast<double>(g.bounds.left_index) - static_cast<double>(s.truth.left_index));
        const double dr = std::abs(static_cast<double>(g.bounds.right_index) - static_cast<double>(s.truth.right_index));
        hits += dl <= kGrooveWithin && dr <= kGrooveWithin && !g.left_missing && !g.right_missing;
    }
    o.require(hits >= kGrooveHitRate * 100, std::to_string(hits) + "/100 fixtures within tolerance");

    p.shoulders = false;
    int plain_ok = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto s = synth_profile(p, 7000 + seed);
        const auto g = detect_grooves(s.profile, {});
        plain_ok += g.bounds == GrooveBounds{0, s.profile.size() - 1} && g.left_missing && g.right_missing;
    }
    o.require(plain_ok == 20, std::to_string(plain_ok) + "/20 shoulder-free profiles kept the full range");
    if (o.pass) o.detail = std::to_string(hits) + "/100 within 10 samples, 20/20 shoulder-free flagged";
    return o;
}

Outcome mislabeling() {
    Outcome o;
    SynthParams p;
    p.seed = 31;
    p.barrels = {"A", "B"};
    p.bullets_per_barrel = 11;
    p.land_length = 1000;
    p.max_offset = 50;
    p.n_rows = 9;
    const auto synth = generate_synth(p);
    const auto all = fixture::to_signals(synth);
    CompareParams cp;
    cp.lag.max_lag = 150;

    // barrel A's set: A1..A8 plus B1..B3 filed under A9..A11
    std::vector<BulletSignals> a_set(all.begin(), all.begin() + 8);
    std::set<std::string> planted;
    for (int i = 0; i < 3; ++i) {
        auto b = all[11 + static_cast<std::size_t>(i)];
        b.id = "A" + std::to_string(9 + i);
        b.barrel_id = "A";
        b.shot_number = 9 + i;
        planted.insert(b.id);
        a_set.push_back(b);
    }
    const auto set = compare_set(a_set, cp);
    const auto report = flag_outliers(set);
    std::set<std::string> flagged;
    for (const auto& f : report.flags) flagged.insert(f.bullet_id);
    o.require(flagged == planted, "flagged " + std::to_string(flagged.size()) + " bullets, not the 3 planted");

    // a flagged bullet against everything else: its best match is a B bullet
    std::vector<BulletSignals> refs(all.begin(), all.begin() + 8);
    refs.insert(refs.end(), all.begin() + 14, all.end());
    for (std::size_t i = 8; i < 11; ++i) {
        const auto scores = cross_set_compare(a_set[i], refs, cp);
        std::size_t best = 0;
        for (std::size_t r = 1; r < scores.size(); ++r)
            if (scores[r].ccf_diff > scores[best].ccf_diff) best = r;
        o.require(refs[best].barrel_id == "B", a_set[i].id + " peaks against barrel " + refs[best].barrel_id);
    }

    // the corrected A9..A11 signals
    std::map<std::string, LandSignals> fix;
    for (int i = 0; i < 3; ++i) fix["A" + std::to_string(9 + i)] = all[8 + static_cast<std::size_t>(i)].lands;
    const auto sub = substitute_bullets(set, fix, cp);
    const auto after = flag_outliers(sub.set);
    std::string others;
    for (const auto& f : after.flags) {
        o.require(!planted.count(f.bullet_id), f.bullet_id + " still flagged after substitution");
        others += " " + f.bullet_id;
    }
    bool untouched_same = true;
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i; j < 8; ++j) untouched_same = untouched_same && sub.set.pair(i, j) == set.pair(i, j);
    o.require(untouched_same, "an untouched score changed");
    o.require(sub.recomputed.size() == 3 * 11 - 3, "unexpected recompute count");
    if (o.pass)
        o.detail = "flagged {A9, A10, A11}, cross-set peaks in B, after substitution flagged {" +
                   (others.empty() ? std::string() : others.substr(1)) + "}";
    return o;
}

Outcome bundle_round_trip() {
    Outcome o;
    const auto config = fixture::small_config(40);
    const auto records = fixture::synth_records(generate_synth(fixture::small_synth({"A", "B"}, 3, 600)), config);
    const auto first = serialize_bundle(fixture::bundle_from(records, config, 1));
    const auto second = serialize_bundle(fixture::bundle_from(records, config, 4));
    o.require(first == second, "rebuild is not byte-identical");
    const auto parsed = parse_bundle(first);
    o.require(parsed == fixture::bundle_from(records, config), "read(write(b)) != b");
    o.require(serialize_bundle(parsed) == first, "re-serialization differs");

    // full scale: one 40-bullet barrel with ~2000-sample signals; a small lag
    // bound keeps the run short and does not change the stored size
    SynthParams p;
    p.seed = 40;
    p.barrels = {"A"};
    p.bullets_per_barrel = 40;
    p.n_rows = 9;
    auto full_config = fixture::small_config(20);
    const auto full = serialize_bundle(fixture::bundle_from(fixture::synth_records(generate_synth(p), full_config), full_config));
    const double mb = static_cast<double>(full.size()) / (1024.0 * 1024.0);
    o.require(static_cast<double>(full.size()) < kBundleLimitBytes, "full bundle is " + fmt("%.1f MB", mb));
    if (o.pass) o.detail = "byte-identical, field-exact round trip, 40-bullet bundle " + fmt("%.1f MB", mb);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"ccf oracle equivalence", ccf_oracle},
        {"shift recovery", shift_recovery},
        {"loess oracle", loess_oracle},
        {"ccf_diff formula", ccf_diff_formula},
        {"end-to-end separation", end_to_end},
        {"clustering", clustering},
        {"variogram distances", variogram_distances},
        {"groove detection", groove_detection},
        {"mislabeling scenario", mislabeling},
        {"bundle determinism and round trip", bundle_round_trip},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Outcome r;
        try {
            r = run();
        } catch (const std::exception& e) {
            r = {false, std::string("threw: ") + e.what()};
        }
        failures += !r.pass;
        std::printf("%s  %-36s %s\n", r.pass ? "PASS" : "FAIL", name, r.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures;
}
