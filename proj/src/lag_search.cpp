// Screened lag search.
//
// Every lag is scored with running-sum correlation on mean-centred data (one
// dot product per lag when both signals are fully measured). Lags whose
// screened value lies within kScreenMargin of the screened maximum, plus any
// lag whose variances are too small to trust, are then re-evaluated with the
// exact two-pass corr_at_lag, so the answer equals ccf_max_serial bitwise.

#include <algorithm>
#include <cmath>
#include <vector>

#include "bulletcmp/compare.hpp"
#include "lag_select.hpp"

namespace bulletcmp {

namespace {

// Screening error is ~1e-13 for centred data of a few thousand samples.
constexpr double kScreenMargin = 1e-7;
constexpr double kVarianceGuard = 1e-9;

struct Centred {
    std::vector<double> v, v2, m;  // centred value, its square, mask as 0/1
    std::vector<double> pv, pv2;   // prefix sums (fully measured case)
    bool full = true;
    double scale = 0;              // sum of squares over all measured samples

    explicit Centred(SeriesView s) : v(s.size()), v2(s.size()), m(s.size()) {
        double sum = 0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.mask[i]) {
                sum += s.values[i];
                ++n;
            } else {
                full = false;
            }
        const double mean = n ? sum / static_cast<double>(n) : 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s.mask[i]) {
                v[i] = s.values[i] - mean;
                v2[i] = v[i] * v[i];
                m[i] = 1.0;
                scale += v2[i];
            }
        }
        if (full) {
            pv.assign(s.size() + 1, 0.0);
            pv2.assign(s.size() + 1, 0.0);
            for (std::size_t i = 0; i < s.size(); ++i) {
                pv[i + 1] = pv[i] + v[i];
                pv2[i + 1] = pv2[i] + v2[i];
            }
        }
    }
};

struct Sums {
    double n = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
};

double dot(const double* a, const double* b, std::size_t len) {
    double acc = 0;
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < len; ++i) acc += a[i] * b[i];
    return acc;
}

Sums masked_sums(const Centred& a, const Centred& b, std::size_t s0, std::size_t t0, std::size_t len) {
    double n = 0, sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    const double *av = a.v.data() + s0, *av2 = a.v2.data() + s0, *am = a.m.data() + s0;
    const double *bv = b.v.data() + t0, *bv2 = b.v2.data() + t0, *bm = b.m.data() + t0;
#pragma omp simd reduction(+ : n, sa, sb, saa, sbb, sab)
    for (std::size_t i = 0; i < len; ++i) {
        n += am[i] * bm[i];
        sa += av[i] * bm[i];
        saa += av2[i] * bm[i];
        sb += am[i] * bv[i];
        sbb += am[i] * bv2[i];
        sab += av[i] * bv[i];
    }
    return {n, sa, sb, saa, sbb, sab};
}

}  // namespace

LandPairResult ccf_max(SeriesView x, SeriesView y, const LagSearchParams& params) {
    LandPairResult best;
    if (x.size() == 0 || y.size() == 0) return best;
    const int m = params.effective_max_lag(y.size());
    const auto min_overlap = params.min_overlap_for(y.size());
    const auto nx = static_cast<std::ptrdiff_t>(x.size());
    const auto ny = static_cast<std::ptrdiff_t>(y.size());

    const Centred a(x), b(y);
    const bool full = a.full && b.full;

    const auto lags = static_cast<std::size_t>(2 * m + 1);
    std::vector<double> screened(lags, -2.0);
    std::vector<int> uncertain;
    double top = -2.0;

    for (int k = -m; k <= m; ++k) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -k);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(nx, ny - k);
        if (hi <= lo) continue;
        const auto s0 = static_cast<std::size_t>(lo);
        const auto t0 = static_cast<std::size_t>(lo + k);
        const auto len = static_cast<std::size_t>(hi - lo);

        Sums s;
        if (full) {
            s.n = static_cast<double>(len);
            s.sa = a.pv[s0 + len] - a.pv[s0];
            s.saa = a.pv2[s0 + len] - a.pv2[s0];
            s.sb = b.pv[t0 + len] - b.pv[t0];
            s.sbb = b.pv2[t0 + len] - b.pv2[t0];
            s.sab = dot(a.v.data() + s0, b.v.data() + t0, len);
        } else {
            s = masked_sums(a, b, s0, t0, len);
        }
        if (s.n < 1 || s.n < static_cast<double>(min_overlap)) continue;

        const double va = s.saa - s.sa * s.sa / s.n;
        const double vb = s.sbb - s.sb * s.sb / s.n;
        if (!(va > kVarianceGuard * std::max(s.saa, 1e-300)) || !(vb > kVarianceGuard * std::max(s.sbb, 1e-300))) {
            uncertain.push_back(k);
            continue;
        }
        const double r = (s.sab - s.sa * s.sb / s.n) / std::sqrt(va * vb);
        screened[static_cast<std::size_t>(k + m)] = r;
        top = std::max(top, r);
    }

    for (int k = -m; k <= m; ++k) {
        if (screened[static_cast<std::size_t>(k + m)] < top - kScreenMargin) continue;
        if (screened[static_cast<std::size_t>(k + m)] < -1.5) continue;  // not screened
        const auto c = corr_at_lag(x, y, k, min_overlap);
        if (c.ok()) detail::offer(best, c, k);
    }
    for (int k : uncertain) {
        const auto c = corr_at_lag(x, y, k, min_overlap);
        if (c.ok()) detail::offer(best, c, k);
    }
    return best;
}

}  // namespace bulletcmp
