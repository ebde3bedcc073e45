// Reference lag search. Every lag goes through corr_at_lag; this is the
// definition the optimized kernel in lag_search.cpp must reproduce exactly.

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "bulletcmp/compare.hpp"
#include "lag_select.hpp"

namespace bulletcmp {

int LagSearchParams::effective_max_lag(std::size_t ny) const {
    if (max_lag < 0) throw std::invalid_argument("max_lag must be >= 0");
    if (ny == 0) return 0;
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(max_lag), ny - 1));
}

std::size_t LagSearchParams::min_overlap_for(std::size_t ny) const {
    if (min_overlap) return *min_overlap;
    const auto m = static_cast<std::size_t>(effective_max_lag(ny));
    return std::max(min_overlap_floor, ny > m ? ny - m : 0);
}

LagCorrelation corr_at_lag(SeriesView x, SeriesView y, int k, std::size_t min_overlap) {
    const auto nx = static_cast<std::ptrdiff_t>(x.size());
    const auto ny = static_cast<std::ptrdiff_t>(y.size());
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -k);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(nx, ny - k);

    LagCorrelation out;
    std::size_t n = 0;
    double sx = 0, sy = 0;
    for (std::ptrdiff_t s = lo; s < hi; ++s) {
        const auto t = static_cast<std::size_t>(s + k);
        const auto u = static_cast<std::size_t>(s);
        if (x.mask[u] && y.mask[t]) {
            sx += x.values[u];
            sy += y.values[t];
            ++n;
        }
    }
    out.overlap = n;
    if (n == 0 || n < min_overlap) {
        out.status = CorrStatus::insufficient_overlap;
        return out;
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::ptrdiff_t s = lo; s < hi; ++s) {
        const auto t = static_cast<std::size_t>(s + k);
        const auto u = static_cast<std::size_t>(s);
        if (x.mask[u] && y.mask[t]) {
            const double dx = x.values[u] - mx;
            const double dy = y.values[t] - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    if (!(sxx > 0) || !(syy > 0)) {
        out.status = CorrStatus::undefined;
        return out;
    }
    out.value = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    out.status = CorrStatus::ok;
    return out;
}

LandPairResult ccf_max_serial(SeriesView x, SeriesView y, const LagSearchParams& params) {
    LandPairResult best;
    if (x.size() == 0 || y.size() == 0) return best;
    const int m = params.effective_max_lag(y.size());
    const auto min_overlap = params.min_overlap_for(y.size());
    for (int k = -m; k <= m; ++k) {
        const auto c = corr_at_lag(x, y, k, min_overlap);
        if (c.ok()) detail::offer(best, c, k);
    }
    return best;
}

AlignedPair align(SeriesView x, SeriesView y, int lag) {
    const auto nx = static_cast<std::ptrdiff_t>(x.size());
    const auto ny = static_cast<std::ptrdiff_t>(y.size());
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -lag);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(nx, ny - lag);
    if (hi <= lo) throw InsufficientData("align: lag " + std::to_string(lag) + " leaves no overlap");
    AlignedPair out;
    const auto len = static_cast<std::size_t>(hi - lo);
    out.index.reserve(len);
    out.x.reserve(len);
    out.y.reserve(len);
    out.x_mask.reserve(len);
    out.y_mask.reserve(len);
    for (std::ptrdiff_t s = lo; s < hi; ++s) {
        const auto u = static_cast<std::size_t>(s);
        const auto t = static_cast<std::size_t>(s + lag);
        out.index.push_back(s);
        out.x.push_back(x.values[u]);
        out.y.push_back(y.values[t]);
        out.x_mask.push_back(x.mask[u]);
        out.y_mask.push_back(y.mask[t]);
    }
    return out;
}

}  // namespace bulletcmp
