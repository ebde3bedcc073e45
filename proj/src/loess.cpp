#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "bulletcmp/signal.hpp"

namespace bulletcmp {

void LoessParams::check() const {
    if (!(span > 0 && span <= 1)) throw std::invalid_argument("loess span must lie in (0, 1]");
    if (degree != 1 && degree != 2) throw std::invalid_argument("loess degree must be 1 or 2");
    if (robust_iterations < 0) throw std::invalid_argument("loess robust_iterations must be >= 0");
}

namespace {

/// Solves the (degree+1)^2 weighted normal equations for the intercept.
/// Returns nullopt when the system is numerically singular.
std::optional<double> solve_intercept(std::array<double, 5> moment, std::array<double, 3> rhs, int degree) {
    const int p = degree + 1;
    double a[3][4];
    for (int r = 0; r < p; ++r) {
        for (int c = 0; c < p; ++c) a[r][c] = moment[static_cast<std::size_t>(r + c)];
        a[r][p] = rhs[static_cast<std::size_t>(r)];
    }
    const double scale = std::abs(moment[0]);
    for (int c = 0; c < p; ++c) {
        int piv = c;
        for (int r = c + 1; r < p; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (!(std::abs(a[piv][c]) > 1e-12 * scale)) return std::nullopt;
        if (piv != c)
            for (int k = 0; k <= p; ++k) std::swap(a[c][k], a[piv][k]);
        for (int r = c + 1; r < p; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k <= p; ++k) a[r][k] -= f * a[c][k];
        }
    }
    double beta[3] = {0, 0, 0};
    for (int r = p - 1; r >= 0; --r) {
        double s = a[r][p];
        for (int k = r + 1; k < p; ++k) s -= a[r][k] * beta[k];
        beta[r] = s / a[r][r];
    }
    return beta[0];
}

struct LocalFit {
    std::span<const double> x;
    std::span<const double> y;
    std::span<const double> robustness;
    std::size_t q;
    int degree;

    // Distinct positions strictly inside radius h, counted up to `degree + 1`.
    std::size_t distinct_inside(std::size_t lo, std::size_t hi, double x0, double h) const {
        const auto need = static_cast<std::size_t>(degree + 1);
        std::size_t count = 0;
        double last = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t j = lo; j < hi && count < need; ++j) {
            if (std::abs(x[j] - x0) < h && x[j] != last) {
                ++count;
                last = x[j];
            }
        }
        return count;
    }

    double operator()(std::size_t i) const {
        const std::size_t n = x.size();
        const double x0 = x[i];

        // q nearest neighbours form a contiguous run of the sorted positions.
        std::size_t lo = i + 1 >= q ? i + 1 - q : 0;
        lo = std::min(lo, n - q);
        while (lo + q < n && x[lo + q] - x0 < x0 - x[lo]) ++lo;
        std::size_t hi = lo + q;
        double h = std::max(x0 - x[lo], x[hi - 1] - x0);

        const auto need = static_cast<std::size_t>(degree + 1);
        while (distinct_inside(lo, hi, x0, h) < need) {
            // Grow to the next strictly larger neighbour distance.
            double next = std::numeric_limits<double>::infinity();
            std::size_t l = lo, r = hi;
            while (l > 0 && x0 - x[l - 1] <= h) --l;
            while (r < n && x[r] - x0 <= h) ++r;
            if (l > 0) next = std::min(next, x0 - x[l - 1]);
            if (r < n) next = std::min(next, x[r] - x0);
            if (!std::isfinite(next)) {
                // Every point is inside already; stretch the radius past the
                // farthest one so it carries a small positive weight.
                const double stretched = h * 1.001;
                if (h > 0 && distinct_inside(0, n, x0, stretched) >= need) {
                    h = stretched;
                    lo = 0;
                    hi = n;
                    break;
                }
                throw InsufficientData("loess: too few distinct positions for the local polynomial");
            }
            h = next;
            lo = l;
            hi = r;
            while (lo > 0 && x0 - x[lo - 1] <= h) --lo;
            while (hi < n && x[hi] - x0 <= h) ++hi;
        }

        std::array<double, 5> m{};
        std::array<double, 3> t{};
        const double inv_h = 1.0 / h;
        for (std::size_t j = lo; j < hi; ++j) {
            const double u = (x[j] - x0) * inv_h;
            const double au = std::abs(u);
            double w = 0;
            if (au < 1) {
                const double c = 1 - au * au * au;
                w = c * c * c * robustness[j];
            }
            const double u2 = u * u;
            m[0] += w;
            m[1] += w * u;
            m[2] += w * u2;
            t[0] += w * y[j];
            t[1] += w * y[j] * u;
            if (degree == 2) {
                m[3] += w * u2 * u;
                m[4] += w * u2 * u2;
                t[2] += w * y[j] * u2;
            }
        }
        for (int d = degree; d >= 0; --d) {
            if (d == 0) {
                if (m[0] > 0) return t[0] / m[0];
                break;
            }
            if (auto b = solve_intercept(m, t, d)) return *b;
        }
        // Robustness weights removed the whole window: fall back to the
        // nearest neighbour's observation.
        return y[i];
    }
};

double median_of(std::vector<double> v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace

namespace {

struct RobustFit {
    std::vector<double> px, py;
    std::vector<std::size_t> index;
    std::vector<double> robustness;
    std::vector<double> fit;
    std::size_t q = 0;
};

RobustFit robust_fit(std::span<const double> xs, std::span<const double> ys, std::span<const std::uint8_t> mask,
                     const LoessParams& params) {
    params.check();
    if (xs.size() != ys.size() || mask.size() != xs.size())
        throw std::invalid_argument("loess: xs, ys and mask lengths differ");

    RobustFit rf;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!mask[i]) continue;
        if (!rf.px.empty() && xs[i] < rf.px.back()) throw std::invalid_argument("loess: xs must be non-decreasing");
        rf.index.push_back(i);
        rf.px.push_back(xs[i]);
        rf.py.push_back(ys[i]);
    }
    const std::size_t n = rf.px.size();
    const auto need = static_cast<std::size_t>(params.degree + 1);
    rf.q = static_cast<std::size_t>(std::ceil(params.span * static_cast<double>(n) - 1e-9));
    if (n < need || rf.q < need)
        throw InsufficientData("loess: " + std::to_string(n) + " measured points, span " + std::to_string(params.span) +
                               " is too few for degree " + std::to_string(params.degree));

    double y_scale = 0;
    for (double v : rf.py) y_scale = std::max(y_scale, std::abs(v));

    rf.robustness.assign(n, 1.0);
    rf.fit.resize(n);
    const LocalFit local{rf.px, rf.py, rf.robustness, rf.q, params.degree};

    const auto count = static_cast<std::ptrdiff_t>(n);
    for (int iter = 0;; ++iter) {
        bool failed = false;
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            try {
                rf.fit[static_cast<std::size_t>(i)] = local(static_cast<std::size_t>(i));
            } catch (const InsufficientData&) {
#pragma omp atomic write
                failed = true;
            }
        }
        if (failed) throw InsufficientData("loess: too few distinct positions for the local polynomial");
        if (iter == params.robust_iterations) break;

        std::vector<double> abs_res(n);
        for (std::size_t i = 0; i < n; ++i) abs_res[i] = std::abs(rf.py[i] - rf.fit[i]);
        const double s = median_of(abs_res);
        if (!(s > 1e-12 * y_scale)) break;  // exact fit, nothing to downweight
        for (std::size_t i = 0; i < n; ++i) {
            const double u = abs_res[i] / (6.0 * s);
            rf.robustness[i] = u < 1 ? (1 - u * u) * (1 - u * u) : 0.0;
        }
    }
    return rf;
}

}  // namespace

std::vector<double> loess_smooth(std::span<const double> xs, std::span<const double> ys,
                                 std::span<const std::uint8_t> mask, const LoessParams& params) {
    const auto rf = robust_fit(xs, ys, mask, params);
    std::vector<double> out(xs.size(), 0.0);
    for (std::size_t k = 0; k < rf.px.size(); ++k) out[rf.index[k]] = rf.fit[k];
    return out;
}

std::vector<double> loess_smooth(std::span<const double> xs, std::span<const double> ys, const LoessParams& params) {
    const std::vector<std::uint8_t> mask(xs.size(), 1);
    return loess_smooth(xs, ys, mask, params);
}

}  // namespace bulletcmp
