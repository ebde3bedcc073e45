#include "bulletcmp/signal.hpp"

#include <algorithm>
#include <cmath>

namespace bulletcmp {

std::size_t Profile::measured_count() const {
    return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

bool Signal::fully_measured() const {
    return std::all_of(mask.begin(), mask.end(), [](auto m) { return m != 0; });
}

namespace {

double row_fraction(const HeightField& f, std::size_t r) {
    const auto m = f.row_mask(r);
    return static_cast<double>(std::count_if(m.begin(), m.end(), [](auto v) { return v != 0; })) /
           static_cast<double>(f.n_cols);
}

// Pearson correlation of two rows over the columns measured in both.
std::optional<double> row_correlation(const HeightField& f, std::size_t a, std::size_t b) {
    const auto ra = f.row(a), rb = f.row(b);
    const auto ma = f.row_mask(a), mb = f.row_mask(b);
    double sa = 0, sb = 0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < f.n_cols; ++c)
        if (ma[c] && mb[c]) {
            sa += ra[c];
            sb += rb[c];
            ++n;
        }
    if (n < 3) return std::nullopt;
    const double mean_a = sa / static_cast<double>(n), mean_b = sb / static_cast<double>(n);
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t c = 0; c < f.n_cols; ++c)
        if (ma[c] && mb[c]) {
            const double da = ra[c] - mean_a, db = rb[c] - mean_b;
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
    if (!(saa > 0) || !(sbb > 0)) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

// Linear-interpolation quantile (R type 7) of an unsorted sample.
double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2) return upper;
    return 0.5 * (upper + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

std::vector<double> positions(std::size_t n, double inc) {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(i) * inc;
    return xs;
}

}  // namespace

CrosscutChoice select_crosscut(const HeightField& field, const CrosscutParams& params) {
    field.check();
    if (!(params.step > 0)) throw std::invalid_argument("crosscut step must be positive");
    if (params.window < 1) throw std::invalid_argument("crosscut window must be >= 1");

    std::vector<std::uint8_t> admissible(field.n_rows);
    std::size_t n_admissible = 0;
    for (std::size_t r = 0; r < field.n_rows; ++r) {
        admissible[r] = row_fraction(field, r) >= params.min_row_fraction;
        n_admissible += admissible[r];
    }
    if (n_admissible < static_cast<std::size_t>(params.window))
        throw InsufficientData("crosscut: only " + std::to_string(n_admissible) + " rows have measured fraction >= " +
                               std::to_string(params.min_row_fraction));

    auto row_at = [&](double y) { return static_cast<std::size_t>(std::llround(y / field.y_inc)); };

    std::vector<std::uint8_t> stable;
    for (std::size_t j = 0;; ++j) {
        const double y = static_cast<double>(j) * params.step;
        const auto a = row_at(y), b = row_at(y + params.step);
        if (b >= field.n_rows) break;
        bool ok = false;
        if (admissible[a] && admissible[b]) {
            const auto c = row_correlation(field, a, b);
            ok = c && *c >= params.stability_threshold;
        }
        stable.push_back(ok);
    }

    const auto w = static_cast<std::size_t>(params.window);
    for (std::size_t j = 0; j + w <= stable.size(); ++j) {
        if (std::all_of(stable.begin() + static_cast<std::ptrdiff_t>(j), stable.begin() + static_cast<std::ptrdiff_t>(j + w),
                        [](auto s) { return s != 0; })) {
            return {static_cast<double>(row_at(static_cast<double>(j) * params.step)) * field.y_inc, false};
        }
    }

    std::size_t best = 0;
    double best_frac = -1;
    for (std::size_t r = 0; r < field.n_rows; ++r) {
        const double frac = row_fraction(field, r);
        if (frac > best_frac) {
            best_frac = frac;
            best = r;
        }
    }
    return {static_cast<double>(best) * field.y_inc, true};
}

Profile extract_profile(const HeightField& field, double y_location, int band_halfwidth) {
    if (band_halfwidth < 0) throw std::invalid_argument("band halfwidth must be >= 0");
    const double row_f = y_location / field.y_inc;
    if (!(row_f > -0.5) || !(row_f < static_cast<double>(field.n_rows) - 0.5))
        throw InsufficientData("crosscut y = " + std::to_string(y_location) + " µm lies outside the scan");
    const auto centre = static_cast<std::ptrdiff_t>(std::llround(row_f));
    const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, centre - band_halfwidth));
    const auto hi = static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(field.n_rows) - 1, centre + band_halfwidth));

    Profile p;
    p.y_location = y_location;
    p.x_inc = field.x_inc;
    p.heights.assign(field.n_cols, 0.0);
    p.mask.assign(field.n_cols, 0);
    std::vector<double> band;
    for (std::size_t c = 0; c < field.n_cols; ++c) {
        band.clear();
        for (std::size_t r = lo; r <= hi; ++r)
            if (field.measured(r, c)) band.push_back(field.at(r, c));
        if (!band.empty()) {
            p.heights[c] = median(band);
            p.mask[c] = 1;
        }
    }
    return p;
}

GrooveDetection detect_grooves(const Profile& profile, const GrooveParams& params) {
    const std::size_t n = profile.size();
    if (profile.measured_count() < params.min_samples)
        throw InsufficientData("grooves: profile has " + std::to_string(profile.measured_count()) +
                               " measured samples, need " + std::to_string(params.min_samples));

    const auto xs = positions(n, profile.x_inc);
    const auto fit = loess_smooth(xs, profile.heights, profile.mask, LoessParams{1.0, 2, 2});

    std::vector<double> residual(n, 0.0);
    double scale = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (profile.mask[i]) {
            residual[i] = profile.heights[i] - fit[i];
            scale = std::max(scale, std::abs(profile.heights[i]));
        }

    std::vector<double> mid;
    for (std::size_t i = n / 4; i < n - n / 4; ++i)
        if (profile.mask[i]) mid.push_back(std::abs(residual[i]));
    if (mid.empty()) throw InsufficientData("grooves: no measured samples in the central half of the profile");
    const double noise_floor = 1e-9 * (1 + scale);
    const double base = std::max(quantile(std::move(mid), params.shoulder_quantile), noise_floor);
    const double threshold = std::max(params.shoulder_margin * base, noise_floor);

    // Shoulders rise above the fitted curvature, so only upward exceedances
    // count. A side needs one sample over `threshold`; the bound then moves
    // inward while the next sample still sits more than the plain quantile
    // above the local land level (median residual of the 10 samples beyond).
    const auto edge = static_cast<std::size_t>(std::floor(params.edge_fraction * static_cast<double>(n)));
    constexpr std::size_t kLocal = 10;
    auto raised = [&](std::size_t i, int dir) {
        if (!profile.mask[i]) return false;
        std::vector<double> local;
        for (std::size_t step = 1; step <= kLocal; ++step) {
            const auto j = static_cast<std::ptrdiff_t>(i) + dir * static_cast<std::ptrdiff_t>(step);
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(n)) break;
            if (profile.mask[static_cast<std::size_t>(j)]) local.push_back(residual[static_cast<std::size_t>(j)]);
        }
        return !local.empty() && residual[i] > median(std::move(local)) + base;
    };
    GrooveDetection out;
    out.bounds = {0, n - 1};
    out.left_missing = out.right_missing = true;
    for (std::size_t i = edge; i-- > 0;) {
        if (profile.mask[i] && residual[i] > threshold) {
            while (i + 1 < edge && raised(i + 1, +1)) ++i;
            out.bounds.left_index = i + 1;
            out.left_missing = false;
            break;
        }
    }
    for (std::size_t i = n - edge; i < n; ++i) {
        if (profile.mask[i] && residual[i] > threshold) {
            while (i > n - edge && raised(i - 1, -1)) --i;
            out.bounds.right_index = i - 1;
            out.right_missing = false;
            break;
        }
    }
    return out;
}

Signal extract_signal(const Profile& profile, const GrooveBounds& bounds, const LoessParams& params) {
    if (!(bounds.left_index < bounds.right_index) || bounds.right_index >= profile.size())
        throw std::invalid_argument("groove bounds [" + std::to_string(bounds.left_index) + ", " +
                                    std::to_string(bounds.right_index) + "] invalid for a profile of length " +
                                    std::to_string(profile.size()));
    const std::size_t len = bounds.right_index - bounds.left_index + 1;
    const auto first = profile.heights.begin() + static_cast<std::ptrdiff_t>(bounds.left_index);
    const auto first_mask = profile.mask.begin() + static_cast<std::ptrdiff_t>(bounds.left_index);

    Signal s;
    s.values.assign(first, first + static_cast<std::ptrdiff_t>(len));
    s.mask.assign(first_mask, first_mask + static_cast<std::ptrdiff_t>(len));
    s.x_inc = profile.x_inc;
    s.y_location = profile.y_location;
    s.bounds = bounds;

    const auto xs = positions(len, profile.x_inc);
    const auto fit = loess_smooth(xs, s.values, s.mask, params);
    for (std::size_t i = 0; i < len; ++i) s.values[i] = s.mask[i] ? s.values[i] - fit[i] : 0.0;
    return s;
}

LandSignal process_scan(const ScanRecord& record, const SignalParams& params, std::optional<double> crosscut_override) {
    LandSignal out;
    if (crosscut_override) {
        out.crosscut = {*crosscut_override, false};
        out.crosscut_override = true;
    } else {
        out.crosscut = select_crosscut(record.field, params.crosscut);
    }
    out.profile = extract_profile(record.field, out.crosscut.y_location, params.band_halfwidth);
    out.grooves = detect_grooves(out.profile, params.grooves);
    out.signal = extract_signal(out.profile, out.grooves.bounds, params.loess);
    out.signal.meta = record.meta;
    return out;
}

}  // namespace bulletcmp
