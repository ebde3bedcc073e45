#include "bulletcmp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace bulletcmp {

namespace {

using Rng = std::mt19937_64;

std::vector<double> gaussian_smooth(const std::vector<double>& v, double sigma) {
    const int half = static_cast<int>(std::ceil(3 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double total = 0;
    for (int i = -half; i <= half; ++i) {
        kernel[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (sigma * sigma));
        total += kernel[static_cast<std::size_t>(i + half)];
    }
    for (auto& k : kernel) k /= total;
    const auto n = static_cast<int>(v.size());
    std::vector<double> out(v.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0;
        for (int k = -half; k <= half; ++k) {
            const int j = std::clamp(i + k, 0, n - 1);
            s += kernel[static_cast<std::size_t>(k + half)] * v[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

// Two-scale smoothed noise normalised to the given standard deviation.
std::vector<double> striations(std::size_t n, double amplitude, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> fine(n), coarse(n);
    for (auto& v : fine) v = z(rng);
    for (auto& v : coarse) v = z(rng);
    fine = gaussian_smooth(fine, 2.0);
    coarse = gaussian_smooth(coarse, 12.0);
    double fs = 0, cs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        fs += fine[i] * fine[i];
        cs += coarse[i] * coarse[i];
    }
    fs = std::sqrt(fs / static_cast<double>(n));
    cs = std::sqrt(cs / static_cast<double>(n));
    std::vector<double> out(n);
    double mean = 0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = fine[i] / fs + 0.5 * coarse[i] / cs;
        mean += out[i];
    }
    mean /= static_cast<double>(n);
    double ss = 0;
    for (auto& v : out) {
        v -= mean;
        ss += v * v;
    }
    const double scale = amplitude / std::sqrt(ss / static_cast<double>(n));
    for (auto& v : out) v *= scale;
    return out;
}

SynthLand make_land(const std::vector<double>& truth, int barrel_land, int offset, const SynthParams& p, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    const std::size_t sw = p.shoulders ? p.shoulder_width : 0;
    const std::size_t n_cols = p.land_length + 2 * sw;

    SynthLand land;
    land.barrel_land = barrel_land;
    land.offset = offset;
    land.truth = {sw, sw + p.land_length - 1};
    land.field = HeightField(n_cols, p.n_rows, p.x_inc, p.y_inc);

    std::vector<double> line(n_cols);
    const auto start = static_cast<std::size_t>(p.max_offset + offset);
    for (std::size_t c = 0; c < n_cols; ++c) {
        double h;
        if (c >= sw && c < sw + p.land_length)
            h = truth[start + c - sw] + p.noise_fraction * p.amplitude * z(rng);
        else
            h = p.amplitude * z(rng);  // groove texture, unrelated to the land
        const double t = (static_cast<double>(c) - 0.5 * static_cast<double>(n_cols - 1)) /
                         (0.5 * static_cast<double>(p.land_length));
        h -= p.curvature_depth * t * t;
        if (sw > 0) {
            const std::size_t d = c < sw ? sw - c : (c >= sw + p.land_length ? c - (sw + p.land_length) + 1 : 0);
            if (d > 0)
                h += p.shoulder_height *
                     std::min(1.0, static_cast<double>(d) / static_cast<double>(std::max<std::size_t>(p.shoulder_ramp, 1)));
        }
        line[c] = h;
    }
    for (std::size_t r = 0; r < p.n_rows; ++r)
        for (std::size_t c = 0; c < n_cols; ++c)
            land.field.at(r, c) = line[c] + p.row_noise_fraction * p.amplitude * z(rng);

    if (p.dropout_fraction > 0) {
        const auto cells = land.field.heights.size();
        const auto target = static_cast<std::size_t>(p.dropout_fraction * static_cast<double>(cells));
        std::uniform_int_distribution<std::size_t> pos(0, cells - 1);
        std::uniform_int_distribution<std::size_t> run(1, 10);
        std::size_t lost = 0;
        while (lost < target) {
            const auto at = pos(rng);
            const auto len = run(rng);
            for (std::size_t i = at; i < std::min(cells, at + len); ++i) {
                if (land.field.mask[i]) ++lost;
                land.field.mask[i] = 0;
                land.field.heights[i] = 0;
            }
        }
    }
    return land;
}

void check(const SynthParams& p) {
    if (p.barrels.empty() || p.bullets_per_barrel < 1) throw std::invalid_argument("synth: need barrels and bullets");
    if (p.land_length < 10) throw std::invalid_argument("synth: land_length too small");
    if (p.max_offset < 0) throw std::invalid_argument("synth: max_offset must be >= 0");
    if (p.n_rows < 1) throw std::invalid_argument("synth: n_rows must be >= 1");
    if (!(p.dropout_fraction >= 0 && p.dropout_fraction < 1))
        throw std::invalid_argument("synth: dropout_fraction must lie in [0, 1)");
}

}  // namespace

std::string SynthBullet::id() const { return bullet_id(barrel_id, shot_number); }

SynthSet generate_synth(const SynthParams& params) {
    check(params);
    SynthSet set;
    set.params = params;
    Rng rng(params.seed);
    const std::size_t truth_len = params.land_length + 2 * static_cast<std::size_t>(params.max_offset);
    for (std::size_t b = 0; b < params.barrels.size(); ++b) {
        std::array<std::vector<double>, kLands> lands;
        for (auto& l : lands) l = striations(truth_len, params.amplitude, rng);
        set.truth.push_back(std::move(lands));
    }
    std::uniform_int_distribution<int> phase(0, kLands - 1);
    std::uniform_int_distribution<int> offset(-params.max_offset, params.max_offset);
    for (std::size_t b = 0; b < params.barrels.size(); ++b) {
        for (int k = 0; k < params.bullets_per_barrel; ++k) {
            SynthBullet bullet;
            bullet.barrel_id = params.barrels[b];
            bullet.shot_number = params.first_shot + k;
            bullet.phase = phase(rng);
            for (int i = 0; i < kLands; ++i) {
                const int barrel_land = (i + bullet.phase) % kLands;
                bullet.lands[static_cast<std::size_t>(i)] =
                    make_land(set.truth[b][static_cast<std::size_t>(barrel_land)], barrel_land, offset(rng), params, rng);
            }
            set.bullets.push_back(std::move(bullet));
        }
    }
    return set;
}

SynthProfile synth_profile(const SynthParams& params, std::uint64_t seed) {
    SynthParams p = params;
    p.n_rows = 1;
    check(p);
    Rng rng(seed);
    const auto truth = striations(p.land_length + 2 * static_cast<std::size_t>(p.max_offset), p.amplitude, rng);
    std::uniform_int_distribution<int> offset(-p.max_offset, p.max_offset);
    const auto land = make_land(truth, 0, offset(rng), p, rng);
    SynthProfile out;
    out.profile.x_inc = p.x_inc;
    out.profile.heights.assign(land.field.heights.begin(), land.field.heights.end());
    out.profile.mask.assign(land.field.mask.begin(), land.field.mask.end());
    out.truth = land.truth;
    return out;
}

ScanRecord to_scan_record(const SynthBullet& bullet, int land) {
    ScanRecord r;
    r.meta.barrel_id = bullet.barrel_id;
    r.meta.shot_number = bullet.shot_number;
    r.meta.land_index = land + 1;
    r.meta.source_path = "synthetic";
    r.field = bullet.lands.at(static_cast<std::size_t>(land)).field;
    return r;
}

}  // namespace bulletcmp
