#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bulletcmp/scan_io.hpp"

namespace bulletcmp {

/// Raised when an operation's input cannot support it (too few points,
/// out-of-range crosscut, no admissible rows).
class InsufficientData : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoessParams {
    double span = 0.75;
    int degree = 2;
    int robust_iterations = 2;

    void check() const;
};

/// Robust locally weighted regression (tricube distance weights, bisquare
/// robustness weights). Returns the fit at every position; masked inputs are
/// ignored and their outputs are left at 0 with the mask carried over by the
/// caller. `xs` must be non-decreasing over the measured positions.
///
/// Each fit uses the ceil(span * n) nearest measured neighbours; the window
/// radius is the distance to the farthest of them. When that leaves fewer
/// than degree + 1 distinct positions with positive weight, the radius grows
/// to the next neighbour distance until it does (or, with no neighbour left,
/// to 1.001 times the farthest distance).
std::vector<double> loess_smooth(std::span<const double> xs, std::span<const double> ys,
                                 std::span<const std::uint8_t> mask, const LoessParams& params);

/// Unmasked convenience overload.
std::vector<double> loess_smooth(std::span<const double> xs, std::span<const double> ys, const LoessParams& params);

// ---- profiles and signals ---------------------------------------------

struct Profile {
    double y_location = 0;  // µm
    double x_inc = 0.645;   // µm per sample, xs[i] = i * x_inc
    std::vector<double> heights;
    std::vector<std::uint8_t> mask;

    std::size_t size() const { return heights.size(); }
    double x(std::size_t i) const { return static_cast<double>(i) * x_inc; }
    std::size_t measured_count() const;

    friend bool operator==(const Profile&, const Profile&) = default;
};

struct GrooveBounds {
    std::size_t left_index = 0;
    std::size_t right_index = 0;

    friend bool operator==(const GrooveBounds&, const GrooveBounds&) = default;
};

struct GrooveDetection {
    GrooveBounds bounds;
    bool left_missing = false;   // no shoulder found, bound is the profile end
    bool right_missing = false;

    friend bool operator==(const GrooveDetection&, const GrooveDetection&) = default;
};

struct Signal {
    std::vector<double> values;  // µm; entries with mask 0 are unspecified
    std::vector<std::uint8_t> mask;
    double x_inc = 0.645;

    // provenance
    ScanMeta meta;
    double y_location = 0;
    GrooveBounds bounds;

    std::size_t size() const { return values.size(); }
    bool measured(std::size_t i) const { return mask[i] != 0; }
    bool fully_measured() const;

    friend bool operator==(const Signal&, const Signal&) = default;
};

struct CrosscutParams {
    double step = 25.0;  // µm
    double stability_threshold = 0.95;
    int window = 3;
    double min_row_fraction = 0.8;
};

struct CrosscutChoice {
    double y_location = 0;
    bool fallback = false;  // no stable region; densest row used

    friend bool operator==(const CrosscutChoice&, const CrosscutChoice&) = default;
};

/// Scans upward from the low-y edge for the first crosscut whose adjacent
/// profiles stay correlated above the threshold for `window` steps.
CrosscutChoice select_crosscut(const HeightField& field, const CrosscutParams& params);

/// Per-column median over 2 * band_halfwidth + 1 rows centred on y_location.
Profile extract_profile(const HeightField& field, double y_location, int band_halfwidth);

struct GrooveParams {
    double shoulder_quantile = 0.99;
    double edge_fraction = 0.25;
    // Exceedances must clear `shoulder_margin` times the mid-region quantile.
    double shoulder_margin = 2.0;
    std::size_t min_samples = 50;
};

/// Robust quadratic LOESS (span 1) through the whole profile; a side has a
/// shoulder when some residual in its outer `edge_fraction` exceeds
/// shoulder_margin times the `shoulder_quantile` of the central half's
/// absolute residuals. The bound is one past the innermost such sample, moved
/// further inward over samples still raised above the local land level.
GrooveDetection detect_grooves(const Profile& profile, const GrooveParams& params);

/// Trims the profile to the bounds and subtracts its LOESS fit.
Signal extract_signal(const Profile& profile, const GrooveBounds& bounds, const LoessParams& params);

// ---- whole-scan pipeline ----------------------------------------------

struct SignalParams {
    CrosscutParams crosscut;
    int band_halfwidth = 2;
    GrooveParams grooves;
    LoessParams loess;
};

struct LandSignal {
    Signal signal;
    Profile profile;
    GrooveDetection grooves;
    CrosscutChoice crosscut;
    bool crosscut_override = false;
};

LandSignal process_scan(const ScanRecord& record, const SignalParams& params,
                        std::optional<double> crosscut_override = std::nullopt);

}  // namespace bulletcmp
