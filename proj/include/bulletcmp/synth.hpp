#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bulletcmp/compare.hpp"
#include "bulletcmp/records.hpp"
#include "bulletcmp/scan_io.hpp"
#include "bulletcmp/signal.hpp"

namespace bulletcmp {

/// Fixed-seed generator of striated land scans with known ground truth.
struct SynthParams {
    std::uint64_t seed = 1;
    std::vector<std::string> barrels{"A", "B"};
    int bullets_per_barrel = 8;
    int first_shot = 1;

    std::size_t land_length = 2000;  // samples between the groove shoulders
    double x_inc = 0.645;
    double amplitude = 1.0;       // striation standard deviation, µm
    double noise_fraction = 0.05;  // per-bullet noise σ relative to amplitude
    double row_noise_fraction = 0.01;
    int max_offset = 100;  // per-land shift of the scanned window, samples
    double curvature_depth = 40.0;  // drop from centre to land edge, µm

    bool shoulders = false;
    std::size_t shoulder_width = 150;  // samples of groove on each side
    double shoulder_height = 30.0;     // µm
    std::size_t shoulder_ramp = 3;     // samples to reach full height

    std::size_t n_rows = 25;
    double y_inc = 5.0;
    double dropout_fraction = 0.0;  // fraction of cells lost in short runs
};

struct SynthLand {
    HeightField field;
    GrooveBounds truth;  // first and last land sample of each row
    int barrel_land = 0;  // 0-based land of the barrel this impression came from
    int offset = 0;
};

struct SynthBullet {
    std::string barrel_id;
    int shot_number = 0;
    int phase = 0;  // land i carries barrel land (i + phase) mod 6
    std::array<SynthLand, kLands> lands;

    std::string id() const;
};

struct SynthSet {
    SynthParams params;
    std::vector<std::array<std::vector<double>, kLands>> truth;  // per barrel
    std::vector<SynthBullet> bullets;
};

SynthSet generate_synth(const SynthParams& params);

/// Cyclic phase at which bullet b's lands line up with bullet a's.
inline int planted_phase(const SynthBullet& a, const SynthBullet& b) {
    return ((a.phase - b.phase) % kLands + kLands) % kLands;
}

/// Single profile fixture: one land with or without shoulders.
struct SynthProfile {
    Profile profile;
    GrooveBounds truth;
};
SynthProfile synth_profile(const SynthParams& params, std::uint64_t seed);

/// Scan record for one synthetic land, ready for process_scan.
ScanRecord to_scan_record(const SynthBullet& bullet, int land);

}  // namespace bulletcmp
