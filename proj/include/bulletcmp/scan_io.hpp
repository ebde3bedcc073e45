#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace bulletcmp {

/// Thrown by the scan readers. `field()` names the offending element
/// (an XML field, a ZIP member, a CSV line) so the caller can report it.
class ScanFormatError : public std::runtime_error {
public:
    ScanFormatError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Rectangular grid of surface heights in µm, row-major (x fastest).
/// `mask[i] != 0` means cell i was measured; unmeasured cells hold 0.
struct HeightField {
    std::size_t n_cols = 0;
    std::size_t n_rows = 0;
    double x_inc = 0.645;
    double y_inc = 0.645;
    std::vector<double> heights;
    std::vector<std::uint8_t> mask;

    HeightField() = default;
    HeightField(std::size_t cols, std::size_t rows, double xinc, double yinc);

    double& at(std::size_t row, std::size_t col) { return heights[row * n_cols + col]; }
    double at(std::size_t row, std::size_t col) const { return heights[row * n_cols + col]; }
    bool measured(std::size_t row, std::size_t col) const { return mask[row * n_cols + col] != 0; }

    std::span<const double> row(std::size_t r) const { return {heights.data() + r * n_cols, n_cols}; }
    std::span<const std::uint8_t> row_mask(std::size_t r) const { return {mask.data() + r * n_cols, n_cols}; }

    std::size_t measured_count() const;
    double measured_fraction() const;

    /// Throws std::invalid_argument if any structural invariant is broken.
    void check() const;

    friend bool operator==(const HeightField&, const HeightField&) = default;
};

struct ScanMeta {
    std::string barrel_id;
    int shot_number = 0;
    int land_index = 1;  // 1..6
    std::string source_path;

    friend bool operator==(const ScanMeta&, const ScanMeta&) = default;
};

struct ScanRecord {
    ScanMeta meta;
    HeightField field;
    bool excluded = false;
    std::string reason;
    std::map<std::string, std::string> provenance;  // opaque x3p metadata
};

struct X3pScan {
    HeightField field;
    std::map<std::string, std::string> metadata;
};

/// Reads an x3p container (ZIP holding main.xml and a binary float matrix).
/// Increments and heights are converted from meters to µm; NaN cells are masked.
X3pScan read_x3p(std::span<const std::uint8_t> bytes);

X3pScan read_x3p_file(const std::string& path);

/// Plain-text grid: `x_inc=<µm>,y_inc=<µm>` header, then one CSV line per row.
/// Empty cells are missing.
HeightField read_grid_csv(std::string_view text);
std::string write_grid_csv(const HeightField& field);

/// Block-mean downsampling; blocks without any measured cell are masked.
/// Partial blocks at the right/bottom edge are averaged over what they hold.
HeightField downsample(const HeightField& field, int factor);

struct ValidationLimits {
    double min_measured_fraction = 0.6;
    std::size_t min_cols = 50;
    std::size_t min_rows = 1;
};

/// Mechanical suitability check. Returns the exclusion reason, or nullopt when
/// the scan passes. A measured fraction equal to the threshold passes.
std::optional<std::string> validate(const ScanRecord& record, const ValidationLimits& limits);

/// Loads a scan by file extension (.x3p or .csv).
ScanRecord load_scan(const std::string& path, const ScanMeta& meta);

// ---- manifest ----------------------------------------------------------

struct ManifestEntry {
    std::string path;
    ScanMeta meta;
    bool excluded = false;
    std::string reason;
    std::optional<double> crosscut_y;  // manual override in µm
};

/// CSV with header `path,barrel_id,shot_number,land_index,excluded,reason`
/// and an optional trailing `crosscut_y` column. Quoted fields are allowed.
std::vector<ManifestEntry> parse_manifest(std::string_view text);
std::vector<ManifestEntry> read_manifest(const std::string& path);

std::string read_file(const std::string& path);
std::vector<std::uint8_t> read_binary_file(const std::string& path);

}  // namespace bulletcmp
