#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bulletcmp/records.hpp"

namespace bulletcmp {

inline constexpr int kBundleSchemaVersion = 1;

class BundleError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A score or analysis names a bullet the manifest does not know.
class DanglingReference : public BundleError {
    using BundleError::BundleError;
};

class SchemaVersionError : public BundleError {
public:
    SchemaVersionError(int found, int supported)
        : BundleError("bundle schema_version " + std::to_string(found) + " is not supported (this build reads " +
                      std::to_string(supported) + ")"),
          found_(found) {}
    int found() const noexcept { return found_; }

private:
    int found_;
};

class BundleParseError : public BundleError {
public:
    BundleParseError(std::size_t byte, const std::string& what)
        : BundleError("malformed bundle at byte " + std::to_string(byte) + ": " + what), byte_(byte) {}
    std::size_t byte() const noexcept { return byte_; }

private:
    std::size_t byte_;
};

struct ManifestBullet {
    std::string id;
    std::string barrel_id;
    int shot_number = 0;

    friend bool operator==(const ManifestBullet&, const ManifestBullet&) = default;
};

struct Exclusion {
    std::string bullet_id;
    int land_index = 0;
    std::string reason;

    friend bool operator==(const Exclusion&, const Exclusion&) = default;
};

struct BundleManifest {
    std::vector<std::string> barrels;
    std::vector<ManifestBullet> bullets;  // ordered by (barrel, shot)
    std::vector<Exclusion> exclusions;

    friend bool operator==(const BundleManifest&, const BundleManifest&) = default;
};

struct Bundle {
    int schema_version = kBundleSchemaVersion;
    BundleManifest manifest;
    std::vector<LandRecord> lands;    // ordered by bullet, then land
    std::vector<ScoreRecord> scores;  // one per unordered pair, self pairs included
    Analysis analysis;
    std::map<std::string, double> config;

    const LandRecord* land(const std::string& bullet, int land_index) const;
    /// The stored record for the pair in either order, or nullptr.
    const ScoreRecord* score(const std::string& b1, const std::string& b2) const;

    friend bool operator==(const Bundle&, const Bundle&) = default;
};

/// Assembles and validates a bundle. The manifest is derived from the land
/// records; every id a score or the analysis mentions must appear there.
/// Numbers are rounded to the precision they are written with, so the result
/// survives write/read unchanged.
Bundle build_bundle(std::vector<LandRecord> lands, std::vector<ScoreRecord> scores, Analysis analysis,
                    std::map<std::string, double> config);

Json to_json(const Bundle& b);
Json to_json(const BundleManifest& m);
Bundle bundle_from_json(const Json& j);

std::string serialize_bundle(const Bundle& b);
Bundle parse_bundle(std::string_view text);

void write_bundle(const Bundle& b, const std::string& path);
Bundle read_bundle(const std::string& path);

}  // namespace bulletcmp
