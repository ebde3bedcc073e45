#pragma once

#include <map>
#include <string>

#include "bulletcmp/analyze.hpp"
#include "bulletcmp/compare.hpp"
#include "bulletcmp/scan_io.hpp"
#include "bulletcmp/signal.hpp"

namespace bulletcmp {

/// Every tunable number of the pipeline, loaded from one plain-text file:
///
///     [loess]
///     span = 0.75
///
/// Unknown keys are an error; missing keys keep their defaults.
struct PipelineConfig {
    ValidationLimits validation;
    SignalParams signal;
    CompareParams compare;
    AnalysisParams analysis;
    int thumbnail_factor = 8;

    /// Flat `section.key -> value` view, used for the bundle's config snapshot.
    std::map<std::string, double> snapshot() const;
    static PipelineConfig from_snapshot(const std::map<std::string, double>& values);
};

PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::string& path);

/// The default configuration, written out in the file format.
std::string default_config_text();

}  // namespace bulletcmp
