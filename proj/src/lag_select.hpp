#pragma once

#include <cstdlib>

#include "bulletcmp/compare.hpp"

namespace bulletcmp::detail {

/// True when (value, lag) should replace the current best: larger value, then
/// smaller |lag|, then the negative lag.
inline bool beats(double value, int lag, const LandPairResult& best) {
    if (!best.valid) return true;
    if (value != best.ccf) return value > best.ccf;
    const int a = std::abs(lag), b = std::abs(best.lag);
    if (a != b) return a < b;
    return lag < best.lag;
}

inline void offer(LandPairResult& best, const LagCorrelation& c, int lag) {
    if (beats(c.value, lag, best)) best = {c.value, lag, c.overlap, true};
}

}  // namespace bulletcmp::detail
