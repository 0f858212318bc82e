#pragma once

#include <optional>

#include "posyn/types.hpp"

namespace posyn {

struct ResampleResult {
    UniformSeries series;
    /// Set when the requested grid end lay past the last input timestamp and
    /// the grid was cut short instead of extrapolating.
    bool truncated = false;
};

/// Linearly interpolates a timestamped stream onto a uniform grid anchored at
/// its first timestamp. The grid stops at the last input sample; if
/// `requested_end` lies beyond it the result is truncated and flagged.
ResampleResult resample_to_grid(const SampledSeries& stream, double rate,
                                std::optional<double> requested_end = std::nullopt);

}  // namespace posyn
