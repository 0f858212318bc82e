#include "posyn/resample.hpp"

#include <cmath>

#include "posyn/error.hpp"

namespace posyn {

ResampleResult resample_to_grid(const SampledSeries& stream, double rate,
                                std::optional<double> requested_end) {
    if (!(rate > 0.0)) throw ValidationError("resample_to_grid: rate must be positive");
    const auto& t = stream.t;
    if (t.size() < 2) throw ValidationError("resample_to_grid: need at least 2 samples");
    if (stream.values.cols() != static_cast<Index>(t.size())) {
        throw ValidationError("resample_to_grid: value/timestamp count mismatch");
    }
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] > t[i - 1])) {
            throw ValidationError("resample_to_grid: timestamps not strictly increasing");
        }
    }

    ResampleResult out;
    const double t0 = t.front();
    double end = t.back();
    if (requested_end) {
        if (*requested_end > t.back()) {
            out.truncated = true;
        } else {
            end = *requested_end;
        }
    }
    const auto count = static_cast<Index>(std::floor((end - t0) * rate + 1e-9)) + 1;

    out.series.t0 = t0;
    out.series.rate = rate;
    out.series.values.resize(stream.values.rows(), std::max<Index>(count, 1));

    std::size_t seg = 0;
    for (Index k = 0; k < count; ++k) {
        const double tk = std::min(t0 + static_cast<double>(k) / rate, t.back());
        while (seg + 2 < t.size() && t[seg + 1] < tk) ++seg;
        const double span = t[seg + 1] - t[seg];
        const double frac = (tk - t[seg]) / span;
        const auto a = static_cast<Index>(seg);
        out.series.values.col(k) =
            stream.values.col(a) + frac * (stream.values.col(a + 1) - stream.values.col(a));
    }
    return out;
}

}  // namespace posyn
