#include "posyn/balance.hpp"

#include <algorithm>
#include <cmath>

#include "posyn/error.hpp"

namespace posyn::balance {

std::size_t CopTrace::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

CopTrace cop_from_wrench(std::span<const double> t, std::span<const double> fx,
                         std::span<const double> fy, std::span<const double> fz,
                         std::span<const double> mx, std::span<const double> my,
                         PlateOrigin origin, double load_threshold) {
    const std::size_t n = t.size();
    if (fx.size() != n || fy.size() != n || fz.size() != n || mx.size() != n || my.size() != n) {
        throw ValidationError("cop_from_wrench: channel lengths differ");
    }
    CopTrace out;
    out.t.assign(t.begin(), t.end());
    out.x.resize(n);
    out.y.resize(n);
    out.valid.resize(n);
    out.fz.assign(fz.begin(), fz.end());
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        const bool loaded = fz[i] >= load_threshold;
        out.valid[i] = loaded;
        if (loaded) {
            out.x[i] = -my[i] / fz[i] * 1000.0 + origin.x_mm;
            out.y[i] = mx[i] / fz[i] * 1000.0 + origin.y_mm;
            any = true;
        } else {
            out.x[i] = 0.0;
            out.y[i] = 0.0;
        }
    }
    if (!any) throw ValidationError("cop_from_wrench: no sample exceeds the load threshold");
    return out;
}

CopTrace cop_from_plate(const SampledSeries& plate, PlateOrigin origin, double load_threshold) {
    if (plate.channels() != kPlateRows) throw ValidationError("cop_from_plate: expected 6 plate rows");
    const auto n = static_cast<std::size_t>(plate.samples());
    std::vector<std::vector<double>> rows(kPlateRows, std::vector<double>(n));
    for (int r = 0; r < kPlateRows; ++r) {
        for (std::size_t i = 0; i < n; ++i) rows[r][i] = plate.values(r, static_cast<Index>(i));
    }
    return cop_from_wrench(plate.t, rows[0], rows[1], rows[2], rows[3], rows[4], origin, load_threshold);
}

CopTrace net_cop(const CopTrace& left, const CopTrace& right) {
    const std::size_t n = left.size();
    if (right.size() != n) throw ValidationError("net_cop: plates have different sample counts");
    CopTrace out;
    out.t = left.t;
    out.x.resize(n);
    out.y.resize(n);
    out.valid.assign(n, true);
    out.fz.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(left.t[i] - right.t[i]) > 1e-9) {
            throw ValidationError("net_cop: time grids differ at sample " + std::to_string(i));
        }
        const double wl = left.valid[i] ? left.fz[i] : 0.0;
        const double wr = right.valid[i] ? right.fz[i] : 0.0;
        const double w = wl + wr;
        if (!(w > 0.0)) {
            throw ValidationError("net_cop: both plates unloaded at t = " + std::to_string(left.t[i]));
        }
        out.x[i] = (wl * left.x[i] + wr * right.x[i]) / w;
        out.y[i] = (wl * left.y[i] + wr * right.y[i]) / w;
        out.fz[i] = w;
    }
    return out;
}

CopMetrics cop_metrics(const CopTrace& trace, RmsReference reference) {
    const std::size_t n = trace.size();
    std::size_t count = 0;
    double sx = 0.0, sy = 0.0;
    std::size_t first = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (!trace.valid[i]) continue;
        if (first == n) first = i;
        sx += trace.x[i];
        sy += trace.y[i];
        ++count;
    }
    if (count < 2) throw ValidationError("cop_metrics: need at least 2 valid samples");

    double cx = sx / static_cast<double>(count);
    double cy = sy / static_cast<double>(count);
    if (reference == RmsReference::start) {
        cx = trace.x[first];
        cy = trace.y[first];
    }
    const double mean_x = sx / static_cast<double>(count);
    const double mean_y = sy / static_cast<double>(count);

    CopMetrics m;
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!trace.valid[i]) continue;
        const double dx = trace.x[i] - cx;
        const double dy = trace.y[i] - cy;
        sq += dx * dx + dy * dy;
        m.max_ap_displacement = std::max(m.max_ap_displacement, std::abs(trace.x[i] - mean_x));
        m.max_ml_displacement = std::max(m.max_ml_displacement, std::abs(trace.y[i] - mean_y));
    }
    m.rms_cop = std::sqrt(sq / static_cast<double>(count));

    double vel_sq = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (!trace.valid[i] || !trace.valid[i - 1]) continue;
        const double step = std::hypot(trace.x[i] - trace.x[i - 1], trace.y[i] - trace.y[i - 1]);
        m.total_excursion += step;
        const double dt = trace.t[i] - trace.t[i - 1];
        if (dt > 0.0) {
            vel_sq += (step / dt) * (step / dt);
            ++pairs;
        }
    }
    m.rms_cop_velocity = pairs > 0 ? std::sqrt(vel_sq / static_cast<double>(pairs)) : 0.0;
    return m;
}

CopTrace trial_cop(const TrialRecording& trial, double t_from, double t_to, double load_threshold) {
    auto slice = [&](const SampledSeries& s) {
        SampledSeries out;
        std::vector<Index> keep;
        for (Index i = 0; i < s.samples(); ++i) {
            const double ti = s.t[static_cast<std::size_t>(i)];
            if (ti >= t_from && ti <= t_to) keep.push_back(i);
        }
        out.values.resize(s.channels(), static_cast<Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            out.t.push_back(s.t[static_cast<std::size_t>(keep[k])]);
            out.values.col(static_cast<Index>(k)) = s.values.col(keep[k]);
        }
        return out;
    };
    const auto left = cop_from_plate(slice(trial.plates[0]), {}, load_threshold);
    const auto right = cop_from_plate(slice(trial.plates[1]), {}, load_threshold);
    return net_cop(left, right);
}

}  // namespace posyn::balance
