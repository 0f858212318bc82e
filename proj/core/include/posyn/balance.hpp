#pragma once

#include <span>
#include <vector>

#include "posyn/types.hpp"

namespace posyn::balance {

inline constexpr double kDefaultLoadThreshold = 20.0;  // N

/// Center-of-pressure samples in the plate frame (mm). x is the
/// antero-posterior axis, y the medio-lateral axis.
struct CopTrace {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<bool> valid;
    /// Vertical load per sample (N); carried so two plates can be combined.
    std::vector<double> fz;

    std::size_t size() const { return t.size(); }
    std::size_t valid_count() const;
};

struct PlateOrigin {
    double x_mm = 0.0;
    double y_mm = 0.0;
};

/// COPx = -My / Fz, COPy = Mx / Fz (meters, converted to mm) offset by the
/// plate origin. Samples with Fz below `load_threshold` are invalid.
CopTrace cop_from_wrench(std::span<const double> t, std::span<const double> fx,
                         std::span<const double> fy, std::span<const double> fz,
                         std::span<const double> mx, std::span<const double> my,
                         PlateOrigin origin = {}, double load_threshold = kDefaultLoadThreshold);

/// Convenience overload for a plate stream (rows fx fy fz mx my mz).
CopTrace cop_from_plate(const SampledSeries& plate, PlateOrigin origin = {},
                        double load_threshold = kDefaultLoadThreshold);

/// Fz-weighted average of two plate COPs on a shared time grid. A plate that
/// is invalid at a sample contributes zero weight there.
CopTrace net_cop(const CopTrace& left, const CopTrace& right);

enum class RmsReference { mean, start };

struct CopMetrics {
    double total_excursion = 0.0;     ///< mm
    double rms_cop = 0.0;             ///< mm
    double rms_cop_velocity = 0.0;    ///< mm/s
    double max_ap_displacement = 0.0; ///< mm
    double max_ml_displacement = 0.0; ///< mm
};

/// Sway metrics over the valid samples. Path length and velocity use pairs of
/// consecutive samples that are both valid.
CopMetrics cop_metrics(const CopTrace& trace, RmsReference reference = RmsReference::mean);

/// Net COP of a trial's two plates restricted to [t_from, t_to].
CopTrace trial_cop(const TrialRecording& trial, double t_from, double t_to,
                   double load_threshold = kDefaultLoadThreshold);

}  // namespace posyn::balance
