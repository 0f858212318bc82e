#include "posyn/binning.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "posyn/error.hpp"

namespace posyn::binning {

std::string_view to_string(Bin b) {
    switch (b) {
        case Bin::BK: return "BK";
        case Bin::APR1: return "APR1";
        case Bin::APR2: return "APR2";
        case Bin::APR3: return "APR3";
        case Bin::VPR1: return "VPR1";
        case Bin::VPR2: return "VPR2";
        case Bin::VPR3: return "VPR3";
    }
    return "?";
}

std::string_view to_string(Phase p) { return p == Phase::APR ? "APR" : "VPR"; }

Bin parse_bin(std::string_view s) {
    for (Bin b : kBins) {
        if (to_string(b) == s) return b;
    }
    throw ValidationError("unknown bin '" + std::string(s) + "'");
}

Phase parse_phase(std::string_view s) {
    if (s == "APR") return Phase::APR;
    if (s == "VPR") return Phase::VPR;
    throw ValidationError("unknown phase '" + std::string(s) + "'");
}

Window fixed_window(Bin bin, double t_onset) {
    auto after = [&](double lo) { return Window{t_onset + lo, t_onset + lo + kBinWidth, false}; };
    switch (bin) {
        case Bin::BK: return Window{t_onset - kBinWidth, t_onset, false};
        case Bin::APR1: return after(0.100);
        case Bin::APR2: return after(0.175);
        case Bin::APR3: return after(0.250);
        case Bin::VPR1: return after(0.325);
        case Bin::VPR2:
        case Bin::VPR3: break;
    }
    throw ValidationError("fixed_window: VPR2/VPR3 depend on the envelope");
}

namespace {

// First sample index whose timestamp is >= t. The small slack absorbs
// rounding in t0 + i / rate so window edges that fall on a sample include it.
Index first_at_or_after(double t, double t0, double rate) {
    return static_cast<Index>(std::max(0.0, std::ceil((t - t0) * rate - 1e-6)));
}

// Last sample index whose timestamp is <= t.
Index last_at_or_before(double t, double t0, double rate) {
    return static_cast<Index>(std::floor((t - t0) * rate + 1e-6));
}

Window centered(double center, double lo, double hi) {
    Window w{center - kBinWidth / 2, center + kBinWidth / 2, false};
    if (w.start < lo) {
        w.start = lo;
        w.clipped = true;
    }
    if (w.end > hi) {
        w.end = hi;
        w.clipped = true;
    }
    return w;
}

}  // namespace

VprWindows find_vpr_windows(std::span<const double> envelope, double t0, double rate,
                            double t_onset, double t_end) {
    const auto n = static_cast<Index>(envelope.size());
    const Index lo = first_at_or_after(t_onset + kVprSearchStart, t0, rate);
    const Index hi = std::min(last_at_or_before(t_end, t0, rate), n - 1);
    if (n == 0 || lo > hi) {
        throw ValidationError("find_vpr_windows: envelope does not cover the VPR search window");
    }
    auto at = [&](Index i) { return envelope[static_cast<std::size_t>(i)]; };
    auto time = [&](Index i) { return t0 + static_cast<double>(i) / rate; };

    Index peak = lo;
    for (Index i = lo + 1; i <= hi; ++i) {
        if (at(i) > at(peak)) peak = i;
    }

    VprWindows out;
    out.peak_value = at(peak);
    out.peak_time = time(peak);
    if (!(out.peak_value > 0.0)) {
        out.valid = false;
        return out;
    }

    const double extent_lo = t0;
    out.vpr2 = centered(out.peak_time, extent_lo, t_end);

    const double threshold = kOffsetFraction * out.peak_value;
    Index cross = -1;
    for (Index i = peak + 1; i <= hi; ++i) {
        if (at(i) < threshold) {
            cross = i;
            break;
        }
    }
    if (cross < 0) {
        out.vpr3_clamped = true;
        out.offset_time = t_end;
        out.vpr3 = Window{t_end - kBinWidth, t_end, false};
    } else {
        // Linear interpolation between the last sample above and the first below.
        const double above = at(cross - 1);
        const double below = at(cross);
        const double frac = (above - threshold) / (above - below);
        out.offset_time = time(cross - 1) + frac / rate;
        out.vpr3 = centered(out.offset_time, extent_lo, t_end);
    }
    return out;
}

double bin_average(std::span<const double> envelope, double t0, double rate, const Window& window) {
    const auto n = static_cast<Index>(envelope.size());
    const Index a = std::min(first_at_or_after(window.start, t0, rate), n);
    const Index b = std::min(first_at_or_after(window.end, t0, rate), n);
    if (b <= a) {
        throw ValidationError("bin_average: window [" + std::to_string(window.start) + ", " +
                              std::to_string(window.end) + ") holds no samples");
    }
    double sum = 0.0;
    for (Index i = a; i < b; ++i) sum += envelope[static_cast<std::size_t>(i)];
    return sum / static_cast<double>(b - a);
}

TrialBins bin_trial(const UniformSeries& envelopes, double t_onset, double t_end) {
    const Index channels = envelopes.channels();
    TrialBins out;
    out.means = Eigen::MatrixXd::Zero(channels, kBinCount);
    out.vpr_valid.assign(static_cast<std::size_t>(channels), true);
    out.vpr3_clamped.assign(static_cast<std::size_t>(channels), false);

    std::vector<double> row(static_cast<std::size_t>(envelopes.samples()));
    for (Index c = 0; c < channels; ++c) {
        for (Index i = 0; i < envelopes.samples(); ++i) row[static_cast<std::size_t>(i)] = envelopes.values(c, i);
        const std::span<const double> env(row);
        for (int b = 0; b < 5; ++b) {
            out.means(c, b) = bin_average(env, envelopes.t0, envelopes.rate, fixed_window(kBins[b], t_onset));
        }
        const auto vpr = find_vpr_windows(env, envelopes.t0, envelopes.rate, t_onset, t_end);
        if (!vpr.valid) {
            out.vpr_valid[static_cast<std::size_t>(c)] = false;
            continue;
        }
        out.vpr3_clamped[static_cast<std::size_t>(c)] = vpr.vpr3_clamped;
        out.means(c, 5) = bin_average(env, envelopes.t0, envelopes.rate, vpr.vpr2);
        out.means(c, 6) = bin_average(env, envelopes.t0, envelopes.rate, vpr.vpr3);
    }
    return out;
}

namespace {

std::string channel_name(Index row, Index rows) {
    if (rows == kChannelCount) return standard_channels()[static_cast<std::size_t>(row)].label();
    return "row " + std::to_string(row);
}

}  // namespace

Eigen::MatrixXd normalize_per_muscle(const Eigen::MatrixXd& values) {
    Eigen::MatrixXd out(values.rows(), values.cols());
    for (Index r = 0; r < values.rows(); ++r) {
        const double peak = values.cols() > 0 ? values.row(r).maxCoeff() : 0.0;
        if (!(peak > 0.0)) {
            throw ValidationError("normalize_per_muscle: channel " + channel_name(r, values.rows()) +
                                  " has no positive activity (dead electrode?)");
        }
        out.row(r) = values.row(r) / peak;
    }
    return out;
}

std::vector<Bin> phase_bins(Phase phase, bool include_bk) {
    std::vector<Bin> bins;
    if (include_bk) bins.push_back(Bin::BK);
    if (phase == Phase::APR) {
        bins.insert(bins.end(), {Bin::APR1, Bin::APR2, Bin::APR3});
    } else {
        bins.insert(bins.end(), {Bin::VPR1, Bin::VPR2, Bin::VPR3});
    }
    return bins;
}

std::vector<ColumnLabel> phase_columns(Phase phase, bool include_bk) {
    std::vector<ColumnLabel> cols;
    for (Bin b : phase_bins(phase, include_bk)) {
        for (Direction d : kDirections) cols.push_back({b, d});
    }
    return cols;
}

std::vector<NormalizedTrial> normalize_trials(const std::vector<TrialBins>& bins,
                                              const std::vector<Direction>& directions,
                                              const std::vector<int>& sessions,
                                              NormalizationScope scope) {
    if (bins.size() != directions.size() || bins.size() != sessions.size()) {
        throw ValidationError("normalize_trials: argument lengths differ");
    }
    if (bins.empty()) throw ValidationError("normalize_trials: no trials");
    const Index rows = bins.front().means.rows();

    std::map<int, Eigen::VectorXd> peaks;
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const int key = scope == NormalizationScope::session ? sessions[i] : 0;
        auto [it, fresh] = peaks.try_emplace(key, Eigen::VectorXd::Zero(rows));
        it->second = it->second.cwiseMax(bins[i].means.rowwise().maxCoeff());
    }
    for (const auto& [key, peak] : peaks) {
        for (Index r = 0; r < rows; ++r) {
            if (!(peak(r) > 0.0)) {
                throw ValidationError("normalize_per_muscle: channel " + channel_name(r, rows) +
                                      " has no positive activity (dead electrode?)");
            }
        }
    }

    std::vector<NormalizedTrial> out;
    out.reserve(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) {
        const int key = scope == NormalizationScope::session ? sessions[i] : 0;
        const auto& peak = peaks.at(key);
        NormalizedTrial t;
        t.direction = directions[i];
        t.values = bins[i].means.array().colwise() / peak.array();
        out.push_back(std::move(t));
    }
    return out;
}

BinnedActivationMatrix assemble_matrix(const std::vector<NormalizedTrial>& trials, Phase phase,
                                       bool include_bk) {
    if (trials.empty()) throw ValidationError("assemble_matrix: no trials");
    const Index rows = trials.front().values.rows();
    BinnedActivationMatrix out;
    out.phase = phase;
    out.columns = phase_columns(phase, include_bk);
    out.values = Eigen::MatrixXd::Zero(rows, static_cast<Index>(out.columns.size()));
    out.trials_per_cell.assign(out.columns.size(), 0);
    if (rows == kChannelCount) {
        const auto& ch = standard_channels();
        out.rows.assign(ch.begin(), ch.end());
    }

    std::vector<double> cell;
    for (std::size_t j = 0; j < out.columns.size(); ++j) {
        const auto [bin, dir] = out.columns[j];
        const int b = static_cast<int>(bin);
        int count = 0;
        for (const auto& t : trials) count += t.direction == dir ? 1 : 0;
        if (count == 0) {
            throw ValidationError("assemble_matrix: no trials for direction " +
                                  std::string(to_string(dir)));
        }
        out.trials_per_cell[j] = count;
        for (Index r = 0; r < rows; ++r) {
            cell.clear();
            for (const auto& t : trials) {
                if (t.direction == dir) cell.push_back(t.values(r, b));
            }
            // Sorted summation makes the mean independent of trial order.
            std::sort(cell.begin(), cell.end());
            double sum = 0.0;
            for (double v : cell) sum += v;
            out.values(r, static_cast<Index>(j)) = sum / static_cast<double>(count);
        }
    }
    for (Index r = 0; r < rows; ++r) {
        const double peak = out.values.row(r).maxCoeff();
        if (peak > 0.0) out.values.row(r) /= peak;
    }
    return out;
}

}  // namespace posyn::binning
