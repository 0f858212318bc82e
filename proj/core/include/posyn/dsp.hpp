#pragma once

#include <complex>
#include <span>
#include <vector>

#include "posyn/types.hpp"

namespace posyn::dsp {

/// EMG conditioning parameters. `order` is the order of each designed
/// digital filter (the band-pass uses a prototype of order/2, so both the
/// band-pass and the envelope low-pass have `order` poles).
struct FilterSpec {
    double band_low = 20.0;
    double band_high = 300.0;
    double envelope_cutoff = 50.0;
    int order = 4;

    /// Throws ValidationError/NumericError if these settings are unusable at `rate`.
    void check(double rate) const;
};

/// One biquad in transposed direct form II; a0 is normalized to 1.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;

    std::complex<double> response(std::complex<double> z) const;
};

/// Cascade of second-order sections.
class SosFilter {
public:
    SosFilter() = default;
    explicit SosFilter(std::vector<Biquad> sections) : sections_(std::move(sections)) {}

    const std::vector<Biquad>& sections() const { return sections_; }

    /// Complex frequency response at `freq` Hz for sampling rate `rate`.
    std::complex<double> response(double freq, double rate) const;
    double magnitude(double freq, double rate) const { return std::abs(response(freq, rate)); }

    /// Causal filtering; initial state is the steady state for a constant
    /// input equal to `x[0]`.
    std::vector<double> apply(std::span<const double> x) const;

    /// Zero-phase forward-backward filtering with odd reflection padding of
    /// `pad` samples on each end.
    std::vector<double> filtfilt(std::span<const double> x, std::size_t pad) const;

private:
    std::vector<Biquad> sections_;
};

SosFilter butter_lowpass(int order, double cutoff, double rate);
SosFilter butter_bandpass(int order, double low, double high, double rate);

std::vector<double> bandpass(std::span<const double> signal, double rate, const FilterSpec& spec);
std::vector<double> demean(std::span<const double> signal);
std::vector<double> rectify(std::span<const double> signal);
std::vector<double> envelope(std::span<const double> signal, double rate, const FilterSpec& spec);

/// Channelwise band-pass, demean, rectify, low-pass envelope.
Eigen::MatrixXd preprocess(const Eigen::MatrixXd& raw, double rate, const FilterSpec& spec);
UniformSeries preprocess(const UniformSeries& raw, const FilterSpec& spec);

}  // namespace posyn::dsp
