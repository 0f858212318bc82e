#include "posyn/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "posyn/error.hpp"

namespace posyn::dsp {

using cplx = std::complex<double>;

void FilterSpec::check(double rate) const {
    if (!(rate > 0.0)) throw ValidationError("filter: sampling rate must be positive");
    if (order < 2 || order % 2 != 0) throw ValidationError("filter: order must be an even integer >= 2");
    if (!(band_low > 0.0 && band_low < band_high)) {
        throw ValidationError("filter: need 0 < band_low < band_high");
    }
    if (!(band_high < rate / 2.0)) {
        throw ValidationError("filter: band_high " + std::to_string(band_high) +
                              " Hz violates Nyquist at " + std::to_string(rate) + " Hz");
    }
    if (!(envelope_cutoff > 0.0 && envelope_cutoff < rate / 2.0)) {
        throw ValidationError("filter: envelope cutoff " + std::to_string(envelope_cutoff) +
                              " Hz violates Nyquist at " + std::to_string(rate) + " Hz");
    }
}

cplx Biquad::response(cplx z) const {
    const cplx zi = 1.0 / z;
    return (b0 + b1 * zi + b2 * zi * zi) / (1.0 + a1 * zi + a2 * zi * zi);
}

cplx SosFilter::response(double freq, double rate) const {
    const cplx z = std::polar(1.0, 2.0 * std::numbers::pi * freq / rate);
    cplx h = 1.0;
    for (const auto& s : sections_) h *= s.response(z);
    return h;
}

std::vector<double> SosFilter::apply(std::span<const double> x) const {
    std::vector<double> y(x.begin(), x.end());
    if (y.empty()) return y;
    double level = y.front();
    for (const auto& s : sections_) {
        // Steady state of the transposed direct form II for constant input.
        const double den = 1.0 + s.a1 + s.a2;
        const double gain = den != 0.0 ? (s.b0 + s.b1 + s.b2) / den : 0.0;
        const double out_level = gain * level;
        double z2 = s.b2 * level - s.a2 * out_level;
        double z1 = s.b1 * level - s.a1 * out_level + z2;
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
        level = out_level;
    }
    return y;
}

std::vector<double> SosFilter::filtfilt(std::span<const double> x, std::size_t pad) const {
    const std::size_t n = x.size();
    if (n <= pad) {
        throw ValidationError("filtfilt: signal of " + std::to_string(n) +
                              " samples too short for edge padding of " + std::to_string(pad));
    }
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    auto fwd = apply(ext);
    std::reverse(fwd.begin(), fwd.end());
    auto back = apply(fwd);
    std::reverse(back.begin(), back.end());
    return {back.begin() + static_cast<std::ptrdiff_t>(pad),
            back.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

namespace {

std::vector<cplx> butter_prototype(int n) {
    std::vector<cplx> poles;
    for (int k = 0; k < n; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + n + 1) / (2.0 * n);
        poles.push_back(std::polar(1.0, theta));
    }
    return poles;
}

cplx bilinear(cplx s, double rate) { return (2.0 * rate + s) / (2.0 * rate - s); }

double prewarp(double freq, double rate) {
    return 2.0 * rate * std::tan(std::numbers::pi * freq / rate);
}

/// Groups digital poles into sections; every section gets the numerator
/// `num` (zeros), first-order leftovers get `num_first`.
std::vector<Biquad> to_sections(std::vector<cplx> poles, const Biquad& num, const Biquad& num_first) {
    constexpr double tol = 1e-10;
    std::vector<cplx> complex_upper;
    std::vector<double> real_poles;
    for (const auto& p : poles) {
        if (std::abs(p.imag()) <= tol) {
            real_poles.push_back(p.real());
        } else if (p.imag() > 0) {
            complex_upper.push_back(p);
        }
    }
    // Sections closest to the unit circle last, which keeps intermediate
    // signals small in the cascade.
    std::sort(complex_upper.begin(), complex_upper.end(),
              [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    std::sort(real_poles.begin(), real_poles.end());

    std::vector<Biquad> out;
    for (std::size_t i = 0; i + 1 < real_poles.size(); i += 2) {
        Biquad s = num;
        s.a1 = -(real_poles[i] + real_poles[i + 1]);
        s.a2 = real_poles[i] * real_poles[i + 1];
        out.push_back(s);
    }
    if (real_poles.size() % 2 == 1) {
        Biquad s = num_first;
        s.a1 = -real_poles.back();
        s.a2 = 0.0;
        out.push_back(s);
    }
    for (const auto& p : complex_upper) {
        Biquad s = num;
        s.a1 = -2.0 * p.real();
        s.a2 = std::norm(p);
        out.push_back(s);
    }
    return out;
}

void normalize_gain(std::vector<Biquad>& sections, cplx z_ref) {
    cplx h = 1.0;
    for (const auto& s : sections) h *= s.response(z_ref);
    const double g = 1.0 / std::abs(h);
    auto& first = sections.front();
    first.b0 *= g;
    first.b1 *= g;
    first.b2 *= g;
}

}  // namespace

SosFilter butter_lowpass(int order, double cutoff, double rate) {
    if (order < 1) throw ValidationError("butter_lowpass: order must be positive");
    if (!(cutoff > 0.0 && cutoff < rate / 2.0)) {
        throw ValidationError("butter_lowpass: cutoff violates Nyquist");
    }
    const double wc = prewarp(cutoff, rate);
    std::vector<cplx> poles;
    for (const auto& p : butter_prototype(order)) poles.push_back(bilinear(wc * p, rate));
    auto sections = to_sections(poles, Biquad{1.0, 2.0, 1.0, 0, 0}, Biquad{1.0, 1.0, 0.0, 0, 0});
    normalize_gain(sections, cplx(1.0, 0.0));
    return SosFilter(std::move(sections));
}

SosFilter butter_bandpass(int order, double low, double high, double rate) {
    if (order < 2 || order % 2 != 0) throw ValidationError("butter_bandpass: order must be even");
    if (!(low > 0.0 && low < high && high < rate / 2.0)) {
        throw ValidationError("butter_bandpass: band edges violate 0 < low < high < Nyquist");
    }
    const double w1 = prewarp(low, rate);
    const double w2 = prewarp(high, rate);
    const double bw = w2 - w1;
    const double w0 = std::sqrt(w1 * w2);
    std::vector<cplx> poles;
    for (const auto& p : butter_prototype(order / 2)) {
        const cplx half = p * bw / 2.0;
        const cplx root = std::sqrt(half * half - w0 * w0);
        poles.push_back(bilinear(half + root, rate));
        poles.push_back(bilinear(half - root, rate));
    }
    // Each section carries one zero at z = 1 and one at z = -1.
    auto sections = to_sections(poles, Biquad{1.0, 0.0, -1.0, 0, 0}, Biquad{1.0, -1.0, 0.0, 0, 0});
    const double center = 2.0 * std::atan(w0 / (2.0 * rate));
    normalize_gain(sections, std::polar(1.0, center));
    return SosFilter(std::move(sections));
}

namespace {

std::size_t edge_pad(const FilterSpec& spec) { return static_cast<std::size_t>(3 * spec.order); }

}  // namespace

std::vector<double> bandpass(std::span<const double> signal, double rate, const FilterSpec& spec) {
    spec.check(rate);
    const auto filter = butter_bandpass(spec.order, spec.band_low, spec.band_high, rate);
    return filter.filtfilt(signal, edge_pad(spec));
}

std::vector<double> demean(std::span<const double> signal) {
    if (signal.empty()) throw ValidationError("demean: empty signal");
    const double n = static_cast<double>(signal.size());
    double sum = 0.0;
    for (double v : signal) sum += v;
    const double mean = sum / n;
    std::vector<double> out(signal.size());
    double residual = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = signal[i] - mean;
        residual += out[i];
    }
    // Second pass removes the rounding left by the first.
    const double correction = residual / n;
    for (double& v : out) v -= correction;
    return out;
}

std::vector<double> rectify(std::span<const double> signal) {
    std::vector<double> out(signal.size());
    std::transform(signal.begin(), signal.end(), out.begin(), [](double v) { return std::abs(v); });
    return out;
}

std::vector<double> envelope(std::span<const double> signal, double rate, const FilterSpec& spec) {
    spec.check(rate);
    const auto filter = butter_lowpass(spec.order, spec.envelope_cutoff, rate);
    auto out = filter.filtfilt(signal, edge_pad(spec));
    for (double& v : out) v = std::max(v, 0.0);
    return out;
}

Eigen::MatrixXd preprocess(const Eigen::MatrixXd& raw, double rate, const FilterSpec& spec) {
    spec.check(rate);
    const auto band = butter_bandpass(spec.order, spec.band_low, spec.band_high, rate);
    const auto low = butter_lowpass(spec.order, spec.envelope_cutoff, rate);
    const std::size_t pad = edge_pad(spec);

    Eigen::MatrixXd out(raw.rows(), raw.cols());
    std::vector<double> row(static_cast<std::size_t>(raw.cols()));
    for (Index c = 0; c < raw.rows(); ++c) {
        for (Index i = 0; i < raw.cols(); ++i) row[static_cast<std::size_t>(i)] = raw(c, i);
        auto stage = band.filtfilt(row, pad);
        stage = rectify(demean(stage));
        stage = low.filtfilt(stage, pad);
        for (Index i = 0; i < raw.cols(); ++i) {
            out(c, i) = std::max(stage[static_cast<std::size_t>(i)], 0.0);
        }
    }
    return out;
}

UniformSeries preprocess(const UniformSeries& raw, const FilterSpec& spec) {
    UniformSeries out;
    out.t0 = raw.t0;
    out.rate = raw.rate;
    out.values = preprocess(raw.values, raw.rate, spec);
    return out;
}

}  // namespace posyn::dsp
