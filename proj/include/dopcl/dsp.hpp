#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dopcl/constants.hpp"
#include "dopcl/csv.hpp"
#include "dopcl/errors.hpp"
#include "dopcl/numeric.hpp"

namespace dopcl::dsp {

// Two-pulse canceller y_k = x_k - x_{k-1}; output is one sample shorter.
inline std::vector<std::complex<double>> mti_two_pulse(std::span<const std::complex<double>> x) {
    if (x.size() < 2) throw std::invalid_argument("mti_two_pulse: need at least two samples");
    std::vector<std::complex<double>> y(x.size() - 1);
    for (std::size_t k = 1; k < x.size(); ++k) y[k - 1] = x[k] - x[k - 1];
    return y;
}

// |H(e^{jw})| of the canceller, |1 - e^{-jw}| = 2|sin(w/2)|. Zeros at 2*pi*n,
// maxima at pi*(2n+1).
inline double mti_response(double omega) { return 2.0 * std::abs(std::sin(0.5 * omega)); }

struct Downsampled {
    std::vector<std::complex<double>> samples;
    std::size_t factor = 1;
};

// Decimates so the expected Doppler lands near the canceller's passband peak:
// factor = round(pi / (2*pi*f_d*T_s)), clamped to [1, len/4]. Rejects inputs
// whose expected Doppler would exceed the post-decimation Nyquist rate.
inline Downsampled downsample_for_mti(std::span<const std::complex<double>> x,
                                      double expected_doppler_hz, double pulse_interval_s) {
    if (!(expected_doppler_hz > 0.0))
        throw std::domain_error("downsample_for_mti: expected Doppler must be positive");
    if (!(pulse_interval_s > 0.0))
        throw std::domain_error("downsample_for_mti: pulse interval must be positive");
    if (x.empty()) throw std::invalid_argument("downsample_for_mti: empty input");
    const double omega = kTwoPi * expected_doppler_hz * pulse_interval_s;
    auto factor = static_cast<std::size_t>(std::llround(kPi / omega));
    const std::size_t max_factor = std::max<std::size_t>(1, x.size() / 4);
    factor = std::clamp<std::size_t>(factor, 1, max_factor);
    const double nyquist = 1.0 / (2.0 * pulse_interval_s * static_cast<double>(factor));
    if (expected_doppler_hz > nyquist * (1.0 + 1e-12))
        throw std::domain_error("downsample_for_mti: expected Doppler " +
                                std::to_string(expected_doppler_hz) +
                                " Hz above post-decimation Nyquist " + std::to_string(nyquist) +
                                " Hz");
    Downsampled out;
    out.factor = factor;
    for (std::size_t k = 0; k < x.size(); k += factor) out.samples.push_back(x[k]);
    return out;
}

enum class Window { rectangular, hann };

namespace detail {

// Iterative radix-2 decimation-in-time FFT, forward transform
// X_k = sum_n x_n exp(-j*2*pi*n*k/N). Size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& data) {
    const std::size_t n = data.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");
    if (n < 2) return;
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -kTwoPi / static_cast<double>(len);
        const std::complex<double> w_len(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= w_len;
            }
        }
    }
}

inline double window_weight(Window window, std::size_t n, std::size_t length) {
    switch (window) {
        case Window::hann:
            if (length < 2) return 1.0;
            return 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(n) /
                                         static_cast<double>(length - 1)));
        case Window::rectangular:
        default:
            return 1.0;
    }
}

}  // namespace detail

// Doppler filter-bank output: two-sided spectrum ordered from -fs/2 toward
// +fs/2, with the bin frequencies in hertz for the sampling interval used.
struct DopplerReport {
    std::vector<double> frequency_axis_hz;
    std::vector<double> velocity_axis_mps;  // filled by estimate_velocity
    std::vector<double> magnitude;
    std::size_t peak_bin = 0;
    double peak_frequency_hz = 0.0;  // parabola-refined
    double estimated_velocity_mps = 0.0;
    bool mti_applied = false;
    std::optional<double> attenuation_at_truth_db;
    double sample_interval_s = 0.0;
    std::size_t fft_size = 0;
};

// Magnitude spectrum of the slow-time sequence: window, zero-pad to fft_size
// (a power of two, >= the sequence length), FFT, then reorder two-sided.
// The peak is refined with a three-point parabola on log magnitude.
inline DopplerReport doppler_fft(std::span<const std::complex<double>> x, std::size_t fft_size,
                                 Window window, double sample_interval_s) {
    if (x.empty()) throw std::invalid_argument("doppler_fft: empty input");
    if (!(sample_interval_s > 0.0))
        throw std::invalid_argument("doppler_fft: sample interval must be positive");
    if (fft_size < x.size())
        throw std::invalid_argument("doppler_fft: fft size smaller than the sequence");
    if (!is_power_of_two(fft_size))
        throw std::invalid_argument("doppler_fft: fft size must be a power of two");

    std::vector<std::complex<double>> buffer(fft_size, {0.0, 0.0});
    for (std::size_t n = 0; n < x.size(); ++n)
        buffer[n] = x[n] * detail::window_weight(window, n, x.size());
    detail::fft_radix2(buffer);

    DopplerReport report;
    report.sample_interval_s = sample_interval_s;
    report.fft_size = fft_size;
    const double fs = 1.0 / sample_interval_s;
    const double resolution = fs / static_cast<double>(fft_size);
    report.frequency_axis_hz.resize(fft_size);
    report.magnitude.resize(fft_size);
    const std::size_t half = fft_size / 2;
    for (std::size_t i = 0; i < fft_size; ++i) {
        report.frequency_axis_hz[i] =
            (static_cast<double>(i) - static_cast<double>(half)) * resolution;
        report.magnitude[i] = std::abs(buffer[(i + half) % fft_size]);
    }

    std::size_t peak = 0;
    for (std::size_t i = 1; i < fft_size; ++i)
        if (report.magnitude[i] > report.magnitude[peak]) peak = i;
    report.peak_bin = peak;

    const double p = report.magnitude[peak];
    double delta = 0.0;
    if (p > 0.0) {
        const double l = report.magnitude[(peak + fft_size - 1) % fft_size];
        const double r = report.magnitude[(peak + 1) % fft_size];
        // neighbors at numerical-noise level mean the tone sits on the bin
        if (l > 1e-9 * p && r > 1e-9 * p) {
            const double ll = std::log(l);
            const double lp = std::log(p);
            const double lr = std::log(r);
            const double denom = ll - 2.0 * lp + lr;
            if (denom < 0.0) delta = std::clamp(0.5 * (ll - lr) / denom, -0.5, 0.5);
        }
    }
    report.peak_frequency_hz = report.frequency_axis_hz[peak] + delta * resolution;
    return report;
}

// Completes the report for a carrier: velocity axis v = f*c/(2*f_c) and the
// peak-based estimate. Throws no_detection on an all-zero spectrum.
inline double estimate_velocity(DopplerReport& report, double carrier_hz,
                                double speed_of_light = kSpeedOfLight) {
    if (!(carrier_hz > 0.0)) throw std::invalid_argument("estimate_velocity: invalid carrier");
    double max_mag = 0.0;
    for (const double m : report.magnitude) max_mag = std::max(max_mag, m);
    if (max_mag == 0.0) throw no_detection("estimate_velocity: all-zero spectrum, no detection");
    const double scale = speed_of_light / (2.0 * carrier_hz);
    report.velocity_axis_mps.resize(report.frequency_axis_hz.size());
    for (std::size_t i = 0; i < report.frequency_axis_hz.size(); ++i)
        report.velocity_axis_mps[i] = report.frequency_axis_hz[i] * scale;
    report.estimated_velocity_mps = report.peak_frequency_hz * scale;
    return report.estimated_velocity_mps;
}

// CSV: f_Hz, v_mps, mag_dB (normalized to the peak), then a trailing summary
// comment with the refined peak and velocity estimate.
inline std::string serialize_doppler_report(const DopplerReport& report) {
    std::ostringstream out;
    out << "f_Hz,v_mps,mag_dB\n";
    double max_mag = 0.0;
    for (const double m : report.magnitude) max_mag = std::max(max_mag, m);
    const double floor_db = -300.0;
    for (std::size_t i = 0; i < report.magnitude.size(); ++i) {
        const double v =
            report.velocity_axis_mps.empty() ? 0.0 : report.velocity_axis_mps[i];
        double mag_db = floor_db;
        if (max_mag > 0.0 && report.magnitude[i] > 0.0)
            mag_db = std::max(floor_db, db20(report.magnitude[i] / max_mag));
        out << csv::format_number(report.frequency_axis_hz[i], 9) << ','
            << csv::format_number(v, 9) << ',' << csv::format_number(mag_db, 9) << '\n';
    }
    out << "# peak_frequency_hz=" << csv::format_number(report.peak_frequency_hz, 9)
        << " v_hat_mps=" << csv::format_number(report.estimated_velocity_mps, 9)
        << " mti=" << (report.mti_applied ? 1 : 0) << '\n';
    return out.str();
}

inline void save_doppler_report(const DopplerReport& report, const std::filesystem::path& path) {
    csv::atomic_write_text(path, serialize_doppler_report(report));
}

}  // namespace dopcl::dsp
