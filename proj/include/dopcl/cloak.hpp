#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dopcl/constants.hpp"
#include "dopcl/dsp.hpp"
#include "dopcl/numeric.hpp"
#include "dopcl/scene.hpp"

namespace dopcl::cloak {

// Modulation frequency whose serrodyne slope f_m * span negates the Doppler
// phase rate 4*pi*v*f_c/c:  f_m = -(4*pi*v*f_c/c) / span.
inline double cancellation_frequency(double velocity_mps, double carrier_hz, double span_rad,
                                     double speed_of_light = kSpeedOfLight) {
    if (!(span_rad > 0.0))
        throw std::domain_error("cancellation_frequency: phase span must be positive");
    if (!(carrier_hz > 0.0))
        throw std::domain_error("cancellation_frequency: carrier must be positive");
    return -(2.0 * kTwoPi * velocity_mps * carrier_hz / speed_of_light) / span_rad;
}

// Modulation frequency that makes the total phase slope match an arbitrary
// apparent velocity; spoof_frequency(v, 0, ...) reduces to cancellation.
inline double spoof_frequency(double true_velocity_mps, double apparent_velocity_mps,
                              double carrier_hz, double span_rad,
                              double speed_of_light = kSpeedOfLight) {
    if (!(span_rad > 0.0))
        throw std::domain_error("spoof_frequency: phase span must be positive");
    if (!(carrier_hz > 0.0)) throw std::domain_error("spoof_frequency: carrier must be positive");
    return 2.0 * kTwoPi * (apparent_velocity_mps - true_velocity_mps) * carrier_hz /
           (speed_of_light * span_rad);
}

struct CloakPlan {
    double velocity_mps = 0.0;
    double carrier_hz = 1.5e9;
    double phase_span_rad = 0.0;
    double modulation_hz = 0.0;
    double predicted_residual_hz = 0.0;  // |true Doppler + f_m*span/(2*pi)|
};

inline CloakPlan make_plan(double velocity_mps, double carrier_hz, double span_rad,
                           std::optional<double> modulation_hz = std::nullopt,
                           double speed_of_light = kSpeedOfLight) {
    CloakPlan plan;
    plan.velocity_mps = velocity_mps;
    plan.carrier_hz = carrier_hz;
    plan.phase_span_rad = span_rad;
    plan.modulation_hz = modulation_hz
                             ? *modulation_hz
                             : cancellation_frequency(velocity_mps, carrier_hz, span_rad,
                                                      speed_of_light);
    const double doppler = 2.0 * velocity_mps * carrier_hz / speed_of_light;
    plan.predicted_residual_hz = std::abs(doppler + plan.modulation_hz * span_rad / kTwoPi);
    return plan;
}

// Processing-chain knobs for the victim radar.
struct ChainSettings {
    std::size_t fft_size = 512;
    dsp::Window window = dsp::Window::rectangular;
    bool use_downsampling = true;
    std::optional<double> expected_doppler_hz;  // default: |2 v f_c / c| from the plan
};

struct ConcealmentReport {
    dsp::DopplerReport cloaked_raw;
    dsp::DopplerReport uncloaked_raw;
    dsp::DopplerReport cloaked_mti;
    dsp::DopplerReport uncloaked_mti;
    double v_hat_cloaked = 0.0;
    double v_hat_uncloaked = 0.0;
    double attenuation_peak_db = 0.0;      // uncloaked MTI peak over cloaked MTI peak
    double attenuation_at_truth_db = 0.0;  // same, read at the true-Doppler bin
    std::size_t downsample_factor = 1;
};

namespace detail {

inline std::size_t carrier_index(const scene::RadarConfig& radar, double carrier_hz) {
    std::size_t best = 0;
    double best_dist = std::abs(radar.carriers_hz[0] - carrier_hz);
    for (std::size_t i = 1; i < radar.carriers_hz.size(); ++i) {
        const double d = std::abs(radar.carriers_hz[i] - carrier_hz);
        if (d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    return best;
}

inline std::size_t nearest_bin(const dsp::DopplerReport& report, double frequency_hz) {
    std::size_t best = 0;
    double best_dist = std::abs(report.frequency_axis_hz[0] - frequency_hz);
    for (std::size_t i = 1; i < report.frequency_axis_hz.size(); ++i) {
        const double d = std::abs(report.frequency_axis_hz[i] - frequency_hz);
        if (d < best_dist) {
            best = i;
            best_dist = d;
        }
    }
    return best;
}

inline double peak_magnitude(const dsp::DopplerReport& report) {
    double m = 0.0;
    for (const double v : report.magnitude) m = std::max(m, v);
    return m;
}

}  // namespace detail

// Runs the scene through the victim chain twice, with the coatings present
// and stripped, and quantifies concealment: velocity estimates from the raw
// spectra, attenuation figures from the downsampled + MTI spectra.
inline ConcealmentReport evaluate_concealment(const scene::Scene& cloaked_scene,
                                              const CloakPlan& plan,
                                              const ChainSettings& settings = {}) {
    scene::Scene uncloaked_scene = cloaked_scene;
    for (auto& target : uncloaked_scene.targets) target.coating.reset();

    const std::size_t ci = detail::carrier_index(cloaked_scene.radar, plan.carrier_hz);
    const scene::PulseTrain cloaked = scene::simulate(cloaked_scene)[ci];
    const scene::PulseTrain uncloaked = scene::simulate(uncloaked_scene)[ci];
    const double f_c = cloaked.carrier_hz;
    const double c = cloaked_scene.radar.speed_of_light;
    const double t_s = cloaked.pulse_interval_s;

    ConcealmentReport report;
    const std::size_t raw_fft =
        std::max(settings.fft_size, next_power_of_two(cloaked.samples.size()));
    report.cloaked_raw = dsp::doppler_fft(cloaked.samples, raw_fft, settings.window, t_s);
    report.uncloaked_raw = dsp::doppler_fft(uncloaked.samples, raw_fft, settings.window, t_s);
    report.v_hat_cloaked = dsp::estimate_velocity(report.cloaked_raw, f_c, c);
    report.v_hat_uncloaked = dsp::estimate_velocity(report.uncloaked_raw, f_c, c);

    const double doppler_truth = 2.0 * plan.velocity_mps * f_c / c;
    const double expected = settings.expected_doppler_hz.value_or(std::abs(doppler_truth));

    auto chain = [&](const scene::PulseTrain& train) {
        std::vector<std::complex<double>> samples = train.samples;
        double interval = t_s;
        std::size_t factor = 1;
        if (settings.use_downsampling && expected > 0.0) {
            auto ds = dsp::downsample_for_mti(samples, expected, t_s);
            samples = std::move(ds.samples);
            factor = ds.factor;
            interval = t_s * static_cast<double>(factor);
        }
        auto filtered = dsp::mti_two_pulse(samples);
        const std::size_t fft =
            std::max(settings.fft_size, next_power_of_two(filtered.size()));
        dsp::DopplerReport r = dsp::doppler_fft(filtered, fft, settings.window, interval);
        r.mti_applied = true;
        try {
            dsp::estimate_velocity(r, f_c, c);
        } catch (const no_detection&) {
            // an exactly cancelled static return leaves nothing to estimate
        }
        report.downsample_factor = factor;
        return r;
    };
    report.cloaked_mti = chain(cloaked);
    report.uncloaked_mti = chain(uncloaked);

    const double floor = 1e-300;
    const double unc_peak = std::max(detail::peak_magnitude(report.uncloaked_mti), floor);
    const double clk_peak = std::max(detail::peak_magnitude(report.cloaked_mti), floor);
    report.attenuation_peak_db = db20(unc_peak / clk_peak);

    const std::size_t truth_bin = detail::nearest_bin(report.cloaked_mti, doppler_truth);
    const double clk_truth = std::max(report.cloaked_mti.magnitude[truth_bin], floor);
    report.attenuation_at_truth_db = db20(unc_peak / clk_truth);
    report.cloaked_mti.attenuation_at_truth_db = report.attenuation_at_truth_db;
    return report;
}

struct SweepPoint {
    double modulation_hz = 0.0;
    double true_velocity_mps = 0.0;
    double estimated_velocity_mps = 0.0;
};

// Velocity-estimate grid over (true velocity x modulation frequency), each
// cell an independent noiseless-capable run of the scene and the raw FFT
// estimator. Used for the linear-law and invisibility-line studies.
inline std::vector<SweepPoint> velocity_modulation_sweep(
    const scene::RadarConfig& radar, const scene::Target& target_template, double span_rad,
    std::span<const double> velocities, std::span<const double> modulations,
    std::size_t fft_size = 1024, dsp::Window window = dsp::Window::rectangular,
    std::uint64_t seed = 1) {
    radar.validate();
    if (!(span_rad > 0.0)) throw std::domain_error("sweep: phase span must be positive");
    std::vector<SweepPoint> points;
    points.reserve(velocities.size() * modulations.size());
    const double duration =
        static_cast<double>(radar.num_pulses - 1) * radar.pulse_interval_s;
    const double sample_rate = 2.0 / radar.pulse_interval_s;
    for (const double v : velocities) {
        for (const double f_m : modulations) {
            scene::Scene run;
            run.radar = radar;
            run.seed = seed;
            scene::Target target = target_template;
            target.velocity_mps = v;
            scene::Coating coating;
            const double rate = std::max(sample_rate, 20.0 * std::abs(f_m));
            coating.waveform = modulation::ideal_sawtooth(f_m, span_rad, duration + 1e-9, rate);
            coating.amplitude_ripple = false;
            target.coating = coating;
            run.targets.push_back(target);
            const auto trains = scene::simulate(run);
            const std::size_t ci = detail::carrier_index(radar, radar.carriers_hz.front());
            const std::size_t fft =
                std::max(fft_size, next_power_of_two(trains[ci].samples.size()));
            dsp::DopplerReport report =
                dsp::doppler_fft(trains[ci].samples, fft, window, radar.pulse_interval_s);
            SweepPoint point;
            point.modulation_hz = f_m;
            point.true_velocity_mps = v;
            point.estimated_velocity_mps =
                dsp::estimate_velocity(report, trains[ci].carrier_hz, radar.speed_of_light);
            points.push_back(point);
        }
    }
    return points;
}

}  // namespace dopcl::cloak
