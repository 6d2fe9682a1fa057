#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dopcl/constants.hpp"
#include "dopcl/csv.hpp"
#include "dopcl/modulation.hpp"
#include "dopcl/numeric.hpp"
#include "dopcl/phase_map.hpp"

namespace dopcl::scene {

// Monostatic SFCW radar, modeled at slow time only: one complex sample per
// pulse per carrier. Range gating and fast time are out of scope; everything
// downstream depends only on the slow-time phase sequence.
struct RadarConfig {
    double band_start_hz = 1.2e9;
    double band_stop_hz = 1.7e9;
    std::vector<double> carriers_hz{1.5e9};
    double pulse_interval_s = 0.05;      // slow-time step T_s
    std::size_t num_pulses = 512;
    std::optional<double> noise_snr_db;  // absent -> noiseless
    double speed_of_light = kSpeedOfLight;

    void validate() const {
        if (!(band_start_hz < band_stop_hz)) throw std::domain_error("radar: empty band");
        if (carriers_hz.empty()) throw std::domain_error("radar: no carriers");
        if (!(pulse_interval_s > 0.0)) throw std::domain_error("radar: T_s must be positive");
        if (num_pulses < 2) throw std::domain_error("radar: need at least two pulses");
        if (!(speed_of_light > 0.0)) throw std::domain_error("radar: invalid c");
    }
};

// Time-modulated coating on a target: the drive waveform plus (optionally)
// the reflection map whose magnitude profile imprints the amplitude ripple.
struct Coating {
    modulation::ModulationWaveform waveform;
    std::optional<PhaseMap> map;
    bool amplitude_ripple = true;
};

// Point scatterer on a radial trajectory. Velocity is positive toward the
// radar (range shrinks), negative away from it; an optional small sinusoidal
// range perturbation reproduces platform sway.
struct Target {
    double range_m = 2.0;
    double velocity_mps = 0.0;
    double reflectivity = 1.0;
    double oscillation_amplitude_m = 0.0;
    double oscillation_frequency_hz = 0.0;
    std::optional<Coating> coating;
};

struct Scene {
    RadarConfig radar;
    std::vector<Target> targets;
    std::vector<std::complex<double>> clutter;  // static complex amplitudes
    std::uint64_t seed = 1;
};

// Slow-time echo train at one carrier, with ground truth riding along.
struct PulseTrain {
    double carrier_hz = 0.0;
    double pulse_interval_s = 0.0;
    std::vector<std::complex<double>> samples;
    std::vector<double> timestamps_s;
    double true_velocity_mps = 0.0;    // first target
    double applied_modulation_hz = 0.0;  // first coated target, 0 if none
};

// Two-way propagation phase of the echo:
//   phi(t) = -4*pi*f_c*r(t)/c,  r(t) = r0 - v*t (+ sway)
// so an approaching target (v > 0) produces a rising phase and a Doppler
// tone at f_d = 2*v*f_c/c.
inline double doppler_phase(const Target& target, double carrier_hz, double t_s,
                            double speed_of_light = kSpeedOfLight) {
    if (!std::isfinite(t_s) || !std::isfinite(carrier_hz))
        throw std::domain_error("doppler_phase: non-finite input");
    double range = target.range_m - target.velocity_mps * t_s;
    if (target.oscillation_amplitude_m != 0.0)
        range += target.oscillation_amplitude_m *
                 std::sin(kTwoPi * target.oscillation_frequency_hz * t_s);
    return -2.0 * kTwoPi * carrier_hz * range / speed_of_light;
}

namespace detail {

// Reflection magnitude for the wrapped coating phase: inverts the phase
// profile of the map row (first crossing) and interpolates the amplitude.
inline double amplitude_for_phase(const PhaseMap& map, std::size_t freq_index, double phase) {
    if (!map.has_amplitude()) return 1.0;
    const std::size_t n = map.capacitance_count();
    double prev = map.phase_at(0, freq_index);
    if (phase <= prev) return map.amplitude_at(0, freq_index);
    for (std::size_t i = 1; i < n; ++i) {
        const double cur = map.phase_at(i, freq_index);
        if (cur >= phase) {
            const double t = (cur == prev) ? 0.0 : (phase - prev) / (cur - prev);
            const double a0 = map.amplitude_at(i - 1, freq_index);
            const double a1 = map.amplitude_at(i, freq_index);
            return a0 + t * (a1 - a0);
        }
        prev = cur;
    }
    return map.amplitude_at(n - 1, freq_index);
}

}  // namespace detail

// Synthesizes the slow-time trains, one per carrier:
//   x_k = sum_targets A * m_k * exp(j(phi_Doppler + phi_Metasurface))
//       + sum_clutter A_c + noise.
// Coated targets add the serrodyne phase of their waveform; m_k samples the
// coating map's reflection magnitude at the wrapped bias position. Noise is
// circular Gaussian at the configured SNR relative to the strongest target,
// with an independent, deterministic stream per carrier.
inline std::vector<PulseTrain> simulate(const Scene& scene) {
    scene.radar.validate();
    const double t_total =
        static_cast<double>(scene.radar.num_pulses - 1) * scene.radar.pulse_interval_s;
    for (const Target& target : scene.targets) {
        if (!target.coating) continue;
        if (target.coating->waveform.phase_span_rad <= 0.0)
            throw std::invalid_argument("simulate: coated target carries an empty waveform");
        if (target.coating->waveform.duration_s() + 1e-9 < t_total)
            throw std::invalid_argument(
                "simulate: coating waveform does not cover the observation window");
    }

    double strongest = 0.0;
    for (const Target& target : scene.targets)
        strongest = std::max(strongest, std::abs(target.reflectivity));

    std::vector<PulseTrain> trains;
    trains.reserve(scene.radar.carriers_hz.size());
    for (std::size_t ci = 0; ci < scene.radar.carriers_hz.size(); ++ci) {
        const double f_c = scene.radar.carriers_hz[ci];
        PulseTrain train;
        train.carrier_hz = f_c;
        train.pulse_interval_s = scene.radar.pulse_interval_s;
        train.samples.resize(scene.radar.num_pulses);
        train.timestamps_s.resize(scene.radar.num_pulses);
        if (!scene.targets.empty()) train.true_velocity_mps = scene.targets[0].velocity_mps;
        for (const Target& target : scene.targets)
            if (target.coating) {
                train.applied_modulation_hz = target.coating->waveform.modulation_frequency_hz;
                break;
            }

        // resolve map rows once per carrier
        std::vector<int> rows(scene.targets.size(), -1);
        for (std::size_t ti = 0; ti < scene.targets.size(); ++ti) {
            const auto& target = scene.targets[ti];
            if (target.coating && target.coating->map && target.coating->amplitude_ripple)
                rows[ti] = static_cast<int>(target.coating->map->frequency_index(f_c));
        }

        std::complex<double> clutter_sum{0.0, 0.0};
        for (const auto& c : scene.clutter) clutter_sum += c;

        for (std::size_t k = 0; k < scene.radar.num_pulses; ++k) {
            const double t = static_cast<double>(k) * scene.radar.pulse_interval_s;
            train.timestamps_s[k] = t;
            std::complex<double> sample = clutter_sum;
            for (std::size_t ti = 0; ti < scene.targets.size(); ++ti) {
                const Target& target = scene.targets[ti];
                double phase = doppler_phase(target, f_c, t, scene.radar.speed_of_light);
                double magnitude = target.reflectivity;
                if (target.coating) {
                    phase += target.coating->waveform.unwrapped_phase_at(t);
                    if (rows[ti] >= 0)
                        magnitude *= detail::amplitude_for_phase(
                            *target.coating->map, static_cast<std::size_t>(rows[ti]),
                            target.coating->waveform.wrapped_phase_at(t));
                }
                sample += magnitude * std::complex<double>(std::cos(phase), std::sin(phase));
            }
            train.samples[k] = sample;
        }

        if (scene.radar.noise_snr_db && strongest > 0.0) {
            std::mt19937_64 rng(mix_seed(scene.seed, ci));
            std::normal_distribution<double> gauss(0.0, 1.0);
            const double noise_power =
                strongest * strongest / std::pow(10.0, *scene.radar.noise_snr_db / 10.0);
            const double sigma = std::sqrt(noise_power / 2.0);
            for (auto& x : train.samples)
                x += std::complex<double>(sigma * gauss(rng), sigma * gauss(rng));
        }
        trains.push_back(std::move(train));
    }
    return trains;
}

inline std::string serialize_pulse_train(const PulseTrain& train) {
    std::ostringstream out;
    out << "k,t_s,re,im\n";
    for (std::size_t k = 0; k < train.samples.size(); ++k)
        out << k << ',' << csv::format_number(train.timestamps_s[k], 12) << ','
            << csv::format_number(train.samples[k].real(), 12) << ','
            << csv::format_number(train.samples[k].imag(), 12) << '\n';
    return out.str();
}

// Sidecar with the annotations a figure reproduction needs.
inline std::string serialize_ground_truth(const PulseTrain& train) {
    std::ostringstream out;
    out << "carrier_hz = " << csv::format_number(train.carrier_hz, 12) << '\n'
        << "pulse_interval_s = " << csv::format_number(train.pulse_interval_s, 12) << '\n'
        << "num_pulses = " << train.samples.size() << '\n'
        << "true_velocity_mps = " << csv::format_number(train.true_velocity_mps, 12) << '\n'
        << "applied_modulation_hz = " << csv::format_number(train.applied_modulation_hz, 12)
        << '\n';
    return out.str();
}

inline void save_pulse_train(const PulseTrain& train, const std::filesystem::path& path) {
    csv::atomic_write_text(path, serialize_pulse_train(train));
    csv::atomic_write_text(path.string() + ".truth.txt", serialize_ground_truth(train));
}

}  // namespace dopcl::scene
