#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dopcl/config.hpp"
#include "dopcl/constants.hpp"
#include "dopcl/csv.hpp"
#include "dopcl/errors.hpp"
#include "dopcl/numeric.hpp"
#include "dopcl/phase_map.hpp"

namespace dopcl::modulation {

// Junction varactor model C(V) = C_j0 / (1 + V/V_j)^M on a bias range, with
// the capacitance clamped to the datasheet window. The default instance is
// fitted to the 2.6 pF / 0.6 pF endpoints over a 0-30 V bias sweep; the fit
// parameters are configuration, not device truth.
struct VaractorCurve {
    double c_j0_f = 2.6e-12;
    double junction_potential_v = 0.7;
    double grading_exponent = 0.38782366293556325;
    double v_min = 0.0;
    double v_max = 30.0;
    double c_min_f = 0.6e-12;
    double c_max_f = 2.6e-12;

    void validate() const {
        if (!(c_j0_f > 0.0) || !(junction_potential_v > 0.0) || !(grading_exponent > 0.0))
            throw std::domain_error("VaractorCurve: junction parameters must be positive");
        if (!(v_max > v_min)) throw std::domain_error("VaractorCurve: empty voltage range");
        if (!(c_max_f > c_min_f) || !(c_min_f > 0.0))
            throw std::domain_error("VaractorCurve: invalid capacitance clamp");
    }

    // Solves the two-point fit exactly:
    //   M    = ln(C(Vmin)/C(Vmax)) / ln((1+Vmax/Vj)/(1+Vmin/Vj))
    //   Cj0  = C(Vmin) * (1+Vmin/Vj)^M
    static VaractorCurve fit_endpoints(double c_at_vmin_f, double c_at_vmax_f, double v_min,
                                       double v_max, double junction_potential_v = 0.7) {
        if (!(c_at_vmin_f > c_at_vmax_f) || !(c_at_vmax_f > 0.0))
            throw std::domain_error("fit_endpoints: need decreasing positive endpoints");
        if (!(v_max > v_min) || !(v_min >= 0.0))
            throw std::domain_error("fit_endpoints: invalid voltage range");
        VaractorCurve curve;
        curve.junction_potential_v = junction_potential_v;
        curve.v_min = v_min;
        curve.v_max = v_max;
        curve.c_min_f = c_at_vmax_f;
        curve.c_max_f = c_at_vmin_f;
        const double r_lo = 1.0 + v_min / junction_potential_v;
        const double r_hi = 1.0 + v_max / junction_potential_v;
        curve.grading_exponent =
            std::log(c_at_vmin_f / c_at_vmax_f) / std::log(r_hi / r_lo);
        curve.c_j0_f = c_at_vmin_f * std::pow(r_lo, curve.grading_exponent);
        curve.validate();
        return curve;
    }
};

inline double capacitance(const VaractorCurve& curve, double bias_v) {
    curve.validate();
    if (!std::isfinite(bias_v) || bias_v < curve.v_min - 1e-12 || bias_v > curve.v_max + 1e-12)
        throw std::domain_error("varactor bias " + std::to_string(bias_v) +
                                " V outside the supported range");
    const double c = curve.c_j0_f /
                     std::pow(1.0 + bias_v / curve.junction_potential_v, curve.grading_exponent);
    return std::clamp(c, curve.c_min_f, curve.c_max_f);
}

inline double voltage_for_capacitance(const VaractorCurve& curve, double capacitance_f) {
    curve.validate();
    if (!(capacitance_f >= curve.c_min_f - 1e-18 && capacitance_f <= curve.c_max_f + 1e-18))
        throw std::domain_error("capacitance outside the varactor range");
    const double c = std::clamp(capacitance_f, curve.c_min_f, curve.c_max_f);
    const double v =
        curve.junction_potential_v * (std::pow(curve.c_j0_f / c, 1.0 / curve.grading_exponent) - 1.0);
    return std::clamp(v, curve.v_min, curve.v_max);
}

inline VaractorCurve varactor_from_config(const Config& cfg) {
    return VaractorCurve::fit_endpoints(cfg.number_or("varactor.c_at_vmin_f", 2.6e-12),
                                        cfg.number_or("varactor.c_at_vmax_f", 0.6e-12),
                                        cfg.number_or("varactor.v_min", 0.0),
                                        cfg.number_or("varactor.v_max", 30.0),
                                        cfg.number_or("varactor.junction_potential_v", 0.7));
}

// Tabulated inverse of the bias -> phase response at one carrier: for each
// target phase in [0, span] the bias voltage that reaches it. Tables are
// monotone piecewise-linear, so composing with the forward interpolation of
// the same map row reproduces the target to interpolation accuracy.
struct Calibration {
    double carrier_hz = 0.0;
    double span_rad = 0.0;                 // achievable phase span at the carrier
    std::vector<double> phase_rad;         // ascending from 0 to span
    std::vector<double> bias_v;            // descending (phase grows as bias drops)
    std::vector<double> capacitance_f;     // ascending

    double voltage_for_phase(double phase) const {
        if (!std::isfinite(phase)) throw std::domain_error("voltage_for_phase: non-finite phase");
        return interp_clamped(phase_rad, bias_v, phase);
    }
    double capacitance_for_phase(double phase) const {
        return interp_clamped(phase_rad, capacitance_f, phase);
    }
    double phase_for_voltage(double voltage) const {
        // bias descends with index; flip for interpolation
        std::vector<double> v(bias_v.rbegin(), bias_v.rend());
        std::vector<double> p(phase_rad.rbegin(), phase_rad.rend());
        return interp_clamped(v, p, voltage);
    }
};

// Builds the inverse lookup from the map row nearest f_c restricted to the
// varactor's reachable capacitance window. The row must be strictly monotone
// there; the first violating interval is reported otherwise.
inline Calibration calibrate(const PhaseMap& map, const VaractorCurve& curve, double carrier_hz) {
    map.validate();
    curve.validate();
    const std::size_t j = map.frequency_index(carrier_hz);
    const auto profile = map.phase_profile(j);
    const auto& caps = map.capacitance_axis;

    const double lo = std::max(curve.c_min_f, caps.front());
    const double hi = std::min(curve.c_max_f, caps.back());
    if (!(hi > lo))
        throw calibration_error("varactor range does not overlap the map", curve.c_min_f,
                                curve.c_max_f);

    std::vector<double> cv{lo};
    for (std::size_t i = 0; i < caps.size(); ++i)
        if (caps[i] > lo && caps[i] < hi) cv.push_back(caps[i]);
    cv.push_back(hi);

    Calibration cal;
    cal.carrier_hz = map.frequency_axis[j];
    cal.capacitance_f = cv;
    cal.phase_rad.resize(cv.size());
    cal.bias_v.resize(cv.size());
    for (std::size_t i = 0; i < cv.size(); ++i) {
        cal.phase_rad[i] = interp_clamped(caps, profile, cv[i]);
        cal.bias_v[i] = voltage_for_capacitance(curve, cv[i]);
    }
    const double reference = cal.phase_rad.front();
    for (double& p : cal.phase_rad) p -= reference;
    for (std::size_t i = 1; i < cv.size(); ++i) {
        if (!(cal.phase_rad[i] > cal.phase_rad[i - 1]))
            throw calibration_error("phase profile not strictly monotone", cv[i - 1], cv[i]);
    }
    cal.span_rad = cal.phase_rad.back();
    return cal;
}

// Periodic bias drive and the phase trajectory it is meant to imprint. The
// sampled `induced_phase` is the hardware view: a sawtooth that ramps over
// `phase_span` with slope f_m * span and an instantaneous (single-sample)
// flyback. `unwrapped_phase_at` is the serrodyne intent, the phase
// accumulated across flybacks, which is what the reflected carrier acquires.
struct ModulationWaveform {
    std::vector<double> sample_times_s;
    std::vector<double> bias_voltage_v;
    std::vector<double> induced_phase_rad;
    double modulation_frequency_hz = 0.0;  // signed
    double phase_span_rad = 0.0;
    bool doppler_ambiguity_warning = false;

    double wrapped_phase_at(double t_s) const {
        if (modulation_frequency_hz == 0.0) return 0.0;
        double x = std::fmod(modulation_frequency_hz * phase_span_rad * t_s, phase_span_rad);
        if (x < 0.0) x += phase_span_rad;
        return x;
    }
    double unwrapped_phase_at(double t_s) const {
        return modulation_frequency_hz * phase_span_rad * t_s;
    }
    double duration_s() const { return sample_times_s.empty() ? 0.0 : sample_times_s.back(); }
};

namespace detail {
inline void check_waveform_args(double modulation_hz, double duration_s, double sample_rate_hz) {
    if (!std::isfinite(modulation_hz))
        throw std::domain_error("waveform: modulation frequency must be finite");
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
        throw std::domain_error("waveform: sample rate must be positive");
    if (!(duration_s > 0.0) || !std::isfinite(duration_s))
        throw std::domain_error("waveform: duration must be positive");
    if (sample_rate_hz < 20.0 * std::abs(modulation_hz))
        throw std::domain_error("waveform: sample rate must be at least 20x |f_m|");
}
}  // namespace detail

// Sawtooth without a bias table; the voltage channel is left at zero. Used
// for idealized coatings and for planning sweeps.
inline ModulationWaveform ideal_sawtooth(double modulation_hz, double span_rad, double duration_s,
                                         double sample_rate_hz,
                                         double max_unambiguous_doppler_hz =
                                             std::numeric_limits<double>::infinity()) {
    detail::check_waveform_args(modulation_hz, duration_s, sample_rate_hz);
    if (!(span_rad > 0.0)) throw std::domain_error("waveform: phase span must be positive");
    ModulationWaveform wf;
    wf.modulation_frequency_hz = modulation_hz;
    wf.phase_span_rad = span_rad;
    wf.doppler_ambiguity_warning =
        std::abs(modulation_hz) * span_rad / kTwoPi > max_unambiguous_doppler_hz;
    const std::size_t count = static_cast<std::size_t>(std::floor(duration_s * sample_rate_hz)) + 1;
    wf.sample_times_s.resize(count);
    wf.induced_phase_rad.resize(count);
    wf.bias_voltage_v.assign(count, 0.0);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) / sample_rate_hz;
        wf.sample_times_s[i] = t;
        wf.induced_phase_rad[i] = wf.wrapped_phase_at(t);
    }
    return wf;
}

// Calibrated drive: the sawtooth phase ramp mapped through the inverse
// lookup into a bias-voltage time series.
inline ModulationWaveform waveform(const Calibration& calibration, double modulation_hz,
                                   double duration_s, double sample_rate_hz,
                                   double max_unambiguous_doppler_hz =
                                       std::numeric_limits<double>::infinity()) {
    if (!(calibration.span_rad > 0.0))
        throw std::domain_error("waveform: calibration has an empty phase span");
    ModulationWaveform wf = ideal_sawtooth(modulation_hz, calibration.span_rad, duration_s,
                                           sample_rate_hz, max_unambiguous_doppler_hz);
    for (std::size_t i = 0; i < wf.sample_times_s.size(); ++i)
        wf.bias_voltage_v[i] = calibration.voltage_for_phase(wf.induced_phase_rad[i]);
    return wf;
}

inline std::string serialize_waveform(const ModulationWaveform& wf) {
    std::ostringstream out;
    out << "t_s,V_volts,phase_rad\n";
    for (std::size_t i = 0; i < wf.sample_times_s.size(); ++i)
        out << csv::format_number(wf.sample_times_s[i], 12) << ','
            << csv::format_number(wf.bias_voltage_v[i], 12) << ','
            << csv::format_number(wf.induced_phase_rad[i], 12) << '\n';
    return out.str();
}

inline void save_waveform(const ModulationWaveform& wf, const std::filesystem::path& path) {
    csv::atomic_write_text(path, serialize_waveform(wf));
}

}  // namespace dopcl::modulation
