#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dopcl/constants.hpp"
#include "dopcl/numeric.hpp"
#include "dopcl/phase_map.hpp"

namespace dopcl::circuit {

// Lumped one-port model of a varactor-loaded dipole: series R and L with the
// dipole capacitance C in the gap, driven by a unit voltage source.
struct CircuitParams {
    double resistance_ohm = 50.0;
    double inductance_h = 0.1e-6;
    double capacitance_f = 0.1e-12;

    void validate() const {
        if (!(resistance_ohm > 0.0) || !std::isfinite(resistance_ohm) ||
            !(inductance_h > 0.0) || !std::isfinite(inductance_h) ||
            !(capacitance_f > 0.0) || !std::isfinite(capacitance_f))
            throw std::domain_error("CircuitParams: R, L, C must be positive and finite");
    }

    // Resonance of the unloaded dipole, 1 / (2*pi*sqrt(L*C)).
    double resonance_hz() const {
        return 1.0 / (kTwoPi * std::sqrt(inductance_h * capacitance_f));
    }
};

namespace detail {
inline void check_drive(const CircuitParams& params, double cv_f, double f_hz) {
    params.validate();
    if (!std::isfinite(cv_f) || cv_f < 0.0)
        throw std::domain_error("varactor capacitance must be finite and non-negative");
    if (!std::isfinite(f_hz) || f_hz <= 0.0)
        throw std::domain_error("frequency must be finite and positive");
}
}  // namespace detail

// Current through the loaded dipole per unit drive voltage,
//   i = j*w*(C+Cv) / (1 + j*w*R*(C+Cv) - w^2*L*(C+Cv)),  w = 2*pi*f.
inline std::complex<double> dipole_current(const CircuitParams& params, double cv_f, double f_hz) {
    detail::check_drive(params, cv_f, f_hz);
    const double w = kTwoPi * f_hz;
    const double c_total = params.capacitance_f + cv_f;
    const std::complex<double> numerator(0.0, w * c_total);
    const std::complex<double> denominator(1.0 - w * w * params.inductance_h * c_total,
                                           w * params.resistance_ohm * c_total);
    return numerator / denominator;
}

// Four-quadrant phase of the dipole current. This is the reference the rest
// of the toolkit builds on; the two-quadrant arctangent view below is kept as
// a derived quantity because its branch cuts corrupt unwrapped differences.
inline double current_phase(const CircuitParams& params, double cv_f, double f_hz) {
    return std::arg(dipole_current(params, cv_f, f_hz));
}

// Two-quadrant arctangent form, arctan((w^2*L*C' - 1) / (w*R*C')). For the
// physical parameter range it equals the negated four-quadrant phase; the
// unit tests pin that relation.
inline double current_phase_arctan(const CircuitParams& params, double cv_f, double f_hz) {
    detail::check_drive(params, cv_f, f_hz);
    const double w = kTwoPi * f_hz;
    const double c_total = params.capacitance_f + cv_f;
    return std::atan((w * w * params.inductance_h * c_total - 1.0) /
                     (w * params.resistance_ohm * c_total));
}

// Scattered-phase change when the varactor is switched from 0 to cv_f,
// unwrapped onto [0, pi). Closed form: the tangent numerator w*R*Cv is
// non-negative, so the two-argument arctangent lands on the correct branch
// directly and phase_shift(0, f) == 0 exactly.
inline double phase_shift(const CircuitParams& params, double cv_f, double f_hz) {
    detail::check_drive(params, cv_f, f_hz);
    const double w = kTwoPi * f_hz;
    const double w2 = w * w;
    const double R = params.resistance_ohm;
    const double L = params.inductance_h;
    const double C = params.capacitance_f;
    const double numerator = R * cv_f * w;
    const double denominator = 1.0 +
                               (R * R * C * (C + cv_f) - L * (2.0 * C + cv_f)) * w2 +
                               L * L * C * (C + cv_f) * w2 * w2;
    return std::atan2(numerator, denominator);
}

// Capacitance that, added in parallel with the varactor, moves the knife edge
// so the pi/4 threshold sits at Cv = 0. With a = w*R*C and b = w^2*L*C:
//   C_w = C * ((1-b)^2 + a^2) / (a + b - a^2 - b^2).
// Above the frequency where the denominator changes sign the threshold is
// unreachable and no value exists.
inline std::optional<double> rectifying_capacitance(const CircuitParams& params, double f_hz) {
    params.validate();
    if (!std::isfinite(f_hz) || f_hz <= 0.0)
        throw std::domain_error("frequency must be finite and positive");
    const double w = kTwoPi * f_hz;
    const double a = w * params.resistance_ohm * params.capacitance_f;
    const double b = w * w * params.inductance_h * params.capacitance_f;
    const double numerator = (1.0 - b) * (1.0 - b) + a * a;
    const double denominator = a + b - a * a - b * b;
    if (!(denominator > 0.0)) return std::nullopt;
    const double value = params.capacitance_f * numerator / denominator;
    if (!(value > 0.0) || !std::isfinite(value)) return std::nullopt;
    return value;
}

// Default sampling used by the CLI: the reference point Cv = 0 followed by a
// log-spaced sweep of 0.01..10 pF, and the 1.2-1.7 GHz band.
inline std::vector<double> default_capacitance_grid() {
    std::vector<double> grid{0.0};
    const auto swept = logspace(0.01e-12, 10e-12, 200);
    grid.insert(grid.end(), swept.begin(), swept.end());
    return grid;
}

inline std::vector<double> default_frequency_grid() { return linspace(1.2e9, 1.7e9, 101); }

// Phase-shift map over a (capacitance x frequency) grid. With the default
// grids this reproduces the knife shape: a step-like 0 -> pi transition along
// capacitance whose edge migrates with frequency.
inline PhaseMap knife_map(const CircuitParams& params, std::span<const double> cap_grid,
                          std::span<const double> freq_grid) {
    if (cap_grid.empty() || freq_grid.empty())
        throw std::invalid_argument("knife_map: grids must be non-empty");
    PhaseMap map;
    map.capacitance_axis.assign(cap_grid.begin(), cap_grid.end());
    map.frequency_axis.assign(freq_grid.begin(), freq_grid.end());
    map.values.resize(cap_grid.size() * freq_grid.size());
    for (std::size_t i = 0; i < cap_grid.size(); ++i)
        for (std::size_t j = 0; j < freq_grid.size(); ++j)
            map.phase_ref(i, j) = phase_shift(params, cap_grid[i], freq_grid[j]);
    // Reference the first sample so maps built from grids that do not start
    // at Cv = 0 still carry a zero reference column.
    if (cap_grid[0] != 0.0) {
        for (std::size_t j = 0; j < freq_grid.size(); ++j) {
            const double reference = map.phase_at(0, j);
            for (std::size_t i = 0; i < cap_grid.size(); ++i) map.phase_ref(i, j) -= reference;
        }
    }
    map.validate();
    return map;
}

}  // namespace dopcl::circuit
