#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dopcl/csv.hpp"
#include "dopcl/errors.hpp"

namespace dopcl {

// Sampled reflection phase shift over (varactor capacitance x frequency).
// Values are stored row-major with one row per capacitance sample, matching
// the CSV layout (header row = frequency axis, first column = capacitance).
// Phase is relative to the first capacitance sample of each frequency
// profile and unwrapped along the capacitance axis, so values[0][j] == 0.
struct PhaseMap {
    std::vector<double> capacitance_axis;  // farads, strictly increasing
    std::vector<double> frequency_axis;    // hertz, strictly increasing
    std::vector<double> values;            // radians, [cap][freq]
    std::vector<double> amplitude;         // optional |reflection|, same layout
    std::vector<std::pair<std::size_t, std::size_t>> flagged;  // (cap, freq) indices

    std::size_t capacitance_count() const { return capacitance_axis.size(); }
    std::size_t frequency_count() const { return frequency_axis.size(); }

    double phase_at(std::size_t cap_index, std::size_t freq_index) const {
        return values[cap_index * frequency_count() + freq_index];
    }
    double& phase_ref(std::size_t cap_index, std::size_t freq_index) {
        return values[cap_index * frequency_count() + freq_index];
    }
    bool has_amplitude() const { return !amplitude.empty(); }
    double amplitude_at(std::size_t cap_index, std::size_t freq_index) const {
        return amplitude[cap_index * frequency_count() + freq_index];
    }

    // Phase-vs-capacitance profile at one frequency sample.
    std::vector<double> phase_profile(std::size_t freq_index) const {
        std::vector<double> out(capacitance_count());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = phase_at(i, freq_index);
        return out;
    }
    std::vector<double> amplitude_profile(std::size_t freq_index) const {
        std::vector<double> out(capacitance_count());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = amplitude_at(i, freq_index);
        return out;
    }

    // Nearest frequency sample; rejects queries farther than half a grid step
    // from any sample so lookups never silently extrapolate.
    std::size_t frequency_index(double f_hz) const {
        if (frequency_axis.empty()) throw std::invalid_argument("PhaseMap: empty frequency axis");
        std::size_t best = 0;
        double best_dist = std::abs(f_hz - frequency_axis[0]);
        for (std::size_t j = 1; j < frequency_axis.size(); ++j) {
            const double d = std::abs(f_hz - frequency_axis[j]);
            if (d < best_dist) {
                best = j;
                best_dist = d;
            }
        }
        double half_step;
        if (frequency_axis.size() == 1) {
            half_step = std::max(1.0, 0.5e-6 * frequency_axis[0]);
        } else if (best == 0) {
            half_step = 0.5 * (frequency_axis[1] - frequency_axis[0]);
        } else if (best + 1 == frequency_axis.size()) {
            half_step = 0.5 * (frequency_axis[best] - frequency_axis[best - 1]);
        } else {
            half_step = 0.5 * std::max(frequency_axis[best] - frequency_axis[best - 1],
                                       frequency_axis[best + 1] - frequency_axis[best]);
        }
        if (best_dist > half_step * (1.0 + 1e-12))
            throw std::invalid_argument("PhaseMap: requested frequency " +
                                        std::to_string(f_hz * 1e-9) +
                                        " GHz is farther than half a grid step from the axis");
        return best;
    }

    // Structural invariants only; semantic properties (knife shape, phase
    // bounds) belong to the generators that promise them.
    void validate() const {
        if (capacitance_axis.empty() || frequency_axis.empty())
            throw std::invalid_argument("PhaseMap: empty axis");
        for (std::size_t i = 1; i < capacitance_axis.size(); ++i)
            if (!(capacitance_axis[i] > capacitance_axis[i - 1]))
                throw std::invalid_argument("PhaseMap: capacitance axis not strictly increasing");
        for (std::size_t j = 1; j < frequency_axis.size(); ++j)
            if (!(frequency_axis[j] > frequency_axis[j - 1]))
                throw std::invalid_argument("PhaseMap: frequency axis not strictly increasing");
        if (values.size() != capacitance_axis.size() * frequency_axis.size())
            throw std::invalid_argument("PhaseMap: value matrix does not match axes");
        if (!amplitude.empty() && amplitude.size() != values.size())
            throw std::invalid_argument("PhaseMap: amplitude matrix does not match axes");
        for (const double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("PhaseMap: non-finite phase value");
        for (const double a : amplitude)
            if (!(a >= 0.0 && a <= 1.0 + 1e-9))
                throw std::invalid_argument("PhaseMap: amplitude outside [0, 1]");
    }
};

// CSV schema: header row carries the frequency axis in hertz (corner label
// "Cv_F\f_Hz"), each following row is one capacitance sample followed by the
// phase shift in radians, printed with 9 significant digits.
inline std::string serialize_phase_map(const PhaseMap& map) {
    map.validate();
    std::ostringstream out;
    out << "Cv_F\\f_Hz";
    for (const double f : map.frequency_axis) out << ',' << csv::format_number(f, 9);
    out << '\n';
    for (std::size_t i = 0; i < map.capacitance_count(); ++i) {
        out << csv::format_number(map.capacitance_axis[i], 9);
        for (std::size_t j = 0; j < map.frequency_count(); ++j)
            out << ',' << csv::format_number(map.phase_at(i, j), 9);
        out << '\n';
    }
    return out.str();
}

inline void save_phase_map(const PhaseMap& map, const std::filesystem::path& path) {
    csv::atomic_write_text(path, serialize_phase_map(map));
}

inline PhaseMap parse_phase_map(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t row = 0;
    PhaseMap map;
    if (!std::getline(in, line)) throw parse_error("empty phase map file", 1, 1);
    ++row;
    const auto header = csv::split_line(line);
    if (header.size() < 2) throw parse_error("header must list at least one frequency", row, 1);
    for (std::size_t j = 1; j < header.size(); ++j)
        map.frequency_axis.push_back(csv::parse_number(header[j], row, j + 1));
    const std::size_t columns = header.size();
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto cells = csv::split_line(line);
        if (cells.size() != columns)
            throw parse_error("expected " + std::to_string(columns) + " cells, got " +
                                  std::to_string(cells.size()),
                              row, cells.size());
        map.capacitance_axis.push_back(csv::parse_number(cells[0], row, 1));
        for (std::size_t j = 1; j < cells.size(); ++j)
            map.values.push_back(csv::parse_number(cells[j], row, j + 1));
    }
    if (map.capacitance_axis.empty()) throw parse_error("phase map has no data rows", row, 1);
    map.validate();
    return map;
}

inline PhaseMap load_phase_map(const std::filesystem::path& path) {
    return parse_phase_map(csv::read_text(path));
}

}  // namespace dopcl
