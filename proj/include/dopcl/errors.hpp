#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dopcl {

// Malformed text input (CSV / config). Carries the 1-based position that
// triggered the failure so callers can point at the offending cell.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& what, std::size_t row, std::size_t column)
        : std::runtime_error(what + " (row " + std::to_string(row) + ", column " +
                             std::to_string(column) + ")"),
          row_(row),
          column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

// A phase profile never reaches the requested threshold, i.e. the knife edge
// lies outside the sampled map at this frequency.
class edge_error : public std::runtime_error {
public:
    edge_error(const std::string& what, double frequency_hz)
        : std::runtime_error(what + " at " + std::to_string(frequency_hz * 1e-9) + " GHz"),
          frequency_hz_(frequency_hz) {}

    double frequency_hz() const noexcept { return frequency_hz_; }

private:
    double frequency_hz_;
};

// Calibration requires a strictly monotone phase profile; names the first
// capacitance interval that violates monotonicity.
class calibration_error : public std::runtime_error {
public:
    calibration_error(const std::string& what, double cv_low_f, double cv_high_f)
        : std::runtime_error(what + " in capacitance interval [" +
                             std::to_string(cv_low_f * 1e12) + " pF, " +
                             std::to_string(cv_high_f * 1e12) + " pF]"),
          cv_low_f_(cv_low_f),
          cv_high_f_(cv_high_f) {}

    double cv_low_f() const noexcept { return cv_low_f_; }
    double cv_high_f() const noexcept { return cv_high_f_; }

private:
    double cv_low_f_;
    double cv_high_f_;
};

// Spectrum carries no energy, nothing to estimate.
class no_detection : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dopcl
