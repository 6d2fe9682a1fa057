#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "dopcl/constants.hpp"

namespace dopcl {

inline std::vector<double> linspace(double first, double last, std::size_t count) {
    if (count == 0) throw std::invalid_argument("linspace: count must be positive");
    if (count == 1) return {first};
    std::vector<double> out(count);
    const double step = (last - first) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) out[i] = first + step * static_cast<double>(i);
    out.back() = last;
    return out;
}

inline std::vector<double> logspace(double first, double last, std::size_t count) {
    if (first <= 0.0 || last <= 0.0)
        throw std::invalid_argument("logspace: endpoints must be positive");
    if (count == 0) throw std::invalid_argument("logspace: count must be positive");
    if (count == 1) return {first};
    std::vector<double> out(count);
    const double lf = std::log10(first);
    const double step = (std::log10(last) - lf) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::pow(10.0, lf + step * static_cast<double>(i));
    out.back() = last;
    return out;
}

// Removes jumps larger than half a period from a sampled phase sequence,
// in place. Period defaults to 2*pi; sawtooth phase uses its span.
inline void unwrap_inplace(std::span<double> phase, double period = kTwoPi) {
    if (phase.size() < 2) return;
    double previous = phase[0];
    for (std::size_t i = 1; i < phase.size(); ++i) {
        const double raw = phase[i];
        double delta = raw - previous;
        delta -= period * std::round(delta / period);
        phase[i] = phase[i - 1] + delta;
        previous = raw;
    }
}

inline std::vector<double> unwrapped(std::span<const double> phase, double period = kTwoPi) {
    std::vector<double> out(phase.begin(), phase.end());
    unwrap_inplace(out, period);
    return out;
}

// Linear interpolation on a sorted abscissa grid; clamps outside the range.
inline double interp_clamped(std::span<const double> x, std::span<const double> y, double xq) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("interp_clamped: mismatched or empty grids");
    if (xq <= x.front()) return y.front();
    if (xq >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), xq);
    const std::size_t hi = static_cast<std::size_t>(it - x.begin());
    const std::size_t lo = hi - 1;
    const double t = (xq - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + t * (y[hi] - y[lo]);
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LineFit least_squares_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("least_squares_line: need at least two samples");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("least_squares_line: degenerate abscissa");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (syy == 0.0) {
        fit.r_squared = 1.0;
    } else {
        double ss_res = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - (fit.slope * x[i] + fit.intercept);
            ss_res += r * r;
        }
        fit.r_squared = 1.0 - ss_res / syy;
    }
    return fit;
}

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline double db20(double ratio) { return 20.0 * std::log10(ratio); }

// splitmix64 step, used to derive independent per-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace dopcl
