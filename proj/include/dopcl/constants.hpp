#pragma once

#include <numbers>

namespace dopcl {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Propagation speed used throughout the toolkit. All Doppler arithmetic
// (f_d = 2 v f / c) is pinned to this value.
inline constexpr double kSpeedOfLight = 2.998e8;  // m/s

// Wave impedance of free space, ohms.
inline constexpr double kFreeSpaceImpedance = 376.730313668;

}  // namespace dopcl
