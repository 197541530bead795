#pragma once

#include <numbers>

namespace resforge {

/// CODATA 2018 constants. `h` is stored as 2*pi*hbar so the pair is
/// exactly consistent in floating point.
struct PhysicalConstants {
    double hbar     = 1.054571817e-34;                    // J*s
    double k_B      = 1.380649e-23;                       // J/K
    double e_charge = 1.602176634e-19;                    // C
    double h        = 2.0 * std::numbers::pi * 1.054571817e-34;  // J*s
};

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline const PhysicalConstants& constants() {
    static const PhysicalConstants c{};
    return c;
}

/// BCS weak-coupling gap ratio: gap = 1.764 * k_B * Tc.
inline constexpr double bcs_gap_ratio = 1.764;

}  // namespace resforge
