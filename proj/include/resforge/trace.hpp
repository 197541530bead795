#pragma once

#include <complex>
#include <vector>

#include "resforge/types.hpp"

namespace resforge {

/// One measured (or generated) transmission trace: a strictly increasing
/// frequency axis with paired complex samples, plus the source power and
/// line attenuation it was taken at.
struct ComplexTrace {
    std::vector<double> freqs;                 // Hz, strictly increasing
    std::vector<std::complex<double>> samples; // dimensionless
    double power_dbm = 0.0;
    double attenuation_db = 0.0;

    void validate() const {
        if (freqs.size() != samples.size())
            throw InvalidParameter("ComplexTrace: freqs/samples length mismatch");
        if (freqs.size() < 8)
            throw InvalidParameter("ComplexTrace: need at least 8 points");
        for (std::size_t i = 1; i < freqs.size(); ++i)
            if (!(freqs[i] > freqs[i - 1]))
                throw InvalidParameter("ComplexTrace: freqs must be strictly increasing");
    }

    std::size_t size() const { return freqs.size(); }
    double span() const { return freqs.back() - freqs.front(); }
};

/// Internal quality factor versus mean photon number, as extracted from
/// a power scan.
struct PowerScan {
    struct Point {
        double n_ph = 0.0;    // photons, > 0
        double q_i = 0.0;     // dimensionless, > 0
        double q_i_err = 0.0; // 1-sigma on q_i; 0 means unweighted
    };
    std::vector<Point> points;

    void validate() const {
        for (const auto& p : points)
            if (!(p.n_ph > 0.0) || !(p.q_i > 0.0))
                throw InvalidParameter("PowerScan: n_ph and q_i must be > 0");
    }
};

enum class FieldOrientation { in_plane, out_of_plane };

/// Tracked frequency shift and quality factors along one magnetic-field
/// sweep direction.
struct FieldSweepSeries {
    struct Point {
        double b = 0.0;         // T
        double rel_shift = 0.0; // (f(B) - f(0)) / f(0)
        double q_i = 0.0;
        double q_c = 0.0;
    };
    FieldOrientation orientation = FieldOrientation::in_plane;
    std::vector<Point> points;

    void validate() const {
        for (std::size_t i = 1; i < points.size(); ++i)
            if (points[i].b < points[i - 1].b)
                throw InvalidParameter("FieldSweepSeries: field must be non-decreasing");
    }
};

}  // namespace resforge
