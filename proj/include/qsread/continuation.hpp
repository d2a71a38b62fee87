#pragma once

#include <vector>

#include "qsread/freq_grid.hpp"

namespace qsread {

/// Rational closed form in the Matsubara argument z = i w_n: num(z) / den(z),
/// coefficients in ascending powers. Continuation substitutes z -> w + i eta.
struct RationalForm {
    std::vector<cdouble> num;
    std::vector<cdouble> den;

    cdouble eval(cdouble z) const;
};

RationalForm rational_cavity_bare(double omega_d);
RationalForm rational_oscillator_bare(double omega_s);
/// Paper-literal D_RB: 2 w_d / (z^2 - w~_d^2 + i 2 w_d kappa).
RationalForm rational_detector_with_bath(double omega_d, double kappa, double delta_omega_d);

/// Exact substitution i w_n -> omega + i eta in a closed rational form.
cdouble continue_rational(const RationalForm& form, double omega, double eta);

/// Thiele continued-fraction interpolation through the lowest `order` positive
/// Matsubara frequencies of a conjugate-symmetric series.
struct PadeApproximant {
    std::vector<cdouble> points;       // z_j = i w_n of the points actually used
    std::vector<cdouble> point_values; // input values at those points
    std::vector<cdouble> coefficients; // one per used point
    int order = 0;                     // requested order
    double omega_max = 0.0;            // largest interpolated |w_n|, extrapolation bound
};

/// Fit-quality gate: evaluation at every requested interpolation point must
/// reproduce the input within this relative tolerance.
inline constexpr double pade_gate_tolerance = 1e-8;

PadeApproximant pade_fit(const CorrelatorSeries& series, int order);

struct PadeEval {
    cdouble value;
    bool extrapolated = false; // |omega + i eta| beyond the interpolated range
};

/// Continued fraction evaluated at omega + i eta (128-bit accumulation).
PadeEval pade_eval(const PadeApproximant& approx, double omega, double eta);

/// Retarded correlator samples on a real-frequency window.
struct RetardedSeries {
    std::vector<double> omega_points;
    double eta = 0.0;
    std::vector<cdouble> values;
    std::vector<bool> extrapolated;
    std::string label;
};

RetardedSeries continue_series(const PadeApproximant& approx, std::span<const double> omegas,
                               double eta, const std::string& label = "");

/// argmax of |pade_eval| over a uniform scan, for pole localization.
double locate_peak(const PadeApproximant& approx, double omega_lo, double omega_hi,
                   double eta, int scan_points = 8001);

} // namespace qsread
