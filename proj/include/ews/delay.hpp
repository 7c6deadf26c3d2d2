#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ews/scattering.hpp"

namespace ews
{

//! One atomic unit of time in attoseconds.
inline constexpr double attoseconds_per_au = 24.188843265;

struct TimeDelayCurve
{
    std::vector<double> energies;
    //! tau[l][j] in attoseconds.
    std::vector<std::vector<double>> tau;
    //! |tau(h) - tau(2h)| per point, attoseconds; 0 where the wider stencil
    //! does not fit.
    std::vector<std::vector<double>> step_error;
    //! Filled by average_delay.
    std::vector<double> average;
    std::vector<std::vector<double>> weights;
    //! Energies below which the l = 0 delay is still dominated by the
    //! threshold divergence (tau_0 < 0 and growing in magnitude toward E = 0).
    double divergent_below = 0;
};

//! Three-point Lagrange derivative of samples y(x) on a non-uniform grid:
//! central in the interior, one-sided at the ends.
std::vector<double> lagrange_derivative(std::vector<double> const& x,
                                        std::vector<double> const& y);

//! tau_l = 2 d(delta_l)/dE, converted to attoseconds.
TimeDelayCurve ews_delay(PhaseShiftScan const& scan);

//! Cross-section weighted average; fills curve.average and curve.weights.
void average_delay(TimeDelayCurve& curve, CrossSections const& xs);

struct PowerLawFit
{
    double exponent;
    double prefactor;
    //! RMS residual of the log-log fit.
    double residual;
};

//! Least-squares fit of log|y| = log(prefactor) + exponent * log(E) over
//! energies inside [e_lo, e_hi]. Rejects windows where y changes sign.
PowerLawFit threshold_fit(std::vector<double> const& energies, std::vector<double> const& y,
                          double e_lo, double e_hi);

void write_delay(TimeDelayCurve const& curve, Model model, std::ostream& os,
                 std::vector<std::string> const& header = {});

}  // namespace ews
