#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ews/delay.hpp"
#include "ews/scattering.hpp"

namespace ews
{

struct FanoParams
{
    double e_r = 0;
    double q = 0;
    //! Gamma / 2, hartree.
    double half_width = 0;
    double sigma0 = 0;
};

//! sigma0 (q + eps)^2 / (1 + eps^2), eps = (E - E_r) / (Gamma/2).
double fano_eval(FanoParams const& p, double energy);

//! Partials with respect to (E_r, q, Gamma/2, sigma0).
std::array<double, 4> fano_gradient(FanoParams const& p, double energy);

struct ResonanceCandidate
{
    int l = 0;
    //! Energy of the tau_l peak.
    double e_r = 0;
    //! FWHM of the tau_l peak.
    double width = 0;
    double tau_peak = 0;
    //! Largest rise of delta_l over a span below DetectConfig::max_span.
    double phase_rise = 0;
    double window_lo = 0;
    double window_hi = 0;
};

struct DetectConfig
{
    double min_phase_rise = 0.7;
    double max_span = 0.05;
    double peak_over_median = 5.0;
    //! Half width of the region whose tau_l median is the local background.
    double background_half_width = 0.25;
    //! Fit window is E_r +/- window_factor * Gamma/2 estimate.
    double window_factor = 8.0;
};

std::vector<ResonanceCandidate> detect(PhaseShiftScan const& scan, TimeDelayCurve const& delay,
                                       DetectConfig const& config = {});

struct FitOptions
{
    int max_iterations = 200;
    double step_tolerance = 1e-8;
    //! A mirror fit is attempted when |q| exceeds this.
    double mirror_q = 10.0;
};

struct FanoFit
{
    int l = 0;
    FanoParams params;
    FanoParams initial;
    //! RMS over the window, bohr^2.
    double residual = 0;
    double initial_residual = 0;
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
    bool converged = false;
    int iterations = 0;
    double window_lo = 0;
    double window_hi = 0;
    std::size_t points = 0;
    //! Fit started from the opposite sign of q, reported when |q| is large.
    std::optional<FanoParams> mirror;
    double mirror_residual = 0;
};

//! Damped Gauss-Newton fit of the Fano profile to (energies, sigma).
FanoFit fano_fit(std::vector<double> const& energies, std::vector<double> const& sigma,
                 FanoParams const& guess, FitOptions const& options = {});

//! Starting values from the window data and the delay-peak estimates.
FanoParams initial_guess(std::vector<double> const& energies, std::vector<double> const& sigma,
                         ResonanceCandidate const& candidate);

//! Fit the partial cross-section sigma_l over the candidate window. Needs at
//! least 50 points inside the window.
FanoFit fano_fit(CrossSections const& xs, ResonanceCandidate const& candidate,
                 FitOptions const& options = {});

//! Fit on a dense uniform grid across the candidate window, solving the
//! scattering problem afresh at each energy.
FanoFit fit_resonance(PotentialTable const& potential, ScatterConfig const& config,
                      PhaseShiftScan const& scan, ResonanceCandidate const& candidate,
                      std::size_t points = 201, FitOptions const& options = {});

void write_fit_report(std::vector<FanoFit> const& fits, Model model, std::ostream& os,
                      std::vector<std::string> const& header = {});

}  // namespace ews
