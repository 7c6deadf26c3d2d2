#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ews/potentials.hpp"

namespace ews
{

struct Orbital
{
    int l = 0;
    int n_r = 0;
    double energy = 0;
    //! Radial function, normalized so that int u^2 dr = 1.
    std::vector<double> u;
    double occupation = 0;
};

//! Bound state of V with angular momentum l and n_r interior nodes, with the
//! eigenvalue in [e_lo, e_hi] (both negative). The table end is treated as a
//! hard wall. Throws StateNotFound when no such state lies in the window.
//! A guess (e.g. from a previous SCF iteration) narrows the initial bracket.
Orbital solve_bound_state(PotentialTable const& potential, int l, int n_r, double e_lo,
                          double e_hi, double guess = std::numeric_limits<double>::quiet_NaN());

//! Number of bound states of V below energy e for angular momentum l.
int count_states_below(PotentialTable const& potential, int l, double e);

//! Lowest value of V + l(l+1)/(2 r^2) on the grid, a lower bound for eigenvalues.
double potential_floor(PotentialTable const& potential, int l);

struct Occupation
{
    int l;
    int n_r;
    double electrons;
};

struct ScfConfig
{
    JelliumParams jellium;
    RadialGrid grid;
    double mixing = 0.3;
    int max_iterations = 500;
    double tolerance = 1e-8;
    //! Empty means Aufbau filling by ascending eigenvalue.
    std::vector<Occupation> occupations;
    //! 7.58 eV.
    double target_ip = 0.2786;
    double ip_tolerance = 1e-4;
    //! Fermi-Dirac width for Aufbau filling, hartree; 0 fills strictly by
    //! ascending eigenvalue.
    double smearing = 3e-3;
    //! Highest l searched for bound states during Aufbau filling.
    int lmax_bound = 30;

    double electrons() const { return jellium.charge; }
    void validate() const;
};

struct ScfState
{
    std::vector<Orbital> orbitals;
    std::vector<double> density;
    double pseudo_potential = 0;
    //! Jellium + pseudo-potential + Hartree + exchange-correlation.
    PotentialTable potential;
    std::vector<double> history;
    bool converged = false;
    int iterations = 0;

    //! Highest eigenvalue among levels holding at least half an electron.
    double homo() const;
    double electron_count() const;
};

//! rho(r) = sum occ u^2 / (4 pi r^2); the r = 0 value is the l = 0 limit.
std::vector<double> density_from_orbitals(std::vector<Orbital> const& orbitals,
                                          RadialGrid const& grid);

//! Electrostatic potential energy of an electron in the electron cloud rho
//! (repulsive, positive).
PotentialTable hartree_potential(std::vector<double> const& density, RadialGrid const& grid);

PotentialTable xc_potential(std::vector<double> const& density, RadialGrid const& grid);
double xc_potential_at(double density);

//! Occupied orbitals of V for n electrons: Aufbau when occupations is empty,
//! with Fermi-Dirac occupations of width smearing (hartree) when positive.
std::vector<Orbital> fill_orbitals(PotentialTable const& potential, double electrons,
                                   std::vector<Occupation> const& occupations, int lmax_bound,
                                   double smearing = 0,
                                   std::vector<Orbital> const* previous = nullptr);

//! Fixed-point Kohn-Sham loop in the bare jellium shell (without the
//! pseudo-potential, which comes from config.jellium). An initial density
//! may be supplied; the default is zero density.
ScfState scf_iterate(PotentialTable const& jellium, ScfConfig const& config,
                     std::vector<double> const* initial_density = nullptr);
ScfState scf_iterate(ScfConfig const& config);

//! Adjusts the pseudo-potential so the HOMO binding energy matches
//! config.target_ip, returning the converged state at the tuned value.
ScfState tune_pseudopotential(ScfConfig const& config);

//! Directory layout: potential.dat, density.dat, orbitals.dat, run.txt.
void write_scf_state(ScfState const& state, std::string const& directory,
                     std::vector<std::string> const& header = {});

}  // namespace ews
