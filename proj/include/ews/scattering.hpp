#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ews/potentials.hpp"

namespace ews
{

struct ScatterConfig
{
    int lmax = 15;
    //! Matching radii; both at or beyond the end of the potential table.
    double r1 = 28.0;
    double r2 = 28.5;
    std::vector<double> energies = uniform_energies(2000, 0.5);
    //! Bisection refinement inserts midpoints wherever an unwrapped phase
    //! step exceeds this (radians); never above pi/2.
    double max_phase_step = 0.05;
    int max_refine_levels = 10;

    static std::vector<double> uniform_energies(std::size_t n, double e_max);
    void validate(double table_r_max) const;
};

//! Regular solution of the radial equation for one (l, E). The potential is
//! taken as zero beyond the end of its table, so the solution there is a
//! free wave and can be continued to any matching radius.
class ContinuumSolution
{
  public:
    ContinuumSolution(int l, double energy, double spacing, std::vector<double> u,
                      std::size_t table_size, std::vector<std::size_t> node_indices);

    int l() const { return l_; }
    double energy() const { return energy_; }
    double k() const { return k_; }
    double spacing() const { return h_; }
    std::size_t table_size() const { return table_size_; }
    std::vector<double> const& u() const { return u_; }
    double r(std::size_t i) const { return static_cast<double>(i) * h_; }
    double r_end() const { return r(u_.size() - 1); }

    //! Index of the mesh point nearest r, continuing the free solution if needed.
    std::size_t index_at(double r);
    //! Sign changes of u on (0, r_i].
    int nodes_through(std::size_t i) const;
    void extend_to(double r);
    //! Multiply u by a constant (phase extraction must not care).
    void rescale(double s);

  private:
    int l_;
    double energy_;
    double k_;
    double h_;
    std::vector<double> u_;
    std::size_t table_size_;
    std::vector<std::size_t> nodes_;
};

ContinuumSolution numerov_integrate(PotentialTable const& potential, int l, double energy,
                                    double r_end);

struct PhaseResult
{
    //! Reduced to (-pi/2, pi/2].
    double reduced;
    //! Continuous branch, zero for a vanishing potential and advanced by pi
    //! for every bound state (Levinson).
    double absolute;
    double r1;
    double r2;
    bool reselected = false;
};

PhaseResult extract_phase_shift(ContinuumSolution& sol, double r1, double r2);

struct PhaseShiftScan
{
    Model model = Model::Custom;
    int lmax = 0;
    double r1 = 0;
    double r2 = 0;
    double grid_r_max = 0;
    std::size_t grid_points = 0;
    std::vector<double> energies;
    std::vector<double> k;
    //! delta[l][j], unwrapped and pinned at threshold.
    std::vector<std::vector<double>> delta;
    //! Multiple of pi removed from each l when pinning (threshold Levinson count).
    std::vector<int> levinson;

    std::size_t size() const { return energies.size(); }
};

//! Absolute phase shift at a single (l, E). The phase of the free Numerov
//! solution on the same mesh and matching radii is subtracted, which removes
//! the free-wave discretization error (exactly so when V vanishes).
PhaseResult phase_shift(PotentialTable const& potential, int l, double energy, double r1,
                        double r2);

PhaseShiftScan scan(PotentialTable const& potential, ScatterConfig const& config);

//! Phase shifts of one partial wave at arbitrary energies, shifted by the
//! Levinson count a parent scan removed for that wave.
std::vector<double> phase_on_window(PotentialTable const& potential, ScatterConfig const& config,
                                    int l, std::vector<double> const& energies, int levinson);

struct CrossSections
{
    std::vector<double> energies;
    std::vector<double> k;
    std::vector<std::vector<double>> partial;
    std::vector<double> total;
};

CrossSections cross_sections(PhaseShiftScan const& scan);
double partial_cross_section(int l, double k, double delta);

void write_scan(PhaseShiftScan const& scan, std::ostream& os,
                std::vector<std::string> const& header = {});
PhaseShiftScan read_scan(std::istream& is);
void write_cross_sections(CrossSections const& xs, PhaseShiftScan const& scan, std::ostream& os,
                          std::vector<std::string> const& header = {});

}  // namespace ews
