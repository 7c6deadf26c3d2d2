#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ews/grid.hpp"

namespace ews
{

enum class Model
{
    Asw,
    AswPol,
    Dft,
    DftPol,
    Custom
};

std::string to_string(Model m);
Model model_from_string(std::string const& s);
//! Model tag after adding the polarization term (ASW -> ASW-P, DFT -> DFT-P).
Model with_polarization(Model m);
bool has_polarization(Model m);

//! Annular square well: -depth on [mean_radius - thickness/2, mean_radius + thickness/2].
struct AswParams
{
    double depth = 0.2599;
    double mean_radius = 6.71;
    double thickness = 2.91;

    double inner() const { return mean_radius - 0.5 * thickness; }
    double outer() const { return mean_radius + 0.5 * thickness; }
    void validate() const;
};

//! Static dipole polarization -alpha / (2 (r^2 + b^2)^2).
struct PolarizationParams
{
    double alpha = 850.0;
    double cutoff = 8.0;

    void validate() const;
};

struct JelliumParams
{
    double mean_radius = 6.699;
    double thickness = 2.411;
    double charge = 240.0;
    //! Constant added on the shell support, hartree.
    double pseudo_potential = 0.0;

    double inner() const { return mean_radius - 0.5 * thickness; }
    double outer() const { return mean_radius + 0.5 * thickness; }
    void validate() const;
};

struct PotentialTable
{
    RadialGrid grid;
    std::vector<double> values;
    Model model = Model::Custom;
    //! Free-form parameter description carried into file headers.
    std::string description;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

// Value a piecewise-constant curve takes at a grid point that lies exactly
// on a discontinuity: the mean of the two one-sided values. Points strictly
// inside take the inside value.
inline constexpr double edge_tolerance = 1e-12;

PotentialTable build_asw(AswParams const& params, RadialGrid const& grid);
PotentialTable build_polarization(PolarizationParams const& params,
                                  RadialGrid const& grid);

//! Potential energy of an electron in the field of charge q spread uniformly
//! over the shell inner <= r <= outer.
PotentialTable shell_coulomb(double charge, double inner, double outer,
                             RadialGrid const& grid);
double shell_coulomb_at(double charge, double inner, double outer, double r);

//! Indicator of [inner, outer] sampled with the edge convention above.
std::vector<double> shell_indicator(double inner, double outer,
                                    RadialGrid const& grid);

//! Jellium background: shell_coulomb plus the pseudo-potential on the shell.
PotentialTable build_jellium(JelliumParams const& params, RadialGrid const& grid);

struct PseudoShell
{
    double value;
    double inner;
    double outer;
};

PotentialTable compose_effective(PotentialTable const& base,
                                 PotentialTable const* pol,
                                 std::optional<PseudoShell> pseudo = std::nullopt);

void write_table(PotentialTable const& table, std::ostream& os);
void write_table(PotentialTable const& table, std::string const& path);
PotentialTable read_table(std::istream& is);
PotentialTable read_table(std::string const& path);

}  // namespace ews
