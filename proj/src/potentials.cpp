#include "ews/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "ews/errors.hpp"

namespace ews
{

using std::numbers::pi;

std::string to_string(Model m)
{
    switch (m)
    {
    case Model::Asw: return "ASW";
    case Model::AswPol: return "ASW-P";
    case Model::Dft: return "DFT";
    case Model::DftPol: return "DFT-P";
    case Model::Custom: return "custom";
    }
    return "custom";
}

Model model_from_string(std::string const& s)
{
    if (s == "ASW" || s == "asw")
        return Model::Asw;
    if (s == "ASW-P" || s == "asw-p")
        return Model::AswPol;
    if (s == "DFT" || s == "dft")
        return Model::Dft;
    if (s == "DFT-P" || s == "dft-p")
        return Model::DftPol;
    if (s == "custom")
        return Model::Custom;
    throw ConfigError("unknown model '" + s + "'");
}

Model with_polarization(Model m)
{
    switch (m)
    {
    case Model::Asw: return Model::AswPol;
    case Model::Dft: return Model::DftPol;
    default: return m;
    }
}

bool has_polarization(Model m)
{
    return m == Model::AswPol || m == Model::DftPol;
}

void AswParams::validate() const
{
    if (!(depth > 0))
        throw ConfigError("ASW depth must be positive");
    if (!(thickness > 0))
        throw ConfigError("ASW thickness must be positive");
    if (!(inner() > 0))
        throw ConfigError("ASW inner radius r_c - delta/2 must be positive");
}

void PolarizationParams::validate() const
{
    if (!(alpha >= 0))
        throw ConfigError("polarizability must be non-negative");
    if (!(cutoff > 0))
        throw ConfigError("polarization cutoff must be positive");
}

void JelliumParams::validate() const
{
    if (!(thickness > 0) || !(inner() > 0))
        throw ConfigError("jellium shell needs thickness > 0 and R - delta/2 > 0");
    if (!(charge >= 0))
        throw ConfigError("jellium charge must be non-negative");
}

namespace
{

std::string fmt_param(char const* name, double v)
{
    std::ostringstream os;
    os << name << '=' << std::setprecision(10) << v;
    return os.str();
}

}  // namespace

std::vector<double> shell_indicator(double inner, double outer, RadialGrid const& grid)
{
    // Fraction of the cell [r - h/2, r + h/2] inside the shell.
    std::vector<double> out(grid.size(), 0.0);
    double h = grid.spacing();
    double tol = edge_tolerance * std::max(1.0, outer);
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        double r = grid.r(i);
        if (std::abs(r - inner) <= tol || std::abs(r - outer) <= tol)
            out[i] = 0.5;
        else if (r - h / 2 >= inner && r + h / 2 <= outer)
            out[i] = 1.0;
        else
            out[i] = std::clamp((std::min(r + h / 2, outer) - std::max(r - h / 2, inner)) / h, 0.0, 1.0);
    }
    return out;
}

PotentialTable build_asw(AswParams const& params, RadialGrid const& grid)
{
    params.validate();
    auto ind = shell_indicator(params.inner(), params.outer(), grid);
    std::size_t inside = 0;
    for (double w : ind)
        inside += (w == 1.0);
    if (inside < 20)
        throw ConfigError("grid too coarse: fewer than 20 points inside the ASW shell");

    PotentialTable t{grid, std::vector<double>(grid.size()), Model::Asw, {}};
    for (std::size_t i = 0; i < grid.size(); ++i)
        t.values[i] = -params.depth * ind[i];
    t.description = fmt_param("U", params.depth) + ' ' + fmt_param("r_c", params.mean_radius)
                    + ' ' + fmt_param("delta", params.thickness);
    return t;
}

PotentialTable build_polarization(PolarizationParams const& params, RadialGrid const& grid)
{
    params.validate();
    PotentialTable t{grid, std::vector<double>(grid.size()), Model::Custom, {}};
    double b2 = params.cutoff * params.cutoff;
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        double s = grid.r(i) * grid.r(i) + b2;
        t.values[i] = -params.alpha / (2 * s * s);
    }
    t.description = fmt_param("alpha", params.alpha) + ' ' + fmt_param("b", params.cutoff);
    return t;
}

double shell_coulomb_at(double charge, double a, double b, double r)
{
    // Solution of Poisson's equation for a uniform shell, times the electron charge.
    double rho = charge / (4.0 * pi / 3.0 * (b * b * b - a * a * a));
    double phi;
    if (r <= a)
        phi = 2 * pi * rho * (b * b - a * a);
    else if (r < b)
        phi = 4 * pi * rho / 3.0 * (r * r * r - a * a * a) / r + 2 * pi * rho * (b * b - r * r);
    else
        phi = charge / r;
    return -phi;
}

PotentialTable shell_coulomb(double charge, double inner, double outer, RadialGrid const& grid)
{
    if (!(inner > 0) || !(outer > inner))
        throw ConfigError("shell_coulomb: need 0 < a < b");
    if (!(charge > 0))
        throw ConfigError("shell_coulomb: charge must be positive");
    PotentialTable t{grid, std::vector<double>(grid.size()), Model::Custom, {}};
    for (std::size_t i = 0; i < grid.size(); ++i)
        t.values[i] = shell_coulomb_at(charge, inner, outer, grid.r(i));
    t.description = fmt_param("Q", charge) + ' ' + fmt_param("a", inner) + ' '
                    + fmt_param("b", outer);
    return t;
}

PotentialTable build_jellium(JelliumParams const& params, RadialGrid const& grid)
{
    params.validate();
    PotentialTable t{grid, std::vector<double>(grid.size(), 0.0), Model::Custom, {}};
    if (params.charge > 0)
        t = shell_coulomb(params.charge, params.inner(), params.outer(), grid);
    if (params.pseudo_potential != 0)
    {
        auto ind = shell_indicator(params.inner(), params.outer(), grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            t.values[i] += params.pseudo_potential * ind[i];
    }
    t.model = Model::Custom;
    t.description = "jellium " + fmt_param("R", params.mean_radius) + ' '
                    + fmt_param("delta", params.thickness) + ' ' + fmt_param("Q", params.charge)
                    + ' ' + fmt_param("V0", params.pseudo_potential);
    return t;
}

PotentialTable compose_effective(PotentialTable const& base, PotentialTable const* pol,
                                 std::optional<PseudoShell> pseudo)
{
    PotentialTable out = base;
    if (pol)
    {
        if (!(pol->grid == base.grid) || pol->size() != base.size())
            throw ConfigError("compose_effective: grid mismatch");
        for (std::size_t i = 0; i < out.size(); ++i)
            out.values[i] += pol->values[i];
        out.model = with_polarization(base.model);
        out.description += " + pol(" + pol->description + ")";
    }
    if (pseudo)
    {
        auto ind = shell_indicator(pseudo->inner, pseudo->outer, base.grid);
        for (std::size_t i = 0; i < out.size(); ++i)
            out.values[i] += pseudo->value * ind[i];
        out.description += " + " + fmt_param("V0", pseudo->value);
    }
    return out;
}

void write_table(PotentialTable const& table, std::ostream& os)
{
    os << "# model: " << to_string(table.model) << '\n';
    os << "# params: " << table.description << '\n';
    os << "# grid: r_max=" << std::setprecision(17) << table.grid.r_max()
       << " n=" << table.grid.size() << '\n';
    os << "# columns: r V (atomic units)\n";
    os << std::scientific << std::setprecision(17);
    for (std::size_t i = 0; i < table.size(); ++i)
        os << table.grid.r(i) << ' ' << table.values[i] << '\n';
}

void write_table(PotentialTable const& table, std::string const& path)
{
    std::ofstream os(path);
    if (!os)
        throw ConfigError("cannot write " + path);
    write_table(table, os);
}

PotentialTable read_table(std::istream& is)
{
    std::vector<double> r, v;
    Model model = Model::Custom;
    std::string description;
    std::string line;
    while (std::getline(is, line))
    {
        if (line.empty())
            continue;
        if (line[0] == '#')
        {
            if (line.rfind("# model: ", 0) == 0)
            {
                try
                {
                    model = model_from_string(line.substr(9));
                }
                catch (ConfigError const&)
                {
                    model = Model::Custom;
                }
            }
            else if (line.rfind("# params: ", 0) == 0)
                description = line.substr(10);
            continue;
        }
        std::istringstream ls(line);
        double a, b;
        if (!(ls >> a >> b))
            throw ConfigError("potential table: malformed line '" + line + "'");
        r.push_back(a);
        v.push_back(b);
    }
    if (r.size() < 3)
        throw ConfigError("potential table: need at least 3 points");
    if (std::abs(r.front()) > 1e-12)
        throw ConfigError("potential table: first point must be r = 0");
    RadialGrid grid(r.back(), r.size());
    for (std::size_t i = 0; i < r.size(); ++i)
    {
        if (std::abs(r[i] - grid.r(i)) > 1e-9 * std::max(1.0, grid.r_max()))
            throw ConfigError("potential table: grid must be uniform");
        if (!std::isfinite(v[i]))
            throw ConfigError("potential table: non-finite value");
    }
    return PotentialTable{grid, std::move(v), model, description};
}

PotentialTable read_table(std::string const& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot read potential file " + path);
    return read_table(is);
}

}  // namespace ews
