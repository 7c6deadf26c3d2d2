#include "ews/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ews/bessel.hpp"
#include "ews/errors.hpp"
#include "ews/numerov.hpp"

namespace ews
{

using std::numbers::pi;

namespace numerov
{

std::vector<double> kernel(std::span<double const> potential, int l, double energy, double h,
                           std::size_t n)
{
    std::vector<double> f(n, 0.0);
    double ll = static_cast<double>(l) * (l + 1);
    for (std::size_t i = 1; i < n; ++i)
    {
        double r = static_cast<double>(i) * h;
        double v = i < potential.size() ? potential[i] : 0.0;
        f[i] = 2.0 * (v - energy) + ll / (r * r);
    }
    return f;
}

}  // namespace numerov

std::vector<double> ScatterConfig::uniform_energies(std::size_t n, double e_max)
{
    std::vector<double> e(n);
    for (std::size_t j = 0; j < n; ++j)
        e[j] = e_max * static_cast<double>(j + 1) / static_cast<double>(n);
    return e;
}

void ScatterConfig::validate(double table_r_max) const
{
    if (lmax < 0)
        throw ConfigError("lmax must be non-negative");
    if (!(r2 > r1) || r1 < table_r_max - 1e-9)
        throw ConfigError("matching radii must satisfy r2 > r1 >= r_max");
    if (energies.empty())
        throw ConfigError("energy list is empty");
    for (double e : energies)
        if (!(e > 0))
            throw ConfigError("scattering energies must be positive");
    if (!(max_phase_step > 0) || max_phase_step > pi / 2)
        throw ConfigError("max_phase_step must lie in (0, pi/2]");
    if (max_refine_levels < 0)
        throw ConfigError("max_refine_levels must be non-negative");
}

// ---------------------------------------------------------------------------

ContinuumSolution::ContinuumSolution(int l, double energy, double spacing, std::vector<double> u,
                                     std::size_t table_size, std::vector<std::size_t> node_indices)
    : l_(l), energy_(energy), k_(std::sqrt(2.0 * energy)), h_(spacing), u_(std::move(u)),
      table_size_(table_size), nodes_(std::move(node_indices))
{
}

int ContinuumSolution::nodes_through(std::size_t i) const
{
    return static_cast<int>(std::upper_bound(nodes_.begin(), nodes_.end(), i) - nodes_.begin());
}

void ContinuumSolution::rescale(double s)
{
    for (double& v : u_)
        v *= s;
}

void ContinuumSolution::extend_to(double r)
{
    auto target = static_cast<std::size_t>(std::ceil(r / h_ - 1e-9)) + 1;
    if (target <= u_.size())
        return;
    double c = h_ * h_ / 12.0;
    double ll = static_cast<double>(l_) * (l_ + 1);
    auto f_at = [&](std::size_t i) {
        double ri = static_cast<double>(i) * h_;
        return -2.0 * energy_ + ll / (ri * ri);
    };
    std::size_t n = u_.size();
    u_.resize(target);
    for (std::size_t i = n - 1; i + 1 < target; ++i)
    {
        u_[i + 1] = numerov::step(u_[i - 1], u_[i], f_at(i - 1), f_at(i), f_at(i + 1), c);
        if ((u_[i + 1] > 0) != (u_[i] > 0) && u_[i + 1] != 0 && u_[i] != 0)
            nodes_.push_back(i + 1);
    }
}

std::size_t ContinuumSolution::index_at(double r)
{
    extend_to(r);
    return static_cast<std::size_t>(std::llround(r / h_));
}

ContinuumSolution numerov_integrate(PotentialTable const& potential, int l, double energy,
                                    double r_end)
{
    if (!(energy > 0))
        throw ConfigError("numerov_integrate: energy must be positive");
    if (l < 0)
        throw ConfigError("numerov_integrate: negative l");
    double h = potential.grid.spacing();
    std::size_t table = potential.size();
    // At least two points past the table so extend_to only sees the free region.
    std::size_t n =
        std::max(table + 2, static_cast<std::size_t>(std::ceil(r_end / h - 1e-9)) + 1);
    auto f = numerov::kernel(potential.values, l, energy, h, n);
    double c = h * h / 12.0;

    std::vector<double> u(n, 0.0);
    std::vector<std::size_t> nodes;
    std::size_t s = std::min(numerov::start_index(l), n - 2);
    for (std::size_t i = 1; i <= s; ++i)
    {
        double v = i < table ? potential.values[i] : 0.0;
        u[i] = numerov::regular_series(l, static_cast<double>(i) * h, v - energy);
    }
    for (std::size_t i = s; i + 1 < n; ++i)
    {
        u[i + 1] = numerov::step(u[i - 1], u[i], f[i - 1], f[i], f[i + 1], c);
        if (std::abs(u[i + 1]) > 1e200)
        {
            for (std::size_t m = 0; m <= i + 1; ++m)
                u[m] *= 1e-200;
        }
        if (!std::isfinite(u[i + 1]))
        {
            std::ostringstream os;
            os << "Numerov integration failed for l=" << l << " E=" << energy;
            throw NumericalError(os.str());
        }
        if ((u[i + 1] > 0) != (u[i] > 0) && u[i + 1] != 0 && u[i] != 0)
            nodes.push_back(i + 1);
    }
    return ContinuumSolution(l, energy, h, std::move(u), table, std::move(nodes));
}

// ---------------------------------------------------------------------------

namespace
{

double reduce_mod_pi(double a)
{
    a = std::fmod(a, pi);
    if (a > pi / 2)
        a -= pi;
    else if (a <= -pi / 2)
        a += pi;
    return a;
}

//! Angle of (w, dw/dx) folded into [0, pi).
double fold_angle(double w, double wx)
{
    double a = std::atan2(w, wx);
    if (a < 0)
        a += pi;
    if (a >= pi)
        a -= pi;
    return a;
}

constexpr double ill_conditioned = 1e-6;
constexpr double band_edge = 1e-4;

struct Attempt
{
    double reduced;
    double absolute;
    double r1;
    double r2;
    bool ok;
};

Attempt try_extract(ContinuumSolution& sol, double r1, double r2)
{
    std::size_t i1 = sol.index_at(r1);
    std::size_t i2 = sol.index_at(r2);
    double ra = sol.r(i1);
    double rb = sol.r(i2);
    double u1 = sol.u()[i1];
    double u2 = sol.u()[i2];
    int l = sol.l();
    double k = sol.k();
    if (u1 == 0)
        return {0, 0, ra, rb, false};

    double xa = k * ra;
    double xb = k * rb;
    auto ja = spherical_bessel_j_all(l + 1, xa);
    auto ya = spherical_bessel_y_all(l + 1, xa);
    double jb = spherical_bessel_j(l, xb);
    double yb = spherical_bessel_y(l, xb);
    auto L = static_cast<std::size_t>(l);

    double zeta = ra * u2 / (rb * u1);
    double num = zeta * ja[L] - jb;
    double den = zeta * ya[L] - yb;
    double reduced = reduce_mod_pi(std::atan2(num, den));

    // Riccati functions x j_l, x y_l and their x-derivatives at r1.
    double rj = xa * ja[L];
    double ry = xa * ya[L];
    double rjx = ja[L] + xa * (l / xa * ja[L] - ja[L + 1]);
    double ryx = ya[L] + xa * (l / xa * ya[L] - ya[L + 1]);
    double w = rj * std::cos(reduced) - ry * std::sin(reduced);
    double wx = rjx * std::cos(reduced) - ryx * std::sin(reduced);
    if (std::abs(w) < ill_conditioned * std::hypot(w, wx))
        return {reduced, 0, ra, rb, false};

    // Pruefer angle of u at r1 minus that of the free solution. The two
    // cross multiples of pi exactly when delta does, so the band of the
    // difference fixes the branch of delta.
    int nodes = sol.nodes_through(i1);
    int free_nodes = spherical_bessel_j_zero_count(l, xa);
    double diff = (nodes - free_nodes) * pi + fold_angle(w, wx) - fold_angle(rj, rjx);
    double m = std::round(diff / pi);
    double absolute;
    if (std::abs(diff - m * pi) < band_edge)
        absolute = reduced + pi * std::round((m * pi - reduced) / pi);
    else
        absolute = reduced + pi * (std::floor(diff / pi) - std::floor(reduced / pi));
    return {reduced, absolute, ra, rb, true};
}

}  // namespace

PhaseResult extract_phase_shift(ContinuumSolution& sol, double r1, double r2)
{
    if (!(r2 != r1))
        throw ConfigError("extract_phase_shift: r1 and r2 must differ");
    Attempt a = try_extract(sol, r1, r2);
    if (a.ok)
        return {a.reduced, a.absolute, a.r1, a.r2, false};

    double quarter = pi / (2.0 * sol.k());
    Attempt b = try_extract(sol, r1 + quarter, r2 + quarter);
    if (b.ok)
        return {b.reduced, b.absolute, b.r1, b.r2, true};

    std::ostringstream os;
    os << "phase extraction ill-conditioned at both matching pairs for l=" << sol.l()
       << " E=" << sol.energy();
    throw NumericalError(os.str());
}

PhaseResult phase_shift(PotentialTable const& potential, int l, double energy, double r1,
                        double r2)
{
    auto sol = numerov_integrate(potential, l, energy, std::max(r1, r2));
    auto res = extract_phase_shift(sol, r1, r2);

    PotentialTable zero{potential.grid, std::vector<double>(potential.size(), 0.0), Model::Custom, {}};
    auto free = numerov_integrate(zero, l, energy, std::max(res.r1, res.r2));
    Attempt f = try_extract(free, res.r1, res.r2);
    if (f.ok)
    {
        res.absolute -= f.absolute;
        res.reduced = reduce_mod_pi(res.reduced - f.absolute);
    }
    return res;
}

// ---------------------------------------------------------------------------

namespace
{

std::vector<double> phases_at(PotentialTable const& potential, ScatterConfig const& config,
                              double energy)
{
    std::vector<double> out(static_cast<std::size_t>(config.lmax) + 1);
    for (int l = 0; l <= config.lmax; ++l)
    {
        try
        {
            out[static_cast<std::size_t>(l)] =
                phase_shift(potential, l, energy, config.r1, config.r2).absolute;
        }
        catch (NumericalError const& e)
        {
            std::ostringstream os;
            os << "scan failed at l=" << l << " E=" << energy << ": " << e.what();
            throw NumericalError(os.str());
        }
    }
    return out;
}

}  // namespace

PhaseShiftScan scan(PotentialTable const& potential, ScatterConfig const& config)
{
    config.validate(potential.grid.r_max());
    std::vector<double> energies = config.energies;
    std::sort(energies.begin(), energies.end());
    energies.erase(std::unique(energies.begin(), energies.end()), energies.end());

    // rows[j][l]
    std::vector<std::vector<double>> rows;
    rows.reserve(energies.size());
    for (double e : energies)
        rows.push_back(phases_at(potential, config, e));

    // Bisection refinement of under-resolved intervals.
    std::vector<int> level(energies.size() > 0 ? energies.size() - 1 : 0, 0);
    bool changed = true;
    while (changed)
    {
        changed = false;
        std::vector<double> new_e;
        std::vector<std::vector<double>> new_rows;
        std::vector<int> new_level;
        for (std::size_t j = 0; j < energies.size(); ++j)
        {
            new_e.push_back(energies[j]);
            new_rows.push_back(std::move(rows[j]));
            if (j + 1 == energies.size())
                break;
            auto const& a = new_rows.back();
            auto const& b = rows[j + 1];
            double step = 0;
            for (std::size_t l = 0; l < a.size(); ++l)
                step = std::max(step, std::abs(b[l] - a[l]));
            if (step > config.max_phase_step && level[j] < config.max_refine_levels)
            {
                double mid = 0.5 * (energies[j] + energies[j + 1]);
                new_e.push_back(mid);
                new_rows.push_back(phases_at(potential, config, mid));
                new_level.push_back(level[j] + 1);
                new_level.push_back(level[j] + 1);
                changed = true;
            }
            else
                new_level.push_back(level[j]);
        }
        energies = std::move(new_e);
        rows = std::move(new_rows);
        level = std::move(new_level);
    }

    PhaseShiftScan out;
    out.model = potential.model;
    out.lmax = config.lmax;
    out.r1 = config.r1;
    out.r2 = config.r2;
    out.grid_r_max = potential.grid.r_max();
    out.grid_points = potential.grid.size();
    out.energies = energies;
    out.k.resize(energies.size());
    for (std::size_t j = 0; j < energies.size(); ++j)
        out.k[j] = std::sqrt(2.0 * energies[j]);
    out.delta.assign(static_cast<std::size_t>(config.lmax) + 1,
                     std::vector<double>(energies.size()));
    out.levinson.assign(static_cast<std::size_t>(config.lmax) + 1, 0);
    for (std::size_t l = 0; l < out.delta.size(); ++l)
    {
        // Pin at threshold: l > 0 starts near 0, l = 0 near pi when bound
        // s states exist.
        auto n0 = static_cast<int>(std::lround(rows.front()[l] / pi));
        int removed = (l == 0 && n0 >= 1) ? n0 - 1 : n0;
        out.levinson[l] = removed;
        for (std::size_t j = 0; j < energies.size(); ++j)
            out.delta[l][j] = rows[j][l] - removed * pi;
    }
    return out;
}

std::vector<double> phase_on_window(PotentialTable const& potential, ScatterConfig const& config,
                                    int l, std::vector<double> const& energies, int levinson)
{
    std::vector<double> out(energies.size());
    for (std::size_t j = 0; j < energies.size(); ++j)
        out[j] = phase_shift(potential, l, energies[j], config.r1, config.r2).absolute
                 - levinson * pi;
    return out;
}

// ---------------------------------------------------------------------------

double partial_cross_section(int l, double k, double delta)
{
    double s = std::sin(delta);
    return 4.0 * pi / (k * k) * (2 * l + 1) * s * s;
}

CrossSections cross_sections(PhaseShiftScan const& scan)
{
    if (scan.energies.empty())
        throw ConfigError("cross_sections: empty scan");
    CrossSections xs;
    xs.energies = scan.energies;
    xs.k = scan.k;
    xs.partial.assign(scan.delta.size(), std::vector<double>(scan.size()));
    xs.total.assign(scan.size(), 0.0);
    for (std::size_t l = 0; l < scan.delta.size(); ++l)
        for (std::size_t j = 0; j < scan.size(); ++j)
        {
            double s = partial_cross_section(static_cast<int>(l), scan.k[j], scan.delta[l][j]);
            xs.partial[l][j] = s;
            xs.total[j] += s;
        }
    return xs;
}

// ---------------------------------------------------------------------------

void write_scan(PhaseShiftScan const& scan, std::ostream& os,
                std::vector<std::string> const& header)
{
    for (auto const& h : header)
        os << "# " << h << '\n';
    os << "# model: " << to_string(scan.model) << '\n';
    os << "# grid: r_max=" << std::setprecision(10) << scan.grid_r_max
       << " n=" << scan.grid_points << '\n';
    os << "# matching: r1=" << scan.r1 << " r2=" << scan.r2 << '\n';
    os << "# lmax: " << scan.lmax << '\n';
    os << "# levinson:";
    for (int n : scan.levinson)
        os << ' ' << n;
    os << '\n';
    os << "# columns: E k";
    for (int l = 0; l <= scan.lmax; ++l)
        os << " delta_" << l;
    os << "  (hartree, 1/bohr, radians)\n";
    os << std::scientific << std::setprecision(16);
    for (std::size_t j = 0; j < scan.size(); ++j)
    {
        os << scan.energies[j] << ' ' << scan.k[j];
        for (auto const& d : scan.delta)
            os << ' ' << d[j];
        os << '\n';
    }
}

PhaseShiftScan read_scan(std::istream& is)
{
    PhaseShiftScan scan;
    std::string line;
    int lmax = -1;
    while (std::getline(is, line))
    {
        if (line.empty())
            continue;
        if (line[0] == '#')
        {
            std::istringstream hs(line.substr(1));
            std::string key;
            hs >> key;
            if (key == "model:")
            {
                std::string m;
                hs >> m;
                try
                {
                    scan.model = model_from_string(m);
                }
                catch (ConfigError const&)
                {
                    scan.model = Model::Custom;
                }
            }
            else if (key == "lmax:")
                hs >> lmax;
            else if (key == "levinson:")
            {
                int n;
                while (hs >> n)
                    scan.levinson.push_back(n);
            }
            else if (key == "matching:")
            {
                std::string tok;
                while (hs >> tok)
                {
                    if (tok.rfind("r1=", 0) == 0)
                        scan.r1 = std::stod(tok.substr(3));
                    else if (tok.rfind("r2=", 0) == 0)
                        scan.r2 = std::stod(tok.substr(3));
                }
            }
            else if (key == "grid:")
            {
                std::string tok;
                while (hs >> tok)
                {
                    if (tok.rfind("r_max=", 0) == 0)
                        scan.grid_r_max = std::stod(tok.substr(6));
                    else if (tok.rfind("n=", 0) == 0)
                        scan.grid_points = std::stoul(tok.substr(2));
                }
            }
            continue;
        }
        std::istringstream ls(line);
        std::vector<double> cols;
        double v;
        while (ls >> v)
            cols.push_back(v);
        if (cols.size() < 3)
            throw ConfigError("scan file: malformed row '" + line + "'");
        if (lmax < 0)
            lmax = static_cast<int>(cols.size()) - 3;
        if (cols.size() != static_cast<std::size_t>(lmax) + 3)
            throw ConfigError("scan file: row has wrong column count");
        if (scan.delta.empty())
            scan.delta.resize(static_cast<std::size_t>(lmax) + 1);
        scan.energies.push_back(cols[0]);
        scan.k.push_back(cols[1]);
        for (int l = 0; l <= lmax; ++l)
            scan.delta[static_cast<std::size_t>(l)].push_back(cols[static_cast<std::size_t>(l) + 2]);
    }
    if (scan.energies.empty())
        throw ConfigError("scan file: no data rows");
    scan.lmax = lmax;
    scan.levinson.resize(static_cast<std::size_t>(lmax) + 1, 0);
    return scan;
}

void write_cross_sections(CrossSections const& xs, PhaseShiftScan const& scan, std::ostream& os,
                          std::vector<std::string> const& header)
{
    for (auto const& h : header)
        os << "# " << h << '\n';
    os << "# model: " << to_string(scan.model) << '\n';
    os << "# grid: r_max=" << std::setprecision(10) << scan.grid_r_max
       << " n=" << scan.grid_points << '\n';
    os << "# matching: r1=" << scan.r1 << " r2=" << scan.r2 << '\n';
    os << "# columns: E";
    for (std::size_t l = 0; l < xs.partial.size(); ++l)
        os << " sigma_" << l;
    os << " sigma_total  (hartree, bohr^2)\n";
    os << std::scientific << std::setprecision(16);
    for (std::size_t j = 0; j < xs.energies.size(); ++j)
    {
        os << xs.energies[j];
        for (auto const& p : xs.partial)
            os << ' ' << p[j];
        os << ' ' << xs.total[j] << '\n';
    }
}

}  // namespace ews
