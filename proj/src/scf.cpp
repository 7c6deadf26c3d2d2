#include "ews/scf.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "ews/errors.hpp"
#include "ews/numerov.hpp"

namespace ews
{

namespace
{

constexpr double pi = std::numbers::pi;

struct Shot
{
    int nodes;
    //! u at the wall over the magnitude of its last two samples; continuous
    //! in E and zero at an eigenvalue.
    double tail;
};

// Outward regular solution over the whole table, counting sign changes on
// (0, r_max); u is filled when requested.
Shot shoot(PotentialTable const& potential, int l, double energy, std::vector<double>* u_out)
{
    double h = potential.grid.spacing();
    std::size_t n = potential.size();
    double c = h * h / 12.0;
    double ll = l * (l + 1.0);
    auto const& v = potential.values;
    auto fk = [&](std::size_t i) {
        double r = static_cast<double>(i) * h;
        return 2.0 * (v[i] - energy) + ll / (r * r);
    };
    std::size_t s = std::min(numerov::start_index(l), n - 2);
    if (u_out)
        u_out->assign(n, 0.0);
    double u_prev = numerov::regular_series(l, static_cast<double>(s - 1) * h, v[s - 1] - energy);
    double u_cur = numerov::regular_series(l, static_cast<double>(s) * h, v[s] - energy);
    if (u_out)
        for (std::size_t i = 1; i <= s; ++i)
            (*u_out)[i] = numerov::regular_series(l, static_cast<double>(i) * h, v[i] - energy);
    double f_prev = s - 1 > 0 ? fk(s - 1) : 0.0;
    double f_cur = fk(s);
    int nodes = 0;
    double scale = 1.0;
    for (std::size_t i = s; i + 1 < n; ++i)
    {
        double f_next = fk(i + 1);
        double u_next = numerov::step(u_prev, u_cur, f_prev, f_cur, f_next, c);
        if (std::abs(u_next) > 1e200)
        {
            u_next *= 1e-200;
            u_cur *= 1e-200;
            scale *= 1e-200;
            if (u_out)
                for (std::size_t m = 0; m <= i; ++m)
                    (*u_out)[m] *= 1e-200;
        }
        if (!std::isfinite(u_next))
        {
            std::ostringstream os;
            os << "bound-state integration failed for l=" << l << " E=" << energy;
            throw NumericalError(os.str());
        }
        if (u_next != 0 && (u_next > 0) != (u_cur > 0))
            ++nodes;
        if (u_out)
            (*u_out)[i + 1] = u_next;
        u_prev = u_cur;
        u_cur = u_next;
        f_prev = f_cur;
        f_cur = f_next;
    }
    return {nodes, u_cur / std::hypot(u_prev, u_cur)};
}

int sign_changes(std::vector<double> const& u)
{
    double scale = 0;
    for (double v : u)
        scale = std::max(scale, std::abs(v));
    int nodes = 0;
    int last = 0;
    for (double v : u)
    {
        if (std::abs(v) <= 1e-10 * scale)
            continue;
        int s = v > 0 ? 1 : -1;
        if (last != 0 && s != last)
            ++nodes;
        last = s;
    }
    return nodes;
}

PotentialTable table_on(RadialGrid const& grid, std::vector<double> values, Model model,
                        std::string description)
{
    PotentialTable t;
    t.grid = grid;
    t.values = std::move(values);
    t.model = model;
    t.description = std::move(description);
    return t;
}

}  // namespace

int count_states_below(PotentialTable const& potential, int l, double e)
{
    return shoot(potential, l, e, nullptr).nodes;
}

double potential_floor(PotentialTable const& potential, int l)
{
    double ll = 0.5 * l * (l + 1.0);
    double lo = INFINITY;
    for (std::size_t i = 1; i < potential.size(); ++i)
    {
        double r = potential.grid.r(i);
        lo = std::min(lo, potential.values[i] + ll / (r * r));
    }
    return lo;
}

Orbital solve_bound_state(PotentialTable const& potential, int l, int n_r, double e_lo,
                          double e_hi, double guess)
{
    if (l < 0 || n_r < 0)
        throw ConfigError("solve_bound_state: negative quantum number");
    if (!(e_lo < e_hi) || !(e_hi < 0))
        throw ConfigError("solve_bound_state: window must satisfy e_lo < e_hi < 0");

    // The Sturm count of the outward solution is the number of eigenvalues
    // below E (hard wall at the table end).
    int below_lo = shoot(potential, l, e_lo, nullptr).nodes;
    int below_hi = shoot(potential, l, e_hi, nullptr).nodes;
    if (below_lo > n_r || below_hi <= n_r)
    {
        std::ostringstream os;
        os << "no bound state l=" << l << " n_r=" << n_r << " in [" << e_lo << ", " << e_hi
           << "]";
        throw StateNotFound(l, n_r, os.str());
    }
    // Bisect on the count until the bracket holds this eigenvalue alone, then
    // polish on the wall value, which changes sign exactly once there.
    double lo = e_lo, hi = e_hi;
    if (std::isfinite(guess) && guess > e_lo && guess < e_hi)
    {
        for (double d = 1e-4; d < e_hi - e_lo; d *= 8.0)
        {
            double a = std::max(e_lo, guess - d), b = std::min(e_hi, guess + d);
            int ka = shoot(potential, l, a, nullptr).nodes;
            int kb = shoot(potential, l, b, nullptr).nodes;
            if (ka <= n_r && kb > n_r)
            {
                lo = a;
                hi = b;
                below_lo = ka;
                below_hi = kb;
                break;
            }
        }
    }
    while (below_lo != n_r || below_hi != n_r + 1)
    {
        double mid = 0.5 * (lo + hi);
        int k = shoot(potential, l, mid, nullptr).nodes;
        if (k > n_r)
        {
            hi = mid;
            below_hi = k;
        }
        else
        {
            lo = mid;
            below_lo = k;
        }
        if (hi - lo < 1e-14)
            break;
    }
    auto tail = [&](double e) { return shoot(potential, l, e, nullptr).tail; };
    double f_lo = tail(lo), f_hi = tail(hi);
    double energy = 0.5 * (lo + hi);
    if (f_lo != 0 && f_hi != 0 && (f_lo > 0) != (f_hi > 0))
    {
        std::uintmax_t iterations = 200;
        auto root = boost::math::tools::toms748_solve(
            tail, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(42), iterations);
        energy = 0.5 * (root.first + root.second);
    }
    else if (f_lo == 0)
        energy = lo;
    else if (f_hi == 0)
        energy = hi;

    // Outward solution up to the outer turning point, inward from the wall.
    std::vector<double> u;
    shoot(potential, l, energy, &u);
    std::size_t n = potential.size();
    double h = potential.grid.spacing();
    auto f = numerov::kernel(potential.values, l, energy, h, n);
    std::size_t m = 0;
    for (std::size_t i = n - 2; i > 0; --i)
        if (f[i] < 0)
        {
            m = i;
            break;
        }
    if (m == 0)
        m = n / 2;
    m = std::clamp<std::size_t>(m, numerov::start_index(l) + 2, n - 3);
    while (m + 3 < n && std::abs(u[m]) < 1e-3 * std::abs(u[m + 1]))
        ++m;

    double c = h * h / 12.0;
    std::vector<double> w(n, 0.0);
    w[n - 2] = 1e-30;
    for (std::size_t i = n - 2; i > m; --i)
    {
        w[i - 1] = numerov::step(w[i + 1], w[i], f[i + 1], f[i], f[i - 1], c);
        if (std::abs(w[i - 1]) > 1e200)
            for (std::size_t k = i - 1; k < n; ++k)
                w[k] *= 1e-200;
    }
    double scale = u[m] / w[m];
    for (std::size_t i = m + 1; i < n; ++i)
        u[i] = w[i] * scale;
    u[0] = 0;

    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i)
        sq[i] = u[i] * u[i];
    double norm = std::sqrt(quad::simpson(sq, h));
    if (!(norm > 0) || !std::isfinite(norm))
        throw NumericalError("solve_bound_state: orbital normalization failed");
    for (double& v : u)
        v /= norm;
    if (sign_changes(u) != n_r)
    {
        std::ostringstream os;
        os << "solve_bound_state: orbital l=" << l << " n_r=" << n_r << " has "
           << sign_changes(u) << " nodes";
        throw NumericalError(os.str());
    }
    return {l, n_r, energy, std::move(u), 0.0};
}

std::vector<double> density_from_orbitals(std::vector<Orbital> const& orbitals,
                                          RadialGrid const& grid)
{
    std::vector<double> rho(grid.size(), 0.0);
    for (auto const& o : orbitals)
    {
        if (o.u.size() != grid.size())
            throw ConfigError("density_from_orbitals: orbital grid mismatch");
        for (std::size_t i = 1; i < grid.size(); ++i)
        {
            double r = grid.r(i);
            rho[i] += o.occupation * o.u[i] * o.u[i] / (4.0 * pi * r * r);
        }
        if (o.l == 0)
        {
            double slope = o.u[1] / grid.r(1);
            rho[0] += o.occupation * slope * slope / (4.0 * pi);
        }
    }
    return rho;
}

PotentialTable hartree_potential(std::vector<double> const& density, RadialGrid const& grid)
{
    std::size_t n = grid.size();
    if (density.size() != n)
        throw ConfigError("hartree_potential: density grid mismatch");
    std::vector<double> inner(n), outer(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        double r = grid.r(i);
        inner[i] = 4.0 * pi * density[i] * r * r;
        outer[i] = 4.0 * pi * density[i] * r;
    }
    auto q = quad::cumulative_trapezoid(inner, grid.spacing());
    auto p = quad::cumulative_trapezoid(outer, grid.spacing());
    std::vector<double> v(n);
    v[0] = p.back();
    for (std::size_t i = 1; i < n; ++i)
        v[i] = q[i] / grid.r(i) + (p.back() - p[i]);
    return table_on(grid, std::move(v), Model::Custom, "hartree");
}

double xc_potential_at(double rho)
{
    if (rho < 0)
        throw ConfigError("xc_potential: negative density");
    if (rho == 0)
        return 0;
    double exchange = -std::cbrt(3.0 * rho / pi);
    double correlation = -0.0333 * std::log(1.0 + 11.4 * std::cbrt(4.0 * pi * rho / 3.0));
    return exchange + correlation;
}

PotentialTable xc_potential(std::vector<double> const& density, RadialGrid const& grid)
{
    if (density.size() != grid.size())
        throw ConfigError("xc_potential: density grid mismatch");
    std::vector<double> v(density.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = xc_potential_at(density[i]);
    return table_on(grid, std::move(v), Model::Custom, "xc");
}

std::vector<Orbital> fill_orbitals(PotentialTable const& potential, double electrons,
                                   std::vector<Occupation> const& occupations, int lmax_bound,
                                   double smearing, std::vector<Orbital> const* previous)
{
    auto guess_for = [&](int l, int n_r) {
        if (previous)
            for (auto const& o : *previous)
                if (o.l == l && o.n_r == n_r)
                    return o.energy;
        return std::numeric_limits<double>::quiet_NaN();
    };
    constexpr double top = -1e-10;
    std::vector<Orbital> out;
    if (electrons <= 0)
        return out;
    if (!occupations.empty())
    {
        for (auto const& occ : occupations)
        {
            double floor = potential_floor(potential, occ.l);
            if (!(floor < top))
                throw StateNotFound(occ.l, occ.n_r,
                                    "no bound state l=" + std::to_string(occ.l) + " n_r="
                                        + std::to_string(occ.n_r) + ": potential has no well");
            auto o = solve_bound_state(potential, occ.l, occ.n_r, floor - 1e-6, top,
                                       guess_for(occ.l, occ.n_r));
            o.occupation = occ.electrons;
            out.push_back(std::move(o));
        }
        return out;
    }

    // States are generated lazily in ascending energy: the lowest state of each
    // l rises with l, and within one l the energies rise with n_r.
    struct Pending
    {
        Orbital orbital;
        int count;
        double floor;
    };
    auto later = [](Pending const& a, Pending const& b) {
        return a.orbital.energy > b.orbital.energy;
    };
    std::priority_queue<Pending, std::vector<Pending>, decltype(later)> queue(later);
    int next_l = 0;
    auto push_lowest = [&]() {
        while (next_l <= lmax_bound)
        {
            int l = next_l++;
            double floor = potential_floor(potential, l);
            if (!(floor < top))
                return;
            int count = count_states_below(potential, l, top);
            if (count == 0)
                return;
            queue.push({solve_bound_state(potential, l, 0, floor - 1e-6, top, guess_for(l, 0)),
                        count, floor});
            return;
        }
    };
    push_lowest();

    std::vector<Orbital> all;
    double capacity = 0;
    double fermi = INFINITY;
    while (!queue.empty())
    {
        Pending p = queue.top();
        if (capacity >= electrons && p.orbital.energy > fermi + 30.0 * smearing)
            break;
        queue.pop();
        int l = p.orbital.l, n_r = p.orbital.n_r;
        if (n_r == 0)
            push_lowest();
        if (n_r + 1 < p.count)
            queue.push({solve_bound_state(potential, l, n_r + 1, p.orbital.energy, top,
                                          guess_for(l, n_r + 1)),
                        p.count, p.floor});
        capacity += 2.0 * (2 * l + 1);
        if (capacity >= electrons && !std::isfinite(fermi))
            fermi = p.orbital.energy;
        all.push_back(std::move(p.orbital));
    }
    if (capacity < electrons - 1e-12)
    {
        std::ostringstream os;
        os << "fill_orbitals: only " << capacity << " of " << electrons
           << " electrons fit into bound states";
        throw NumericalError(os.str());
    }

    if (smearing > 0)
    {
        // Fermi-Dirac occupations; the chemical potential is found by bisection.
        auto fill = [&](double mu) {
            double sum = 0;
            for (auto& o : all)
            {
                double x = (o.energy - mu) / smearing;
                o.occupation = 2.0 * (2 * o.l + 1) / (1.0 + std::exp(std::min(x, 700.0)));
                sum += o.occupation;
            }
            return sum;
        };
        double lo = all.front().energy - 50 * smearing, hi = all.back().energy + 50 * smearing;
        for (int k = 0; k < 200 && hi - lo > 1e-15; ++k)
        {
            double mid = 0.5 * (lo + hi);
            (fill(mid) > electrons ? hi : lo) = mid;
        }
        double sum = fill(0.5 * (lo + hi));
        for (auto& o : all)
            o.occupation *= electrons / sum;
        for (auto& o : all)
            if (o.occupation > 1e-14)
                out.push_back(std::move(o));
        return out;
    }

    double left = electrons;
    for (auto& o : all)
    {
        if (left <= 0)
            break;
        o.occupation = std::min(left, 2.0 * (2 * o.l + 1));
        left -= o.occupation;
        out.push_back(std::move(o));
    }
    return out;
}

void ScfConfig::validate() const
{
    jellium.validate();
    if (!(mixing > 0 && mixing <= 1))
        throw ConfigError("scf: mixing must lie in (0, 1]");
    if (max_iterations < 1)
        throw ConfigError("scf: max_iterations must be positive");
    if (!(tolerance > 0))
        throw ConfigError("scf: tolerance must be positive");
    if (!(smearing >= 0))
        throw ConfigError("scf: smearing must be non-negative");
    if (!(ip_tolerance > 0))
        throw ConfigError("scf: ip tolerance must be positive");
    if (!occupations.empty())
    {
        double sum = 0;
        for (auto const& o : occupations)
        {
            if (o.l < 0 || o.n_r < 0 || o.electrons < 0 || o.electrons > 2.0 * (2 * o.l + 1))
                throw ConfigError("scf: invalid occupation entry");
            sum += o.electrons;
        }
        if (std::abs(sum - electrons()) > 1e-9)
            throw ConfigError("scf: explicit occupations must sum to the electron count");
    }
}

double ScfState::homo() const
{
    // With smeared occupations a level counts as occupied from half an electron.
    double e = -INFINITY;
    for (auto const& o : orbitals)
        if (o.occupation >= 0.5)
            e = std::max(e, o.energy);
    return e;
}

double ScfState::electron_count() const
{
    auto const& g = potential.grid;
    std::vector<double> f(density.size());
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = 4.0 * pi * g.r(i) * g.r(i) * density[i];
    return quad::simpson(f, g.spacing());
}

ScfState scf_iterate(PotentialTable const& jellium, ScfConfig const& config,
                     std::vector<double> const* initial_density)
{
    config.validate();
    auto const& grid = jellium.grid;
    std::size_t n = grid.size();
    auto shell = shell_indicator(config.jellium.inner(), config.jellium.outer(), grid);
    double electrons = config.electrons();

    // Default start is the empty shell: the bare jellium binds every electron,
    // and mixing approaches neutrality from the positively charged side.
    std::vector<double> rho(n, 0.0);
    if (initial_density)
    {
        if (initial_density->size() != n)
            throw ConfigError("scf_iterate: initial density grid mismatch");
        rho = *initial_density;
    }

    auto total_potential = [&](std::vector<double> const& d) {
        auto vh = hartree_potential(d, grid);
        auto vxc = xc_potential(d, grid);
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i)
            v[i] = jellium.values[i] + config.jellium.pseudo_potential * shell[i] + vh.values[i]
                   + vxc.values[i];
        std::ostringstream desc;
        desc << jellium.description << " V0=" << std::setprecision(17)
             << config.jellium.pseudo_potential;
        return table_on(grid, std::move(v), Model::Dft, desc.str());
    };

    ScfState state;
    state.pseudo_potential = config.jellium.pseudo_potential;
    for (int it = 1; it <= config.max_iterations; ++it)
    {
        auto v = total_potential(rho);
        auto orbitals = fill_orbitals(v, electrons, config.occupations, config.lmax_bound,
                                      config.smearing, &state.orbitals);
        auto out = density_from_orbitals(orbitals, grid);
        double residual = 0;
        for (std::size_t i = 0; i < n; ++i)
            residual = std::max(residual, std::abs(out[i] - rho[i]));
        state.history.push_back(residual);

        state.iterations = it;
        state.orbitals = std::move(orbitals);
        if (residual < config.tolerance)
        {
            state.converged = true;
            rho = std::move(out);
            break;
        }
        for (std::size_t i = 0; i < n; ++i)
            rho[i] += config.mixing * (out[i] - rho[i]);
    }
    state.density = rho;
    state.potential = total_potential(rho);
    return state;
}

ScfState scf_iterate(ScfConfig const& config)
{
    JelliumParams bare = config.jellium;
    bare.pseudo_potential = 0;
    return scf_iterate(build_jellium(bare, config.grid), config);
}

ScfState tune_pseudopotential(ScfConfig const& config)
{
    config.validate();
    JelliumParams bare = config.jellium;
    bare.pseudo_potential = 0;
    auto jellium = build_jellium(bare, config.grid);
    std::vector<double> warm;

    auto run = [&](double v0) {
        ScfConfig c = config;
        c.jellium.pseudo_potential = v0;
        auto s = scf_iterate(jellium, c, warm.empty() ? nullptr : &warm);
        if (!s.converged)
        {
            std::ostringstream os;
            os << "tune_pseudopotential: SCF did not converge at V0=" << v0 << " (residual "
               << s.history.back() << ")";
            throw ScfNotConverged(s.history.back(), os.str());
        }
        warm = s.density;
        return s;
    };
    auto ip_of = [](ScfState const& s) { return -s.homo(); };

    double a = config.jellium.pseudo_potential;
    auto sa = run(a);
    double fa = ip_of(sa) - config.target_ip;
    if (std::abs(fa) < config.ip_tolerance)
        return sa;

    // A deeper (more negative) pseudo-potential binds the HOMO more strongly.
    double step = fa < 0 ? -0.05 : 0.05;
    double b = a;
    ScfState sb;
    double fb = fa;
    double ip_min = ip_of(sa), ip_max = ip_of(sa);
    for (int k = 0; k < 12; ++k)
    {
        b = a + step;
        sb = run(b);
        fb = ip_of(sb) - config.target_ip;
        ip_min = std::min(ip_min, ip_of(sb));
        ip_max = std::max(ip_max, ip_of(sb));
        if (std::abs(fb) < config.ip_tolerance)
            return sb;
        if ((fb > 0) != (fa > 0))
            break;
        a = b;
        fa = fb;
        sa = std::move(sb);
        step *= 2.0;
    }
    if ((fb > 0) == (fa > 0))
    {
        std::ostringstream os;
        os << "tune_pseudopotential: could not bracket target IP " << config.target_ip
           << "; achieved IP range [" << ip_min << ", " << ip_max << "]";
        throw NumericalError(os.str());
    }

    // Illinois-modified regula falsi.
    int side = 0;
    for (int k = 0; k < 60; ++k)
    {
        double c = b - fb * (b - a) / (fb - fa);
        auto sc = run(c);
        double fc = ip_of(sc) - config.target_ip;
        if (std::abs(fc) < config.ip_tolerance)
            return sc;
        if ((fc > 0) == (fb > 0))
        {
            b = c;
            fb = fc;
            if (side == -1)
                fa *= 0.5;
            side = -1;
        }
        else
        {
            a = b;
            fa = fb;
            b = c;
            fb = fc;
            side = +1;
        }
    }
    throw NumericalError("tune_pseudopotential: no convergence within 60 steps");
}

void write_scf_state(ScfState const& state, std::string const& directory,
                     std::vector<std::string> const& header)
{
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    auto const& grid = state.potential.grid;

    {
        std::ofstream os(fs::path(directory) / "potential.dat");
        for (auto const& h : header)
            os << "# " << h << '\n';
        write_table(state.potential, os);
    }
    {
        std::ofstream os(fs::path(directory) / "density.dat");
        for (auto const& h : header)
            os << "# " << h << '\n';
        os << "# columns: r rho (electrons/bohr^3)\n" << std::scientific << std::setprecision(17);
        for (std::size_t i = 0; i < grid.size(); ++i)
            os << grid.r(i) << ' ' << state.density[i] << '\n';
    }
    {
        std::ofstream os(fs::path(directory) / "orbitals.dat");
        for (auto const& h : header)
            os << "# " << h << '\n';
        os << "# columns: l n_r energy occupation\n" << std::setprecision(17);
        for (auto const& o : state.orbitals)
            os << o.l << ' ' << o.n_r << ' ' << o.energy << ' ' << o.occupation << '\n';
    }
    {
        std::ofstream os(fs::path(directory) / "run.txt");
        for (auto const& h : header)
            os << "# " << h << '\n';
        os << std::setprecision(17);
        os << "pseudo_potential " << state.pseudo_potential << '\n';
        os << "converged " << (state.converged ? "yes" : "no") << '\n';
        os << "iterations " << state.iterations << '\n';
        os << "homo " << state.homo() << '\n';
        os << "electrons " << state.electron_count() << '\n';
        os << "# residual history\n";
        for (std::size_t i = 0; i < state.history.size(); ++i)
            os << "residual " << i + 1 << ' ' << state.history[i] << '\n';
    }
}

}  // namespace ews
