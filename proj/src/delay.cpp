#include "ews/delay.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "ews/errors.hpp"

namespace ews
{

namespace
{

// Derivative at x[j] from the three samples a < b < c (j is one of them).
double three_point(double xa, double ya, double xb, double yb, double xc, double yc, double x)
{
    // d/dx of the Lagrange interpolant through the three points.
    // The weights sum to zero, so differences from yb keep constants exact.
    double la = ((x - xb) + (x - xc)) / ((xa - xb) * (xa - xc));
    double lc = ((x - xa) + (x - xb)) / ((xc - xa) * (xc - xb));
    return la * (ya - yb) + lc * (yc - yb);
}

}  // namespace

std::vector<double> lagrange_derivative(std::vector<double> const& x, std::vector<double> const& y)
{
    std::size_t n = x.size();
    if (n < 3 || y.size() != n)
        throw ConfigError("lagrange_derivative: need at least 3 aligned points");
    std::vector<double> d(n);
    for (std::size_t j = 0; j < n; ++j)
    {
        std::size_t a = j == 0 ? 0 : (j + 1 == n ? n - 3 : j - 1);
        d[j] = three_point(x[a], y[a], x[a + 1], y[a + 1], x[a + 2], y[a + 2], x[j]);
    }
    return d;
}

TimeDelayCurve ews_delay(PhaseShiftScan const& scan)
{
    std::size_t n = scan.size();
    if (n < 3)
        throw ConfigError("ews_delay: need at least 3 energies per partial wave");
    TimeDelayCurve out;
    out.energies = scan.energies;
    auto const& e = scan.energies;
    for (auto const& delta : scan.delta)
    {
        auto d = lagrange_derivative(e, delta);
        std::vector<double> tau(n), err(n, 0.0);
        for (std::size_t j = 0; j < n; ++j)
        {
            tau[j] = 2.0 * d[j] * attoseconds_per_au;
            if (j >= 2 && j + 2 < n)
            {
                double wide = three_point(e[j - 2], delta[j - 2], e[j], delta[j], e[j + 2],
                                          delta[j + 2], e[j]);
                err[j] = std::abs(tau[j] - 2.0 * wide * attoseconds_per_au);
            }
        }
        out.tau.push_back(std::move(tau));
        out.step_error.push_back(std::move(err));
    }

    auto const& t0 = out.tau.front();
    if (t0[0] < 0)
    {
        std::size_t j = 0;
        while (j + 1 < n && t0[j] < 0 && t0[j + 1] > t0[j])
            ++j;
        out.divergent_below = e[j];
    }
    return out;
}

void average_delay(TimeDelayCurve& curve, CrossSections const& xs)
{
    std::size_t n = curve.energies.size();
    if (xs.energies.size() != n || xs.partial.size() != curve.tau.size())
        throw ConfigError("average_delay: delay and cross-section grids differ");
    for (std::size_t j = 0; j < n; ++j)
        if (std::abs(xs.energies[j] - curve.energies[j]) > 1e-12 * std::max(1.0, xs.energies[j]))
            throw ConfigError("average_delay: delay and cross-section grids differ");

    curve.average.assign(n, 0.0);
    curve.weights.assign(curve.tau.size(), std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j)
    {
        double total = xs.total[j];
        // A vanishing total only happens for a vanishing potential; the
        // average is then defined as zero.
        if (!(total > 0))
            continue;
        double acc = 0;
        for (std::size_t l = 0; l < curve.tau.size(); ++l)
        {
            double w = xs.partial[l][j] / total;
            curve.weights[l][j] = w;
            acc += w * curve.tau[l][j];
        }
        curve.average[j] = acc;
    }
}

PowerLawFit threshold_fit(std::vector<double> const& energies, std::vector<double> const& y,
                          double e_lo, double e_hi)
{
    if (energies.size() != y.size())
        throw ConfigError("threshold_fit: size mismatch");
    std::vector<double> lx, ly;
    int sign = 0;
    for (std::size_t j = 0; j < energies.size(); ++j)
    {
        if (energies[j] < e_lo || energies[j] > e_hi)
            continue;
        int s = y[j] > 0 ? 1 : (y[j] < 0 ? -1 : 0);
        if (s == 0 || (sign != 0 && s != sign))
            throw ConfigError("threshold_fit: window contains a sign change; not a power law");
        sign = s;
        lx.push_back(std::log(energies[j]));
        ly.push_back(std::log(std::abs(y[j])));
    }
    if (lx.size() < 2)
        throw ConfigError("threshold_fit: fewer than two points in window");
    double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    double slope = sxy / sxx;
    double icpt = my - slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        double r = ly[i] - (icpt + slope * lx[i]);
        ss += r * r;
    }
    return {slope, sign * std::exp(icpt), std::sqrt(ss / n)};
}

void write_delay(TimeDelayCurve const& curve, Model model, std::ostream& os,
                 std::vector<std::string> const& header)
{
    for (auto const& h : header)
        os << "# " << h << '\n';
    double min_step = 0, max_step = 0;
    for (std::size_t j = 1; j < curve.energies.size(); ++j)
    {
        double s = curve.energies[j] - curve.energies[j - 1];
        min_step = j == 1 ? s : std::min(min_step, s);
        max_step = std::max(max_step, s);
    }
    os << "# model: " << to_string(model) << '\n';
    os << std::setprecision(12);
    os << "# time unit: attoseconds, 1 a.u. = " << attoseconds_per_au << " as\n";
    os << "# differentiation: three-point Lagrange, " << curve.energies.size()
       << " energies, step min=" << min_step << " max=" << max_step << " hartree\n";
    if (curve.divergent_below > 0)
        os << "# divergent-threshold: tau_0 below E=" << curve.divergent_below << '\n';
    os << "# columns: E";
    for (std::size_t l = 0; l < curve.tau.size(); ++l)
        os << " tau_" << l;
    os << " tau_avg\n";
    os << std::scientific << std::setprecision(16);
    for (std::size_t j = 0; j < curve.energies.size(); ++j)
    {
        os << curve.energies[j];
        for (auto const& t : curve.tau)
            os << ' ' << t[j];
        os << ' ' << (curve.average.empty() ? 0.0 : curve.average[j]) << '\n';
    }
}

}  // namespace ews
