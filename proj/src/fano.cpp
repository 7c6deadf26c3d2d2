#include "ews/fano.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "ews/errors.hpp"

namespace ews
{

double fano_eval(FanoParams const& p, double energy)
{
    double eps = (energy - p.e_r) / p.half_width;
    double a = p.q + eps;
    return p.sigma0 * a * a / (1.0 + eps * eps);
}

std::array<double, 4> fano_gradient(FanoParams const& p, double energy)
{
    double g = p.half_width;
    double eps = (energy - p.e_r) / g;
    double a = p.q + eps;
    double d = 1.0 + eps * eps;
    double df_deps = 2.0 * p.sigma0 * a * (1.0 - p.q * eps) / (d * d);
    return {-df_deps / g, 2.0 * p.sigma0 * a / d, -df_deps * eps / g, a * a / d};
}

namespace
{

double median(std::vector<double> v)
{
    if (v.empty())
        return 0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0)
        m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
}

// Energy where tau drops through level, walking from j in direction dir.
double half_crossing(std::vector<double> const& e, std::vector<double> const& tau, std::size_t j,
                     int dir, double level)
{
    std::size_t i = j;
    while (true)
    {
        if ((dir < 0 && i == 0) || (dir > 0 && i + 1 == e.size()))
            return e[i];
        std::size_t next = dir < 0 ? i - 1 : i + 1;
        if (tau[next] < level)
        {
            double t = (tau[i] - level) / (tau[i] - tau[next]);
            return e[i] + t * (e[next] - e[i]);
        }
        i = next;
    }
}

Eigen::Vector4d as_vector(FanoParams const& p)
{
    return {p.e_r, p.q, p.half_width, p.sigma0};
}

FanoParams as_params(Eigen::Vector4d const& x)
{
    return {x[0], x[1], x[2], x[3]};
}

double cost_of(std::vector<double> const& e, std::vector<double> const& y, FanoParams const& p)
{
    double c = 0;
    for (std::size_t i = 0; i < e.size(); ++i)
    {
        double r = fano_eval(p, e[i]) - y[i];
        c += r * r;
    }
    return 0.5 * c;
}

}  // namespace

std::vector<ResonanceCandidate> detect(PhaseShiftScan const& scan, TimeDelayCurve const& delay,
                                       DetectConfig const& config)
{
    auto const& e = scan.energies;
    std::size_t n = e.size();
    if (delay.energies.size() != n)
        throw ConfigError("detect: scan and delay grids differ");
    std::vector<ResonanceCandidate> out;
    for (int l = 0; l <= scan.lmax; ++l)
    {
        auto const& tau = delay.tau[static_cast<std::size_t>(l)];
        auto const& delta = scan.delta[static_cast<std::size_t>(l)];
        std::vector<ResonanceCandidate> found;
        for (std::size_t j = 1; j + 1 < n; ++j)
        {
            if (!(tau[j] > 0 && tau[j] >= tau[j - 1] && tau[j] > tau[j + 1]))
                continue;

            std::vector<double> local;
            for (std::size_t i = 0; i < n; ++i)
                if (std::abs(e[i] - e[j]) <= config.background_half_width)
                    local.push_back(std::abs(tau[i]));
            double background = median(local);
            if (!(tau[j] > config.peak_over_median * background))
                continue;

            // Largest increase of delta inside a span centered on the peak.
            double rise = 0;
            double low = delta[j];
            std::size_t a = j;
            while (a > 0 && e[j] - e[a - 1] < 0.5 * config.max_span)
                --a;
            for (std::size_t i = a; i < n && e[i] - e[j] < 0.5 * config.max_span; ++i)
            {
                low = std::min(low, delta[i]);
                rise = std::max(rise, delta[i] - low);
            }
            if (rise < config.min_phase_rise)
                continue;

            double level = 0.5 * tau[j];
            double lo = half_crossing(e, tau, j, -1, level);
            double hi = half_crossing(e, tau, j, +1, level);
            ResonanceCandidate c;
            c.l = l;
            c.e_r = e[j];
            c.width = std::max(hi - lo, 1e-12);
            c.tau_peak = tau[j];
            c.phase_rise = rise;
            found.push_back(c);
        }

        // Maxima inside another, stronger peak's half-width belong to it.
        std::vector<ResonanceCandidate> kept;
        for (auto const& c : found)
        {
            bool shadowed = std::any_of(found.begin(), found.end(), [&](auto const& o) {
                return o.tau_peak > c.tau_peak && std::abs(o.e_r - c.e_r) < 0.5 * o.width;
            });
            if (!shadowed)
                kept.push_back(c);
        }
        for (std::size_t i = 0; i < kept.size(); ++i)
        {
            auto& c = kept[i];
            double half = config.window_factor * 0.5 * c.width;
            c.window_lo = std::max(c.e_r - half, e.front());
            c.window_hi = std::min(c.e_r + half, e.back());
            if (i > 0)
                c.window_lo = std::max(c.window_lo, 0.5 * (kept[i - 1].e_r + c.e_r));
            if (i + 1 < kept.size())
                c.window_hi = std::min(c.window_hi, 0.5 * (kept[i + 1].e_r + c.e_r));
            out.push_back(c);
        }
    }
    return out;
}

FanoParams initial_guess(std::vector<double> const& energies, std::vector<double> const& sigma,
                         ResonanceCandidate const& candidate)
{
    std::size_t n = energies.size();
    if (n < 5 || sigma.size() != n)
        throw ConfigError("initial_guess: too few points");
    std::size_t edge = std::max<std::size_t>(2, n / 10);
    std::vector<double> wings(sigma.begin(), sigma.begin() + static_cast<std::ptrdiff_t>(edge));
    wings.insert(wings.end(), sigma.end() - static_cast<std::ptrdiff_t>(edge), sigma.end());
    double s0 = std::max(median(wings), 1e-12);

    auto imax = static_cast<std::size_t>(std::max_element(sigma.begin(), sigma.end()) - sigma.begin());
    auto imin = static_cast<std::size_t>(std::min_element(sigma.begin(), sigma.end()) - sigma.begin());
    double q = std::sqrt(sigma[imax] / s0);
    if (imin > imax)
        q = -q;
    return {candidate.e_r, q, 0.5 * candidate.width, s0};
}

FanoFit fano_fit(std::vector<double> const& energies, std::vector<double> const& sigma,
                 FanoParams const& guess, FitOptions const& options)
{
    std::size_t n = energies.size();
    if (n < 5 || sigma.size() != n)
        throw ConfigError("fano_fit: need at least 5 aligned points");
    if (!(guess.half_width > 0))
        throw ConfigError("fano_fit: initial Gamma/2 must be positive");

    FanoFit fit;
    fit.initial = guess;
    fit.window_lo = energies.front();
    fit.window_hi = energies.back();
    fit.points = n;

    Eigen::Vector4d x = as_vector(guess);
    double cost = cost_of(energies, sigma, guess);
    fit.initial_residual = std::sqrt(2.0 * cost / static_cast<double>(n));

    Eigen::Matrix4d a;
    Eigen::Vector4d grad;
    auto assemble = [&](Eigen::Vector4d const& at) {
        a.setZero();
        grad.setZero();
        FanoParams p = as_params(at);
        for (std::size_t i = 0; i < n; ++i)
        {
            auto gi = fano_gradient(p, energies[i]);
            Eigen::Vector4d jrow(gi[0], gi[1], gi[2], gi[3]);
            double r = fano_eval(p, energies[i]) - sigma[i];
            a.noalias() += jrow * jrow.transpose();
            grad += r * jrow;
        }
        for (int k = 0; k < 4; ++k)
            if (!(a(k, k) > 0) || !std::isfinite(a(k, k)))
                throw NumericalError("fano_fit: singular normal equations");
    };

    double lambda = 1e-3;
    for (fit.iterations = 0; fit.iterations < options.max_iterations; ++fit.iterations)
    {
        assemble(x);
        bool accepted = false;
        Eigen::Vector4d dx;
        while (lambda < 1e20)
        {
            Eigen::Matrix4d m = a;
            m.diagonal() *= 1.0 + lambda;
            Eigen::LDLT<Eigen::Matrix4d> ldlt(m);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
                throw NumericalError("fano_fit: singular normal equations");
            dx = ldlt.solve(-grad);
            Eigen::Vector4d trial = x + dx;
            FanoParams tp = as_params(trial);
            double c = (tp.half_width > 0 && tp.sigma0 >= 0) ? cost_of(energies, sigma, tp)
                                                              : INFINITY;
            if (std::isfinite(c) && c < cost)
            {
                x = trial;
                cost = c;
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted)
        {
            // Stalled: the damped step cannot lower the cost any more. This is a
            // minimum when the scaled gradient is negligible.
            double worst = 0;
            for (int k = 0; k < 4; ++k)
                worst = std::max(worst, std::abs(grad[k] * x[k]));
            fit.converged = worst <= 1e-8 * std::max(cost, 1e-300) || cost < 1e-28;
            break;
        }
        bool small = true;
        for (int k = 0; k < 4; ++k)
            if (std::abs(dx[k]) > options.step_tolerance * (std::abs(x[k]) + options.step_tolerance))
                small = false;
        if (small)
        {
            fit.converged = true;
            ++fit.iterations;
            break;
        }
    }

    fit.params = as_params(x);
    fit.residual = std::sqrt(2.0 * cost / static_cast<double>(n));
    assemble(x);
    if (n > 4)
        fit.covariance = a.inverse() * (2.0 * cost / static_cast<double>(n - 4));
    if (fit.params.e_r < energies.front() || fit.params.e_r > energies.back())
        fit.converged = false;

    if (std::abs(fit.params.q) > options.mirror_q)
    {
        FanoParams start = fit.params;
        start.q = -start.q;
        FitOptions sub = options;
        sub.mirror_q = INFINITY;
        auto m = fano_fit(energies, sigma, start, sub);
        fit.mirror = m.params;
        fit.mirror_residual = m.residual;
    }
    return fit;
}

FanoFit fano_fit(CrossSections const& xs, ResonanceCandidate const& candidate,
                 FitOptions const& options)
{
    if (candidate.l < 0 || static_cast<std::size_t>(candidate.l) >= xs.partial.size())
        throw ConfigError("fano_fit: candidate l outside the cross-section table");
    std::vector<double> e, s;
    auto const& part = xs.partial[static_cast<std::size_t>(candidate.l)];
    for (std::size_t j = 0; j < xs.energies.size(); ++j)
        if (xs.energies[j] >= candidate.window_lo && xs.energies[j] <= candidate.window_hi)
        {
            e.push_back(xs.energies[j]);
            s.push_back(part[j]);
        }
    if (e.size() < 50)
        throw ConfigError("fano_fit: fewer than 50 points in the fit window for l="
                          + std::to_string(candidate.l));
    auto fit = fano_fit(e, s, initial_guess(e, s, candidate), options);
    fit.l = candidate.l;
    return fit;
}

FanoFit fit_resonance(PotentialTable const& potential, ScatterConfig const& config,
                      PhaseShiftScan const& scan, ResonanceCandidate const& candidate,
                      std::size_t points, FitOptions const& options)
{
    if (points < 50)
        throw ConfigError("fit_resonance: at least 50 window points required");
    if (candidate.l < 0 || candidate.l > scan.lmax)
        throw ConfigError("fit_resonance: candidate l outside the scan");
    auto l = static_cast<std::size_t>(candidate.l);
    std::vector<double> e(points), s(points);
    double step = (candidate.window_hi - candidate.window_lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i)
        e[i] = candidate.window_lo + step * static_cast<double>(i);
    auto delta = phase_on_window(potential, config, candidate.l, e, scan.levinson[l]);
    for (std::size_t i = 0; i < points; ++i)
        s[i] = partial_cross_section(candidate.l, std::sqrt(2.0 * e[i]), delta[i]);
    auto fit = fano_fit(e, s, initial_guess(e, s, candidate), options);
    fit.l = candidate.l;
    return fit;
}

void write_fit_report(std::vector<FanoFit> const& fits, Model model, std::ostream& os,
                      std::vector<std::string> const& header)
{
    for (auto const& h : header)
        os << "# " << h << '\n';
    os << "# model: " << to_string(model) << '\n';
    os << "# units: E_r and Gamma/2 in hartree, sigma0 and residual in bohr^2\n";
    os << "# columns: model l E_r q half_width sigma0 residual converged window_lo window_hi "
          "points\n";
    os << std::setprecision(8);
    for (auto const& f : fits)
    {
        os << to_string(model) << ' ' << f.l << ' ' << f.params.e_r << ' ' << f.params.q << ' '
           << f.params.half_width << ' ' << f.params.sigma0 << ' ' << f.residual << ' '
           << (f.converged ? "yes" : "no") << ' ' << f.window_lo << ' ' << f.window_hi << ' '
           << f.points << '\n';
        if (f.mirror)
            os << "# mirror l=" << f.l << " E_r=" << f.mirror->e_r << " q=" << f.mirror->q
               << " half_width=" << f.mirror->half_width << " sigma0=" << f.mirror->sigma0
               << " residual=" << f.mirror_residual << '\n';
    }
}

}  // namespace ews
