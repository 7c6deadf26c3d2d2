// Acceptance run over all fifteen criteria. Reference values and tolerances
// are pinned here rather than read from data/expected.json, so this binary
// also guards that file.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ews/delay.hpp"
#include "ews/errors.hpp"
#include "ews/fano.hpp"
#include "ews/pipeline.hpp"
#include "ews/scattering.hpp"
#include "ews/scf.hpp"

using namespace ews;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace
{

struct ModelRun
{
    RunConfig config;
    ScanOutcome scan;
    FitOutcome fit;
};

struct Reference
{
    int l;
    double value;
};

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

class Report
{
  public:
    void add(int id, std::string const& what, bool ok, std::string const& detail)
    {
        std::cout << (ok ? "PASS " : "FAIL ") << id << ' ' << what << ": " << detail << std::endl;
        failures_ += ok ? 0 : 1;
    }
    int failures() const { return failures_; }

  private:
    int failures_ = 0;
};

//! Strongest candidate for l, or -1.
int strongest(FitOutcome const& f, int l)
{
    int best = -1;
    for (std::size_t i = 0; i < f.candidates.size(); ++i)
        if (f.candidates[i].l == l
            && (best < 0 || f.candidates[i].tau_peak > f.candidates[static_cast<std::size_t>(best)].tau_peak))
            best = static_cast<int>(i);
    return best;
}

std::vector<int> resonant_ls(FitOutcome const& f, double e_max)
{
    std::vector<int> ls;
    for (auto const& c : f.candidates)
        if (c.e_r > 0 && c.e_r <= e_max && std::find(ls.begin(), ls.end(), c.l) == ls.end())
            ls.push_back(c.l);
    std::sort(ls.begin(), ls.end());
    return ls;
}

std::string list(std::vector<int> const& v)
{
    std::string s = "{";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s + "}";
}

//! Checks one fitted quantity per l; appends to detail and returns pass.
bool check_values(FitOutcome const& f, std::vector<Reference> const& refs, double rel,
                  std::function<double(std::size_t)> const& value, std::string& detail,
                  std::map<int, bool>* per_l = nullptr)
{
    bool all = true;
    for (auto const& r : refs)
    {
        int i = strongest(f, r.l);
        bool ok = false;
        detail += " l=" + std::to_string(r.l) + ' ';
        if (i < 0)
            detail += "missing";
        else
        {
            double v = value(static_cast<std::size_t>(i));
            ok = std::abs(v - r.value) <= rel * std::abs(r.value);
            detail += fmt(v) + "/" + fmt(r.value) + (ok ? "" : "*");
        }
        if (per_l)
            (*per_l)[r.l] = ok;
        all = all && ok;
    }
    detail += " (tol " + fmt(100 * rel) + "%)";
    return all;
}

double asw_s_wave(double energy, double depth, double a, double b)
{
    double k = std::sqrt(2 * energy), kk = std::sqrt(2 * (energy + depth));
    double bs = std::sin(k * a) * std::sin(kk * a) + k / kk * std::cos(k * a) * std::cos(kk * a);
    double cs = std::sin(k * a) * std::cos(kk * a) - k / kk * std::cos(k * a) * std::sin(kk * a);
    double u = bs * std::sin(kk * b) + cs * std::cos(kk * b);
    double du = kk * (bs * std::cos(kk * b) - cs * std::sin(kk * b));
    return std::atan2(k * u, du) - k * b;
}

std::vector<double> log_energies(double lo, double hi, int n)
{
    std::vector<double> e(n);
    for (int i = 0; i < n; ++i)
        e[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return e;
}

}  // namespace

int main(int argc, char** argv)
{
    fs::path root = argc > 1 ? argv[1] : "acceptance_out";
    Report report;

    std::map<Model, ModelRun> runs;
    ScfState scf;
    for (Model m : {Model::Asw, Model::AswPol, Model::Dft, Model::DftPol})
    {
        ModelRun r;
        r.config.model = m;
        std::string dir = to_string(m);
        std::transform(dir.begin(), dir.end(), dir.begin(), ::tolower);
        r.config.output_dir = (root / dir).string();
        r.config.scf_dir = (root / "scf").string();
        r.config.plots = false;
        r.config.finalize();
        RunManifest manifest("acceptance", r.config);
        try
        {
            if (r.config.is_dft())
                scf = cmd_scf(r.config, manifest).state;
            r.scan = load_or_scan(r.config, manifest);
            cmd_delay(r.config, manifest);
            r.fit = cmd_fit(r.config, manifest);
        }
        catch (std::exception const& e)
        {
            std::cerr << to_string(m) << ": " << e.what() << std::endl;
            return exit_numerical;
        }
        runs.emplace(m, std::move(r));
    }
    auto const& asw = runs.at(Model::Asw).fit;
    auto const& aswp = runs.at(Model::AswPol).fit;
    auto const& dft = runs.at(Model::Dft).fit;
    auto const& dftp = runs.at(Model::DftPol).fit;
    auto e_r = [](FitOutcome const& f) { return [&f](std::size_t i) { return f.fits[i].params.e_r; }; };
    auto tau = [](FitOutcome const& f) { return [&f](std::size_t i) { return f.candidates[i].tau_peak; }; };

    {
        std::string d;
        bool ok = check_values(asw, {{3, 0.0092}, {4, 0.0795}, {5, 0.1620}}, 0.03, e_r(asw), d);
        report.add(1, "ASW resonance energies", ok, d);
    }
    {
        std::string d;
        bool ok = check_values(aswp, {{4, 0.0524}, {5, 0.1380}, {6, 0.2350}}, 0.03, e_r(aswp), d);
        report.add(2, "ASW-P resonance energies", ok, d);
    }
    {
        std::string d = "q";
        auto q = [&](std::size_t i) { return asw.fits[i].params.q; };
        bool ok = check_values(asw, {{3, 28.0}}, 0.25, q, d);
        d += "; G/2";
        ok = check_values(asw, {{3, 8e-5}}, 0.25, [&](std::size_t i) { return asw.fits[i].params.half_width; }, d) && ok;
        d += "; s0";
        ok = check_values(asw, {{3, 8.0}}, 0.25, [&](std::size_t i) { return asw.fits[i].params.sigma0; }, d) && ok;
        d += "; q";
        ok = check_values(asw, {{4, 2.69}, {5, 1.19}}, 0.15, q, d) && ok;
        report.add(3, "ASW Fano parameters", ok, d);
    }
    {
        std::string d = "ASW";
        bool ok = check_values(asw, {{3, 410456.2}}, 0.15, tau(asw), d);
        ok = check_values(asw, {{4, 4731.3}, {5, 1320.9}}, 0.10, tau(asw), d) && ok;
        d += "; ASW-P";
        ok = check_values(aswp, {{4, 11092.1}, {5, 1893.9}, {6, 751.1}}, 0.10, tau(aswp), d) && ok;
        report.add(4, "ASW-family resonant delays", ok, d);
    }
    {
        bool ok = true;
        std::string d;
        for (auto const* f : {&asw, &aswp})
        {
            auto ls = resonant_ls(*f, INFINITY);
            ok = ok && ls.size() >= 2;
            d += (f == &asw ? " ASW" : "; ASW-P");
            double prev = INFINITY;
            for (int l : ls)
            {
                double t = f->candidates[static_cast<std::size_t>(strongest(*f, l))].tau_peak;
                d += " l=" + std::to_string(l) + ':' + fmt(t);
                ok = ok && t < prev;
                prev = t;
            }
        }
        report.add(5, "delay decreases with l", ok, d);
    }

    std::map<int, bool> dft_ok, dftp_ok;
    {
        auto got = resonant_ls(dft, 0.5), gotp = resonant_ls(dftp, 0.5);
        bool ok = got == std::vector<int>{3, 4, 7, 8, 12} && gotp == std::vector<int>{1, 4, 7, 8, 12};
        std::string d = "DFT " + list(got) + " DFT-P " + list(gotp) + "; DFT";
        ok = check_values(dft, {{3, 0.0080}, {4, 0.0340}, {7, 0.1050}, {8, 0.2120}, {12, 0.3414}}, 0.15,
                          e_r(dft), d, &dft_ok)
             && ok;
        d += "; DFT-P";
        ok = check_values(dftp, {{4, 0.0258}, {7, 0.0818}, {8, 0.1920}, {12, 0.3109}}, 0.15, e_r(dftp), d,
                          &dftp_ok)
             && ok;
        int i = strongest(dftp, 1);
        bool near = i >= 0 && std::abs(dftp.fits[static_cast<std::size_t>(i)].params.e_r - 0.0013) <= 0.005;
        dftp_ok[1] = near;
        d += " l=1 " + (i < 0 ? std::string("missing") : fmt(dftp.fits[static_cast<std::size_t>(i)].params.e_r))
             + "/0.0013 (+/-0.005)";
        report.add(6, "DFT-family resonance sets and energies", ok && near, d);
    }
    {
        bool ok = true;
        int common = 0;
        std::string d;
        auto a = resonant_ls(dft, INFINITY), b = resonant_ls(dftp, INFINITY);
        for (int l : a)
        {
            if (std::find(b.begin(), b.end(), l) == b.end())
                continue;
            ++common;
            double e0 = dft.fits[static_cast<std::size_t>(strongest(dft, l))].params.e_r;
            double e1 = dftp.fits[static_cast<std::size_t>(strongest(dftp, l))].params.e_r;
            d += " l=" + std::to_string(l) + ' ' + fmt(e1) + "<" + fmt(e0);
            ok = ok && e1 < e0;
        }
        report.add(7, "polarization red-shifts DFT resonances", ok && common > 0, d);
    }
    {
        bool ok = true;
        std::string d;
        auto gated = [&](FitOutcome const& f, std::map<int, bool> const& gate, std::vector<Reference> refs,
                         std::string const& tag) {
            d += tag;
            for (auto const& r : refs)
            {
                if (!gate.count(r.l) || !gate.at(r.l))
                {
                    d += " l=" + std::to_string(r.l) + " gated";
                    continue;
                }
                ok = check_values(f, {r}, 0.25, tau(f), d) && ok;
            }
            double best = -INFINITY;
            int best_l = -1;
            for (auto const& c : f.candidates)
                if (c.e_r > 0 && c.e_r <= 0.5 && c.tau_peak > best)
                {
                    best = c.tau_peak;
                    best_l = c.l;
                }
            d += " max-delay l=" + std::to_string(best_l);
            ok = ok && best_l == 12;
        };
        gated(dft, dft_ok, {{3, 81602.4}, {4, 4128.5}, {7, 18799.3}, {8, 1634.1}, {12, 227293.7}}, "DFT");
        gated(dftp, dftp_ok, {{1, 29683.7}, {4, 8493.2}, {7, 65485.2}, {8, 2264.1}, {12, 237539.9}}, "; DFT-P");
        report.add(8, "DFT-family delays", ok, d);
    }

    {
        RadialGrid g;
        PotentialTable zero{g, std::vector<double>(g.size(), 0.0), Model::Custom, "zero"};
        ScatterConfig c;
        c.energies = ScatterConfig::uniform_energies(500, 0.5);
        auto s = scan(zero, c);
        auto d = ews_delay(s);
        double worst_d = 0, worst_t = 0;
        for (int l = 0; l <= c.lmax; ++l)
            for (std::size_t j = 0; j < s.size(); ++j)
            {
                worst_d = std::max(worst_d, std::abs(s.delta[l][j]));
                worst_t = std::max(worst_t, std::abs(d.tau[l][j]));
            }
        report.add(9, "free particle", worst_d <= 1e-8 && worst_t <= 1e-8,
                   "max|delta| " + fmt(worst_d) + " max|tau| " + fmt(worst_t) + " (tol 1e-8)");
    }
    {
        auto g = RadialGrid::with_spacing(0.0025, 28.0);
        AswParams p;
        auto v = build_asw(p, g);
        std::mt19937 rng(20240601);
        std::uniform_real_distribution<double> energy(1e-4, 0.5);
        double worst = 0;
        for (int i = 0; i < 100; ++i)
        {
            double e = energy(rng);
            double d = phase_shift(v, 0, e, 28.0, 28.5).absolute - asw_s_wave(e, p.depth, p.inner(), p.outer());
            worst = std::max(worst, std::abs(std::remainder(d, pi)));
        }
        report.add(10, "annular well s-wave closed form", worst <= 1e-6, "max error " + fmt(worst) + " rad (tol 1e-6)");
    }
    {
        RadialGrid g;
        auto v = build_asw({}, g);
        bool ok = true;
        std::string d;
        auto e = log_energies(1e-5, 1e-4, 25);
        for (int l : {1, 2})
        {
            std::vector<double> delta;
            for (double x : e)
                delta.push_back(phase_shift(v, l, x, 28.0, 28.5).reduced);
            double n = threshold_fit(e, delta, 1e-5, 1e-4).exponent;
            ok = ok && std::abs(n - (l + 0.5)) <= 0.1 * (l + 0.5);
            d += "l=" + std::to_string(l) + " delta~E^" + fmt(n) + "; ";
        }
        ScatterConfig c;
        c.lmax = 0;
        c.energies = log_energies(1e-5, 1e-4, 60);
        auto s = scan(v, c);
        auto t = ews_delay(s);
        double n0 = threshold_fit(t.energies, t.tau[0], 1e-5, 1e-4).exponent;
        ok = ok && std::abs(n0 + 0.5) <= 0.05;
        d += "l=0 tau~E^" + fmt(n0) + " (tol 10%)";
        report.add(11, "Wigner threshold law", ok, d);
    }
    {
        std::mt19937 rng(1234);
        std::uniform_real_distribution<double> er(0.01, 0.4), qd(-30, 30), lg(std::log(1e-4), std::log(3e-2)),
            ls(std::log(1.0), std::log(500.0)), jitter(-0.1, 0.1);
        int bad = 0;
        double worst = 0;
        for (int i = 0; i < 100; ++i)
        {
            FanoParams t{er(rng), qd(rng), std::exp(lg(rng)), std::exp(ls(rng))};
            std::vector<double> e, s;
            for (int k = 0; k < 201; ++k)
            {
                e.push_back(t.e_r + t.half_width * (-8 + 16.0 * k / 200));
                s.push_back(fano_eval(t, e.back()));
            }
            FanoParams guess{t.e_r + jitter(rng) * t.half_width, t.q * (1 + jitter(rng)),
                             t.half_width * (1 + jitter(rng)), t.sigma0 * (1 + jitter(rng))};
            auto f = fano_fit(e, s, guess);
            double err = std::max({std::abs(f.params.e_r - t.e_r) / t.e_r,
                                   std::abs(f.params.q - t.q) / std::max(std::abs(t.q), 1.0),
                                   std::abs(f.params.half_width - t.half_width) / t.half_width,
                                   std::abs(f.params.sigma0 - t.sigma0) / t.sigma0});
            worst = std::max(worst, err);
            bad += (!f.converged || err > 1e-6) ? 1 : 0;
        }
        report.add(12, "Fano round trip", bad == 0,
                   std::to_string(100 - bad) + "/100 draws, worst relative error " + fmt(worst) + " (tol 1e-6)");
    }
    {
        bool ok = true;
        std::string d;
        auto e = log_energies(1e-4, 1e-3, 10);
        for (auto const& [m, r] : runs)
        {
            bool pol = m == Model::AswPol || m == Model::DftPol;
            d += to_string(m) + ":";
            for (int l : {1, 2})
            {
                int wrong = 0;
                for (double x : e)
                {
                    double v = phase_shift(r.scan.potential, l, x, r.config.scatter.r1, r.config.scatter.r2).reduced;
                    wrong += (pol ? v > 0 : v < 0) ? 0 : 1;
                }
                d += " l=" + std::to_string(l) + (wrong ? " wrong sign" : " ok");
                ok = ok && wrong == 0;
            }
            d += "; ";
        }
        report.add(13, "polarization sign of near-threshold phases", ok, d);
    }
    {
        bool ok = true;
        std::size_t points = 0;
        double worst = 0;
        for (auto const& [m, r] : runs)
            for (std::size_t l = 0; l < r.scan.xs.partial.size(); ++l)
                for (std::size_t j = 0; j < r.scan.xs.energies.size(); ++j)
                {
                    double k = r.scan.xs.k[j];
                    double ratio = r.scan.xs.partial[l][j] / (4 * pi * (2.0 * l + 1) / (k * k));
                    worst = std::max(worst, ratio);
                    ok = ok && ratio <= 1 + 1e-12;
                    ++points;
                }
        report.add(14, "unitarity", ok, std::to_string(points) + " points, max sigma_l/bound " + fmt(worst));
    }
    {
        auto const& c = runs.at(Model::Dft).config;
        ScfConfig sc = c.scf;
        sc.jellium.pseudo_potential = scf.pseudo_potential;
        JelliumParams bare = sc.jellium;
        bare.pseudo_potential = 0;
        auto again = scf_iterate(build_jellium(bare, sc.grid), sc, &scf.density);
        double change = 0;
        for (std::size_t i = 0; i < scf.density.size(); ++i)
            change = std::max(change, std::abs(again.density[i] - scf.density[i]));
        double n = scf.electron_count();
        double res = scf.history.empty() ? INFINITY : scf.history.back();
        bool ok = std::abs(n - 240) <= 1e-4 && scf.converged && res < 1e-8 && again.converged
                  && again.iterations == 1 && change < 1e-8;
        report.add(15, "SCF", ok,
                   "electrons " + fmt(n) + " (240 +/- 1e-4) residual " + fmt(res) + " (< 1e-8) re-feed "
                       + std::to_string(again.iterations) + " iteration, max density change " + fmt(change));
    }

    std::cout << (report.failures() ? std::to_string(report.failures()) + " of 15 criteria failed" : "all 15 criteria passed")
              << std::endl;
    return report.failures() ? exit_criterion : exit_ok;
}
