#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ews/delay.hpp"
#include "ews/errors.hpp"
#include "ews/scattering.hpp"
#include "ews/scf.hpp"

using namespace ews;
using std::numbers::pi;

namespace
{

PotentialTable zero_potential(RadialGrid const& g)
{
    return PotentialTable{g, std::vector<double>(g.size(), 0.0), Model::Custom, "zero"};
}

// Closed-form l = 0 phase shift of the annular well -U on [a, b].
double asw_s_wave(double energy, double depth, double a, double b)
{
    double k = std::sqrt(2 * energy), kk = std::sqrt(2 * (energy + depth));
    double bs = std::sin(k * a) * std::sin(kk * a) + k / kk * std::cos(k * a) * std::cos(kk * a);
    double cs = std::sin(k * a) * std::cos(kk * a) - k / kk * std::cos(k * a) * std::sin(kk * a);
    double u = bs * std::sin(kk * b) + cs * std::cos(kk * b);
    double du = kk * (bs * std::cos(kk * b) - cs * std::sin(kk * b));
    return std::atan2(k * u, du) - k * b;
}

double mod_pi(double x)
{
    return std::remainder(x, pi);
}

std::vector<double> log_energies(double lo, double hi, int n)
{
    std::vector<double> e(n);
    for (int i = 0; i < n; ++i)
        e[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    return e;
}

}  // namespace

TEST(FreeParticle, ZeroPhaseAndDelayEverywhere)
{
    RadialGrid g;
    auto v = zero_potential(g);
    ScatterConfig c;
    c.energies = ScatterConfig::uniform_energies(200, 0.5);
    auto s = scan(v, c);
    auto d = ews_delay(s);
    for (int l = 0; l <= c.lmax; ++l)
    {
        EXPECT_EQ(s.levinson[l], 0);
        for (std::size_t j = 0; j < s.size(); ++j)
        {
            ASSERT_NEAR(s.delta[l][j], 0.0, 1e-8) << "l=" << l << " E=" << s.energies[j];
            ASSERT_NEAR(d.tau[l][j], 0.0, 1e-8);
        }
    }
}

double worst_s_wave_error(double spacing)
{
    auto g = RadialGrid::with_spacing(spacing, 28.0);
    AswParams p;
    auto v = build_asw(p, g);
    std::mt19937 rng(20240601);
    std::uniform_real_distribution<double> energy(1e-4, 0.5);
    double worst = 0;
    for (int i = 0; i < 100; ++i)
    {
        double e = energy(rng);
        auto r = phase_shift(v, 0, e, 28.0, 28.5);
        worst = std::max(worst, std::abs(mod_pi(r.absolute - asw_s_wave(e, p.depth, p.inner(), p.outer()))));
    }
    return worst;
}

TEST(AnnularWell, SWaveMatchesClosedForm)
{
    // 0.0025 spacing puts both shell edges on mesh points.
    EXPECT_LT(worst_s_wave_error(0.0025), 1e-6);
}

TEST(AnnularWell, SecondOrderInSpacing)
{
    double ratio = worst_s_wave_error(0.005) / worst_s_wave_error(0.0025);
    EXPECT_GT(ratio, 3.0);
    EXPECT_LT(ratio, 5.0);
}

TEST(AnnularWell, ReducedPhaseRange)
{
    RadialGrid g;
    auto v = build_asw({}, g);
    for (int l = 0; l < 6; ++l)
    {
        auto r = phase_shift(v, l, 0.1, 28.0, 28.5);
        EXPECT_GT(r.reduced, -pi / 2);
        EXPECT_LE(r.reduced, pi / 2);
        EXPECT_NEAR(mod_pi(r.absolute - r.reduced), 0.0, 1e-12);
    }
}

TEST(PhaseExtraction, IndependentOfNormalization)
{
    RadialGrid g;
    auto v = build_asw({}, g);
    for (int l : {0, 3, 9})
    {
        auto a = numerov_integrate(v, l, 0.07, 28.5);
        auto b = a;
        b.rescale(-3.7e5);
        auto ra = extract_phase_shift(a, 28.0, 28.5);
        auto rb = extract_phase_shift(b, 28.0, 28.5);
        EXPECT_NEAR(ra.absolute, rb.absolute, 1e-12);
    }
}

TEST(PhaseExtraction, IndependentOfMatchingRadii)
{
    RadialGrid g;
    auto v = compose_effective(build_asw({}, g), nullptr);
    for (int l : {0, 2, 5, 10})
        for (double e : {0.003, 0.08, 0.4})
        {
            auto a = phase_shift(v, l, e, 28.0, 28.5);
            auto b = phase_shift(v, l, e, 29.3, 33.1);
            EXPECT_NEAR(mod_pi(a.absolute - b.absolute), 0.0, 1e-7) << "l=" << l << " E=" << e;
        }
}

TEST(Scan, LevinsonCountsBoundStates)
{
    RadialGrid g;
    auto v = build_asw({}, g);
    ScatterConfig c;
    c.lmax = 6;
    c.energies = ScatterConfig::uniform_energies(400, 0.5);
    auto s = scan(v, c);
    // Unpinned threshold phase is N pi for N bound states.
    for (int l = 0; l <= c.lmax; ++l)
        EXPECT_EQ(std::lround(s.delta[l][0] / pi) + s.levinson[l], count_states_below(v, l, -1e-9))
            << "l=" << l;
}

TEST(Scan, RefinementBoundsPhaseSteps)
{
    RadialGrid g;
    auto v = build_asw({}, g);
    ScatterConfig c;
    c.lmax = 5;
    c.energies = ScatterConfig::uniform_energies(100, 0.5);
    auto s = scan(v, c);
    EXPECT_GT(s.size(), 100u);
    for (std::size_t j = 1; j < s.size(); ++j)
        for (int l = 0; l <= c.lmax; ++l)
            ASSERT_LE(std::abs(s.delta[l][j] - s.delta[l][j - 1]), pi / 2);
}

TEST(Scan, WindowPhasesAgreeWithScan)
{
    RadialGrid g;
    auto v = build_asw({}, g);
    ScatterConfig c;
    c.lmax = 5;
    c.energies = ScatterConfig::uniform_energies(300, 0.5);
    auto s = scan(v, c);
    for (int l : {3, 5})
    {
        std::vector<double> e = {s.energies[10], s.energies[150], s.energies[s.size() - 1]};
        auto d = phase_on_window(v, c, l, e, s.levinson[l]);
        EXPECT_NEAR(d[0], s.delta[l][10], 1e-9);
        EXPECT_NEAR(d[1], s.delta[l][150], 1e-9);
        EXPECT_NEAR(d[2], s.delta[l].back(), 1e-9);
    }
}

TEST(CrossSections, UnitarityBound)
{
    RadialGrid g;
    for (bool pol : {false, true})
    {
        auto v = build_asw({}, g);
        auto p = build_polarization({}, g);
        if (pol)
            v = compose_effective(v, &p);
        ScatterConfig c;
        c.energies = ScatterConfig::uniform_energies(500, 0.5);
        auto xs = cross_sections(scan(v, c));
        for (std::size_t l = 0; l < xs.partial.size(); ++l)
            for (std::size_t j = 0; j < xs.energies.size(); ++j)
            {
                double bound = 4 * pi * (2.0 * l + 1) / (xs.k[j] * xs.k[j]);
                ASSERT_LE(xs.partial[l][j], bound * (1 + 1e-12));
                ASSERT_GE(xs.partial[l][j], 0.0);
            }
        for (std::size_t j = 0; j < xs.energies.size(); j += 50)
        {
            double sum = 0;
            for (auto const& pl : xs.partial)
                sum += pl[j];
            EXPECT_NEAR(xs.total[j], sum, 1e-12 * sum);
        }
    }
}

TEST(CrossSections, PartialFormula)
{
    double k = 0.3, d = 0.9;
    EXPECT_NEAR(partial_cross_section(2, k, d), 4 * pi * 5 * std::sin(d) * std::sin(d) / (k * k), 1e-12);
    EXPECT_NEAR(partial_cross_section(2, k, d + 3 * pi), partial_cross_section(2, k, d), 1e-9);
}

class Threshold : public ::testing::TestWithParam<int>
{
};

TEST_P(Threshold, WignerExponent)
{
    int l = GetParam();
    RadialGrid g;
    auto v = build_asw({}, g);
    auto e = log_energies(1e-5, 1e-4, 25);
    std::vector<double> d;
    for (double x : e)
        d.push_back(phase_shift(v, l, x, 28.0, 28.5).reduced);
    auto fit = threshold_fit(e, d, 1e-5, 1e-4);
    EXPECT_NEAR(fit.exponent, l + 0.5, 0.1 * (l + 0.5));
}

INSTANTIATE_TEST_SUITE_P(Waves, Threshold, ::testing::Values(1, 2));

TEST(ThresholdDelay, SWaveSlope)
{
    RadialGrid g;
    auto v = build_asw({}, g);
    ScatterConfig c;
    c.lmax = 0;
    c.energies = log_energies(1e-5, 1e-4, 60);
    auto s = scan(v, c);
    auto d = ews_delay(s);
    auto fit = threshold_fit(d.energies, d.tau[0], 1e-5, 1e-4);
    EXPECT_NEAR(fit.exponent, -0.5, 0.05);
}

TEST(Polarization, ThresholdSign)
{
    RadialGrid g;
    auto asw = build_asw({}, g);
    auto pol = build_polarization({}, g);
    auto aswp = compose_effective(asw, &pol);
    for (int l : {1, 2})
        for (double e : log_energies(1e-4, 1e-3, 10))
        {
            EXPECT_LT(phase_shift(asw, l, e, 28.0, 28.5).reduced, 0.0) << "l=" << l << " E=" << e;
            EXPECT_GT(phase_shift(aswp, l, e, 28.0, 28.5).reduced, 0.0) << "l=" << l << " E=" << e;
        }
}

TEST(Scan, FileRoundTrip)
{
    RadialGrid g;
    auto v = build_asw({}, g);
    ScatterConfig c;
    c.lmax = 4;
    c.energies = ScatterConfig::uniform_energies(50, 0.3);
    auto s = scan(v, c);
    std::stringstream ss;
    write_scan(s, ss, {"test header"});
    auto back = read_scan(ss);
    EXPECT_EQ(back.model, Model::Asw);
    EXPECT_EQ(back.lmax, 4);
    EXPECT_EQ(back.levinson, s.levinson);
    EXPECT_EQ(back.r1, 28.0);
    EXPECT_EQ(back.grid_points, g.size());
    ASSERT_EQ(back.size(), s.size());
    for (int l = 0; l <= 4; ++l)
        for (std::size_t j = 0; j < s.size(); ++j)
            EXPECT_EQ(back.delta[l][j], s.delta[l][j]);
}

TEST(ScatterConfig, Validation)
{
    ScatterConfig c;
    EXPECT_NO_THROW(c.validate(28.0));
    EXPECT_THROW(c.validate(30.0), ConfigError);
    c.lmax = -1;
    EXPECT_THROW(c.validate(28.0), ConfigError);
    c.lmax = 3;
    c.energies = {0.1, -0.2};
    EXPECT_THROW(c.validate(28.0), ConfigError);
    c.energies = {0.1};
    c.max_phase_step = 2.0;
    EXPECT_THROW(c.validate(28.0), ConfigError);
}
