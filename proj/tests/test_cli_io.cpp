#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "ews/errors.hpp"
#include "ews/pipeline.hpp"
#include "ews/svg.hpp"

using namespace ews;
namespace fs = std::filesystem;

namespace
{

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig parse(std::string const& text)
{
    std::istringstream is(text);
    return parse_config(is);
}

fs::path scratch(std::string const& name)
{
    auto p = fs::temp_directory_path() / ("ews_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

//! Custom-model config on a zero potential table.
RunConfig zero_config(fs::path const& dir)
{
    RadialGrid g;
    write_table(PotentialTable{g, std::vector<double>(g.size(), 0.0), Model::Custom, "zero"},
                (dir / "zero.dat").string());
    auto c = parse("[run]\nmodel = custom\npotential_file = " + (dir / "zero.dat").string()
                   + "\noutput_dir = " + (dir / "out").string()
                   + "\nplots = off\n[scatter]\nlmax = 4\nenergy_points = 200\n");
    return c;
}

}  // namespace

TEST(Config, DefaultsAndOverrides)
{
    auto c = parse("[run]\nmodel = DFT-P\n[scatter]\nlmax = 12\nemax = 0.3\n[jellium]\ncharge = 240\n");
    EXPECT_EQ(c.model, Model::DftPol);
    EXPECT_TRUE(c.is_dft());
    EXPECT_EQ(c.scatter.lmax, 12);
    EXPECT_DOUBLE_EQ(c.emax, 0.3);
    EXPECT_DOUBLE_EQ(c.asw.depth, 0.2599);
    EXPECT_EQ(c.scf.grid.size(), c.grid.size());
    EXPECT_DOUBLE_EQ(c.scatter.energies.back(), 0.3);
}

TEST(Config, CanonicalRoundTrip)
{
    auto c = parse("[run]\nmodel = ASW-P\n[asw]\ndepth = 0.31\n[jellium]\ncharge = 8\n"
                   "[scf]\noccupations = 0:0:2, 1:0:6\n"
                   "[fit]\nmirror_q = 12.5\n");
    auto text = c.canonical();
    auto back = parse(text);
    EXPECT_EQ(back.canonical(), text);
    EXPECT_EQ(back.checksum(), c.checksum());
    EXPECT_EQ(back.scf.occupations.size(), 2u);
}

TEST(Config, RejectsUnknownAndMalformed)
{
    EXPECT_THROW(parse("[run]\nmodle = ASW\n"), ConfigError);
    EXPECT_THROW(parse("[nonsense]\nx = 1\n"), ConfigError);
    EXPECT_THROW(parse("[asw]\ndepth = deep\n"), ConfigError);
    EXPECT_THROW(parse("[run]\nplots = maybe\n"), ConfigError);
    EXPECT_THROW(parse("[asw]\ndepth = -1\n"), ConfigError);
    EXPECT_THROW(parse("[run]\nmodel = custom\npotential_file = /nonexistent/v.dat\n"), ConfigError);
    EXPECT_THROW(parse("[run]\nmodel = ASW\npotential_file = v.dat\n"), ConfigError);
    EXPECT_THROW(parse("[scf]\noccupations = 0:0\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/run.ini"), ConfigError);
}

TEST(Checksum, PhysicsOnly)
{
    auto a = parse("[run]\nmodel = DFT\n");
    auto b = parse("[run]\nmodel = DFT\noutput_dir = elsewhere\nplots = off\n");
    EXPECT_EQ(a.checksum(), b.checksum());
    auto c = parse("[run]\nmodel = DFT\n[jellium]\ncharge = 238\n");
    EXPECT_NE(a.checksum(), c.checksum());
    EXPECT_NE(a.scf_checksum(), c.scf_checksum());
    // Scattering settings do not touch the SCF.
    auto d = parse("[run]\nmodel = DFT\n[scatter]\nlmax = 20\n");
    EXPECT_NE(a.checksum(), d.checksum());
    EXPECT_EQ(a.scf_checksum(), d.scf_checksum());
    EXPECT_EQ(parse("[run]\nmodel = DFT-P\n").scf_checksum(), a.scf_checksum());
}

TEST(Checksum, Crc32CheckValue)
{
    EXPECT_EQ(crc32_hex("123456789"), "cbf43926");
    EXPECT_EQ(crc32_hex(""), "00000000");
}

TEST(Svg, RendersSeriesAndMarkers)
{
    svg::Plot p;
    p.title = "demo & <test>";
    p.log_y = true;
    p.series.push_back({"sigma", {0.1, 0.2, 0.3}, {1.0, 0.0, 100.0}});
    p.markers.push_back({0.2, "l=3"});
    auto s = svg::render(p);
    EXPECT_EQ(s.rfind("<svg", 0), 0u);
    EXPECT_NE(s.find("</svg>"), std::string::npos);
    EXPECT_NE(s.find("&amp;"), std::string::npos);
    EXPECT_EQ(s.find("<test>"), std::string::npos);
    EXPECT_NE(s.find("l=3"), std::string::npos);
    EXPECT_NE(s.find("<polyline"), std::string::npos);
    EXPECT_THROW(svg::write(p, "/nonexistent/dir/x.svg"), ConfigError);
}

TEST(Manifest, RecordsStagesAndFiles)
{
    auto dir = scratch("manifest");
    auto c = parse("[run]\noutput_dir = " + dir.string() + "\n");
    RunManifest m("scan", c);
    std::ofstream(dir / "in.txt") << "123456789";
    m.add_input((dir / "in.txt").string());
    m.begin_stage("work");
    m.end_stage();
    m.note("detail", "x");
    m.start();
    EXPECT_TRUE(fs::exists(m.path()));
    EXPECT_NE(slurp(m.path()).find("\"running\""), std::string::npos);
    m.finish(exit_ok);
    auto j = slurp(m.path());
    EXPECT_NE(j.find("\"command\": \"scan\""), std::string::npos);
    EXPECT_NE(j.find("cbf43926"), std::string::npos);
    EXPECT_NE(j.find("\"work\""), std::string::npos);
    EXPECT_NE(j.find(c.checksum()), std::string::npos);
    EXPECT_NE(j.find("\"exit_code\": 0"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Pipeline, ZeroPotentialEndToEnd)
{
    auto dir = scratch("zero");
    auto c = zero_config(dir);
    RunManifest m("scan", c);
    auto s = cmd_scan(c, m);
    for (double x : s.xs.total)
        EXPECT_NEAR(x, 0.0, 1e-12);
    for (auto const* f : {"potential.dat", "scan.dat", "xs.dat"})
        EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
    EXPECT_FALSE(fs::exists(dir / "out" / "xs.svg"));

    RunManifest md("delay", c);
    auto d = cmd_delay(c, md);
    for (auto const& t : d.tau)
        for (double v : t)
            EXPECT_NEAR(v, 0.0, 1e-6);
    EXPECT_TRUE(fs::exists(dir / "out" / "delay.dat"));

    RunManifest mf("fit", c);
    auto f = cmd_fit(c, mf);
    EXPECT_TRUE(f.candidates.empty());
    EXPECT_TRUE(f.all_converged());
    EXPECT_TRUE(fs::exists(dir / "out" / "fano.txt"));
    fs::remove_all(dir);
}

TEST(Pipeline, RerunIsByteIdentical)
{
    auto dir = scratch("rerun");
    auto c = parse("[run]\nmodel = ASW\noutput_dir = " + (dir / "out").string()
                   + "\nplots = off\n[scatter]\nlmax = 5\nenergy_points = 300\n");
    RunManifest m1("scan", c);
    cmd_scan(c, m1, true);
    auto first = slurp(dir / "out" / "scan.dat");
    auto xs1 = slurp(dir / "out" / "xs.dat");
    RunManifest m2("scan", c);
    cmd_scan(c, m2, true);
    EXPECT_EQ(slurp(dir / "out" / "scan.dat"), first);
    EXPECT_EQ(slurp(dir / "out" / "xs.dat"), xs1);
    EXPECT_NE(first.find("# config-checksum: " + c.checksum()), std::string::npos);
    fs::remove_all(dir);
}

TEST(Pipeline, ScfCacheHit)
{
    auto dir = scratch("scfcache");
    auto c = parse("[run]\nmodel = DFT\noutput_dir = " + dir.string()
                   + "\n[jellium]\ncharge = 2\n[scf]\ntune = off\nsmearing = 0\n[grid]\npoints = 1024\n");
    RunManifest m1("scf", c);
    auto first = cmd_scf(c, m1);
    EXPECT_FALSE(first.cached);
    EXPECT_TRUE(first.state.converged);
    RunManifest m2("scf", c);
    auto second = cmd_scf(c, m2);
    EXPECT_TRUE(second.cached);
    ASSERT_EQ(second.state.potential.size(), first.state.potential.size());
    for (std::size_t i = 0; i < first.state.potential.size(); i += 31)
        EXPECT_DOUBLE_EQ(second.state.potential.values[i], first.state.potential.values[i]);
    RunManifest m3("scf", c);
    EXPECT_FALSE(cmd_scf(c, m3, true).cached);
    fs::remove_all(dir);
}

TEST(Reproduce, RejectsTamperedExpectations)
{
    auto dir = scratch("tamper");
    auto text = slurp(default_expected_file());
    auto pos = text.find("0.0795");
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, 6, "0.0800");
    std::ofstream(dir / "expected.json") << text;
    ReproduceOptions o;
    o.output_dir = (dir / "r").string();
    o.expected_file = (dir / "expected.json").string();
    std::ostringstream log;
    EXPECT_THROW(cmd_reproduce(o, log), ConfigError);
    o.expected_file = default_expected_file();
    o.only = "hf";
    EXPECT_THROW(cmd_reproduce(o, log), ConfigError);
    fs::remove_all(dir);
}

TEST(Reproduce, AswSubsetCoversAswCriteria)
{
    auto dir = scratch("repro_asw");
    ReproduceOptions o;
    o.output_dir = dir.string();
    o.only = "asw";
    o.plots = false;
    std::ostringstream log;
    auto results = cmd_reproduce(o, log);
    std::set<std::string> ids;
    for (auto const& r : results)
        ids.insert(r.id);
    EXPECT_EQ(ids, (std::set<std::string>{"1", "2", "3", "4", "5", "13", "14"}));
    EXPECT_TRUE(fs::exists(dir / "summary.txt"));
    EXPECT_TRUE(fs::exists(dir / "asw" / "fano.txt"));
    EXPECT_TRUE(fs::exists(dir / "asw-p" / "delay.dat"));
    fs::remove_all(dir);
}
