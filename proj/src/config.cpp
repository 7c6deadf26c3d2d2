#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ews/errors.hpp"
#include "ews/pipeline.hpp"

namespace ews
{

namespace
{

std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string const& key, std::string const& s)
{
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("config: '" + key + "' expects a number, got '" + s + "'");
    return v;
}

long long parse_integer(std::string const& key, std::string const& s)
{
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError("config: '" + key + "' expects an integer, got '" + s + "'");
    return v;
}

bool parse_bool(std::string const& key, std::string const& s)
{
    if (s == "true" || s == "on" || s == "yes" || s == "1")
        return true;
    if (s == "false" || s == "off" || s == "no" || s == "0")
        return false;
    throw ConfigError("config: '" + key + "' expects on/off, got '" + s + "'");
}

std::string format_occupations(std::vector<Occupation> const& occ)
{
    std::string out;
    for (auto const& o : occ)
    {
        if (!out.empty())
            out += ", ";
        out += std::to_string(o.l) + ':' + std::to_string(o.n_r) + ':' + format_double(o.electrons);
    }
    return out;
}

std::vector<Occupation> parse_occupations(std::string const& s)
{
    // "l:n_r:electrons, l:n_r:electrons, ..."
    std::vector<Occupation> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ','))
    {
        auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos)
            continue;
        auto e = item.find_last_not_of(" \t");
        item = item.substr(b, e - b + 1);
        auto c1 = item.find(':');
        auto c2 = item.find(':', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ConfigError("config: occupation entry '" + item + "' is not l:n_r:electrons");
        out.push_back({static_cast<int>(parse_integer("occupations", item.substr(0, c1))),
                       static_cast<int>(parse_integer("occupations", item.substr(c1 + 1, c2 - c1 - 1))),
                       parse_double("occupations", item.substr(c2 + 1))});
    }
    return out;
}

struct Field
{
    std::string section;
    std::string key;
    //! Location-only settings stay out of the checksum.
    bool physics;
    std::function<std::string(RunConfig const&)> get;
    std::function<void(RunConfig&, std::string const&)> set;
};

template <class Acc>
Field real(char const* section, char const* key, Acc acc)
{
    return {section, key, true,
            [acc](RunConfig const& c) { return format_double(acc(const_cast<RunConfig&>(c))); },
            [acc, key](RunConfig& c, std::string const& s) { acc(c) = parse_double(key, s); }};
}

template <class Acc>
Field integer(char const* section, char const* key, Acc acc)
{
    return {section, key, true,
            [acc](RunConfig const& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); },
            [acc, key](RunConfig& c, std::string const& s) {
                auto v = parse_integer(key, s);
                using T = std::remove_reference_t<decltype(acc(c))>;
                if (std::is_unsigned_v<T> && v < 0)
                    throw ConfigError(std::string("config: '") + key + "' must be non-negative");
                acc(c) = static_cast<T>(v);
            }};
}

template <class Acc>
Field boolean(char const* section, char const* key, bool physics, Acc acc)
{
    return {section, key, physics,
            [acc](RunConfig const& c) { return acc(const_cast<RunConfig&>(c)) ? "on" : "off"; },
            [acc, key](RunConfig& c, std::string const& s) { acc(c) = parse_bool(key, s); }};
}

template <class Acc>
Field text(char const* section, char const* key, bool physics, Acc acc)
{
    return {section, key, physics,
            [acc](RunConfig const& c) { return acc(const_cast<RunConfig&>(c)); },
            [acc](RunConfig& c, std::string const& s) { acc(c) = s; }};
}

std::vector<Field> const& fields()
{
    static std::vector<Field> const all = [] {
        std::vector<Field> f;
        f.push_back({"run", "model", true, [](RunConfig const& c) { return to_string(c.model); },
                     [](RunConfig& c, std::string const& s) { c.model = model_from_string(s); }});
        f.push_back(text("run", "potential_file", true,
                         [](RunConfig& c) -> std::string& { return c.potential_file; }));
        f.push_back(text("run", "output_dir", false,
                         [](RunConfig& c) -> std::string& { return c.output_dir; }));
        f.push_back(text("run", "scf_dir", false,
                         [](RunConfig& c) -> std::string& { return c.scf_dir; }));
        f.push_back(boolean("run", "plots", false, [](RunConfig& c) -> bool& { return c.plots; }));

        f.push_back({"grid", "r_max", true,
                     [](RunConfig const& c) { return format_double(c.grid.r_max()); },
                     [](RunConfig& c, std::string const& s) {
                         c.grid = RadialGrid(parse_double("r_max", s), c.grid.size());
                     }});
        f.push_back({"grid", "points", true,
                     [](RunConfig const& c) { return std::to_string(c.grid.size()); },
                     [](RunConfig& c, std::string const& s) {
                         auto n = parse_integer("points", s);
                         if (n < 3)
                             throw ConfigError("config: grid needs at least 3 points");
                         c.grid = RadialGrid(c.grid.r_max(), static_cast<std::size_t>(n));
                     }});

        f.push_back(real("asw", "depth", [](RunConfig& c) -> double& { return c.asw.depth; }));
        f.push_back(real("asw", "mean_radius",
                         [](RunConfig& c) -> double& { return c.asw.mean_radius; }));
        f.push_back(real("asw", "thickness",
                         [](RunConfig& c) -> double& { return c.asw.thickness; }));

        f.push_back(real("polarization", "alpha",
                         [](RunConfig& c) -> double& { return c.polarization.alpha; }));
        f.push_back(real("polarization", "cutoff",
                         [](RunConfig& c) -> double& { return c.polarization.cutoff; }));

        f.push_back(real("jellium", "mean_radius",
                         [](RunConfig& c) -> double& { return c.scf.jellium.mean_radius; }));
        f.push_back(real("jellium", "thickness",
                         [](RunConfig& c) -> double& { return c.scf.jellium.thickness; }));
        f.push_back(real("jellium", "charge",
                         [](RunConfig& c) -> double& { return c.scf.jellium.charge; }));
        f.push_back(real("jellium", "pseudo_potential",
                         [](RunConfig& c) -> double& { return c.scf.jellium.pseudo_potential; }));

        f.push_back(real("scf", "mixing", [](RunConfig& c) -> double& { return c.scf.mixing; }));
        f.push_back(integer("scf", "max_iterations",
                            [](RunConfig& c) -> int& { return c.scf.max_iterations; }));
        f.push_back(real("scf", "tolerance",
                         [](RunConfig& c) -> double& { return c.scf.tolerance; }));
        f.push_back(boolean("scf", "tune", true, [](RunConfig& c) -> bool& { return c.tune; }));
        f.push_back(real("scf", "target_ip",
                         [](RunConfig& c) -> double& { return c.scf.target_ip; }));
        f.push_back(real("scf", "ip_tolerance",
                         [](RunConfig& c) -> double& { return c.scf.ip_tolerance; }));
        f.push_back(real("scf", "smearing",
                         [](RunConfig& c) -> double& { return c.scf.smearing; }));
        f.push_back(integer("scf", "lmax_bound",
                            [](RunConfig& c) -> int& { return c.scf.lmax_bound; }));
        f.push_back({"scf", "occupations", true,
                     [](RunConfig const& c) { return format_occupations(c.scf.occupations); },
                     [](RunConfig& c, std::string const& s) {
                         c.scf.occupations = parse_occupations(s);
                     }});

        f.push_back(integer("scatter", "lmax", [](RunConfig& c) -> int& { return c.scatter.lmax; }));
        f.push_back(real("scatter", "r1", [](RunConfig& c) -> double& { return c.scatter.r1; }));
        f.push_back(real("scatter", "r2", [](RunConfig& c) -> double& { return c.scatter.r2; }));
        f.push_back(real("scatter", "emax", [](RunConfig& c) -> double& { return c.emax; }));
        f.push_back(integer("scatter", "energy_points",
                            [](RunConfig& c) -> std::size_t& { return c.energy_points; }));
        f.push_back(real("scatter", "max_phase_step",
                         [](RunConfig& c) -> double& { return c.scatter.max_phase_step; }));
        f.push_back(integer("scatter", "max_refine_levels",
                            [](RunConfig& c) -> int& { return c.scatter.max_refine_levels; }));

        f.push_back(real("detect", "min_phase_rise",
                         [](RunConfig& c) -> double& { return c.detect.min_phase_rise; }));
        f.push_back(real("detect", "max_span",
                         [](RunConfig& c) -> double& { return c.detect.max_span; }));
        f.push_back(real("detect", "peak_over_median",
                         [](RunConfig& c) -> double& { return c.detect.peak_over_median; }));
        f.push_back(real("detect", "background_half_width",
                         [](RunConfig& c) -> double& { return c.detect.background_half_width; }));
        f.push_back(real("detect", "window_factor",
                         [](RunConfig& c) -> double& { return c.detect.window_factor; }));

        f.push_back(integer("fit", "max_iterations",
                            [](RunConfig& c) -> int& { return c.fit.max_iterations; }));
        f.push_back(real("fit", "step_tolerance",
                         [](RunConfig& c) -> double& { return c.fit.step_tolerance; }));
        f.push_back(real("fit", "mirror_q", [](RunConfig& c) -> double& { return c.fit.mirror_q; }));
        f.push_back(integer("fit", "points",
                            [](RunConfig& c) -> std::size_t& { return c.fit_points; }));
        return f;
    }();
    return all;
}

std::string render(RunConfig const& config, std::set<std::string> const& sections,
                   bool physics_only)
{
    std::ostringstream os;
    std::string current;
    for (auto const& f : fields())
    {
        if (!sections.empty() && !sections.count(f.section))
            continue;
        if (physics_only && !f.physics)
            continue;
        if (f.section != current)
        {
            if (!current.empty())
                os << '\n';
            os << '[' << f.section << "]\n";
            current = f.section;
        }
        os << f.key << " = " << f.get(config) << '\n';
    }
    return os.str();
}

}  // namespace

std::string crc32_hex(std::string const& data)
{
    boost::crc_32_type crc;
    crc.process_bytes(data.data(), data.size());
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", crc.checksum());
    return buf;
}

std::string file_crc32(std::string const& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return crc32_hex(ss.str());
}

void RunConfig::finalize()
{
    scf.grid = grid;
    if (energy_points >= 1 && emax > 0)
        scatter.energies = ScatterConfig::uniform_energies(energy_points, emax);
    validate();
}

void RunConfig::validate() const
{
    if (output_dir.empty())
        throw ConfigError("config: output_dir must not be empty");
    if (model == Model::Custom)
    {
        if (potential_file.empty())
            throw ConfigError("config: custom model needs run.potential_file");
        if (!std::filesystem::exists(potential_file))
            throw ConfigError("config: potential file '" + potential_file + "' does not exist");
    }
    else if (!potential_file.empty())
        throw ConfigError("config: potential_file is only used by the custom model");
    asw.validate();
    polarization.validate();
    scf.validate();
    if (!(scf.grid == grid))
        throw ConfigError("config: call finalize() after changing the grid");
    if (!(emax > 0))
        throw ConfigError("config: emax must be positive");
    if (energy_points < 3)
        throw ConfigError("config: need at least 3 energies");
    scatter.validate(grid.r_max());
    if (!(detect.min_phase_rise >= 0) || !(detect.max_span > 0) || !(detect.peak_over_median >= 0)
        || !(detect.background_half_width > 0) || !(detect.window_factor > 0))
        throw ConfigError("config: detect thresholds must be non-negative and spans positive");
    if (fit.max_iterations < 1 || !(fit.step_tolerance > 0) || !(fit.mirror_q > 0))
        throw ConfigError("config: fit options must be positive");
    if (fit_points < 50)
        throw ConfigError("config: fit needs at least 50 window points");
}

std::filesystem::path RunConfig::scf_path() const
{
    return scf_dir.empty() ? out() / "scf" : std::filesystem::path(scf_dir);
}

std::string RunConfig::canonical() const
{
    return render(*this, {}, false);
}

std::string RunConfig::checksum() const
{
    return crc32_hex(render(*this, {}, true));
}

std::string RunConfig::scf_checksum() const
{
    return crc32_hex(render(*this, {"grid", "jellium", "scf"}, true));
}

RunConfig parse_config(std::istream& is)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try
    {
        pt::read_ini(is, tree);
    }
    catch (pt::ini_parser_error const& e)
    {
        throw ConfigError(std::string("config: ") + e.what());
    }

    RunConfig c;
    for (auto const& [section, body] : tree)
    {
        if (body.empty())
            throw ConfigError("config: key '" + section + "' outside a section");
        bool known_section = false;
        for (auto const& f : fields())
            known_section |= f.section == section;
        if (!known_section)
            throw ConfigError("config: unknown section [" + section + "]");
        for (auto const& [key, value] : body)
        {
            auto it = std::find_if(fields().begin(), fields().end(), [&](Field const& f) {
                return f.section == section && f.key == key;
            });
            if (it == fields().end())
                throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
            it->set(c, value.data());
        }
    }
    c.finalize();
    return c;
}

RunConfig load_config(std::string const& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot read config " + path);
    return parse_config(is);
}

}  // namespace ews
