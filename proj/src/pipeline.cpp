#include "ews/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ews/errors.hpp"
#include "ews/svg.hpp"

namespace fs = std::filesystem;

namespace ews
{

// ---------------------------------------------------------------------------
// Manifest

RunManifest::RunManifest(std::string command, RunConfig const& config)
    : command_(std::move(command)), config_(config)
{
}

void RunManifest::add_input(std::string const& path)
{
    inputs_.push_back({path, file_crc32(path)});
}

void RunManifest::add_output(std::string const& path)
{
    outputs_.push_back({path, file_crc32(path)});
}

void RunManifest::begin_stage(std::string const& name)
{
    if (!open_stage_.empty())
        end_stage();
    open_stage_ = name;
    stage_start_ = std::chrono::steady_clock::now();
}

void RunManifest::end_stage()
{
    if (open_stage_.empty())
        return;
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - stage_start_).count();
    stages_.push_back({open_stage_, s});
    open_stage_.clear();
}

void RunManifest::note(std::string const& key, std::string const& value)
{
    notes_.emplace_back(key, value);
}

std::string RunManifest::path() const
{
    return (config_.out() / ("manifest-" + command_ + ".json")).string();
}

std::string RunManifest::to_json() const
{
    nlohmann::ordered_json j;
    j["tool"] = "ews";
    j["version"] = tool_version;
    j["command"] = command_;
    j["model"] = to_string(config_.model);
    j["status"] = status_;
    j["exit_code"] = exit_code_;
    if (!message_.empty())
        j["message"] = message_;
    j["config_checksum"] = config_.checksum();
    j["config"] = config_.canonical();
    auto files = [](std::vector<File> const& v) {
        auto a = nlohmann::ordered_json::array();
        for (auto const& f : v)
            a.push_back({{"path", f.path}, {"crc32", f.crc32}});
        return a;
    };
    j["inputs"] = files(inputs_);
    j["outputs"] = files(outputs_);
    auto st = nlohmann::ordered_json::array();
    for (auto const& s : stages_)
        st.push_back({{"stage", s.name}, {"seconds", s.seconds}});
    j["stages"] = st;
    auto notes = nlohmann::ordered_json::object();
    for (auto const& [k, v] : notes_)
        notes[k] = v;
    j["notes"] = notes;
    return j.dump(2);
}

void RunManifest::write() const
{
    fs::create_directories(config_.out());
    std::ofstream os(path());
    if (!os)
        throw ConfigError("cannot write " + path());
    os << to_json() << '\n';
}

void RunManifest::start()
{
    status_ = "running";
    write();
}

void RunManifest::finish(int exit_code, std::string const& message)
{
    end_stage();
    exit_code_ = exit_code;
    message_ = message;
    status_ = exit_code == exit_ok ? "ok" : "failed";
    write();
}

std::vector<std::string> file_header(RunConfig const& config)
{
    return {std::string("ews ") + tool_version, "config-checksum: " + config.checksum()};
}

// ---------------------------------------------------------------------------
// Helpers

namespace
{

std::ofstream open_out(fs::path const& p)
{
    fs::create_directories(p.parent_path());
    std::ofstream os(p);
    if (!os)
        throw ConfigError("cannot write " + p.string());
    return os;
}

//! Value of "# config-checksum: X" in a data file header, or empty.
std::string stored_checksum(fs::path const& p)
{
    std::ifstream is(p);
    std::string line;
    while (std::getline(is, line) && !line.empty() && line[0] == '#')
        if (line.rfind("# config-checksum: ", 0) == 0)
            return line.substr(19);
    return {};
}

std::string read_text(fs::path const& p)
{
    std::ifstream is(p);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string label_l(int l)
{
    return "l=" + std::to_string(l);
}

}  // namespace

// ---------------------------------------------------------------------------
// SCF

ScfState load_scf_state(fs::path const& dir)
{
    ScfState s;
    s.potential = read_table((dir / "potential.dat").string());
    s.potential.model = Model::Dft;
    {
        std::ifstream is(dir / "density.dat");
        std::string line;
        while (std::getline(is, line))
        {
            if (line.empty() || line[0] == '#')
                continue;
            std::istringstream ls(line);
            double r, rho;
            if (!(ls >> r >> rho))
                throw ConfigError("density.dat: malformed line");
            s.density.push_back(rho);
        }
        if (s.density.size() != s.potential.size())
            throw ConfigError("density.dat: size does not match potential.dat");
    }
    {
        std::ifstream is(dir / "orbitals.dat");
        std::string line;
        while (std::getline(is, line))
        {
            if (line.empty() || line[0] == '#')
                continue;
            std::istringstream ls(line);
            Orbital o;
            if (!(ls >> o.l >> o.n_r >> o.energy >> o.occupation))
                throw ConfigError("orbitals.dat: malformed line");
            s.orbitals.push_back(std::move(o));
        }
    }
    {
        std::ifstream is(dir / "run.txt");
        std::string line;
        while (std::getline(is, line))
        {
            if (line.empty() || line[0] == '#')
                continue;
            std::istringstream ls(line);
            std::string key;
            ls >> key;
            if (key == "pseudo_potential")
                ls >> s.pseudo_potential;
            else if (key == "converged")
            {
                std::string v;
                ls >> v;
                s.converged = v == "yes";
            }
            else if (key == "iterations")
                ls >> s.iterations;
            else if (key == "residual")
            {
                int i;
                double r;
                ls >> i >> r;
                s.history.push_back(r);
            }
        }
    }
    return s;
}

ScfOutcome cmd_scf(RunConfig const& config, RunManifest& manifest, bool force)
{
    if (!config.is_dft())
        throw ConfigError("scf: needs the DFT or DFT-P model");
    auto dir = config.scf_path();
    auto stamp = dir / "checksum.txt";
    if (!force && fs::exists(stamp) && read_text(stamp) == config.scf_checksum() + '\n')
    {
        manifest.begin_stage("scf (cached)");
        auto s = load_scf_state(dir);
        manifest.end_stage();
        manifest.add_input((dir / "potential.dat").string());
        if (s.converged)
            return {std::move(s), true};
    }

    manifest.begin_stage(config.tune ? "scf tune" : "scf");
    fs::remove(stamp);
    ScfState state = config.tune ? tune_pseudopotential(config.scf) : scf_iterate(config.scf);
    manifest.end_stage();
    state.potential.model = Model::Dft;

    std::vector<std::string> header = {std::string("ews ") + tool_version, "model: DFT",
                                       "config-checksum: " + config.scf_checksum()};
    write_scf_state(state, dir.string(), header);
    for (auto const* f : {"potential.dat", "density.dat", "orbitals.dat", "run.txt"})
        manifest.add_output((dir / f).string());
    std::ostringstream note;
    note << "V0=" << state.pseudo_potential << " homo=" << state.homo()
         << " electrons=" << state.electron_count() << " iterations=" << state.iterations;
    manifest.note("scf", note.str());
    if (!state.converged)
    {
        std::ostringstream os;
        os << "SCF did not converge in " << state.iterations << " iterations (residual "
           << state.history.back() << ", tolerance " << config.scf.tolerance << ")";
        throw ScfNotConverged(state.history.back(), os.str());
    }
    open_out(stamp) << config.scf_checksum() << '\n';
    return {std::move(state), false};
}

PotentialTable model_potential(RunConfig const& config, RunManifest& manifest, bool force)
{
    PotentialTable base;
    switch (config.model)
    {
    case Model::Custom:
        manifest.add_input(config.potential_file);
        return read_table(config.potential_file);
    case Model::Asw:
    case Model::AswPol: base = build_asw(config.asw, config.grid); break;
    case Model::Dft:
    case Model::DftPol: base = cmd_scf(config, manifest, force).state.potential; break;
    }
    if (has_polarization(config.model))
    {
        auto pol = build_polarization(config.polarization, base.grid);
        return compose_effective(base, &pol);
    }
    return base;
}

// ---------------------------------------------------------------------------
// Scan, delay, fit

ScanOutcome cmd_scan(RunConfig const& config, RunManifest& manifest, bool force)
{
    ScanOutcome out;
    out.potential = model_potential(config, manifest, force);
    auto header = file_header(config);

    manifest.begin_stage("scan");
    out.scan = scan(out.potential, config.scatter);
    out.scan.model = config.model;
    out.xs = cross_sections(out.scan);
    manifest.end_stage();

    auto dir = config.out();
    {
        auto os = open_out(dir / "potential.dat");
        for (auto const& h : header)
            os << "# " << h << '\n';
        write_table(out.potential, os);
    }
    {
        auto os = open_out(dir / "scan.dat");
        write_scan(out.scan, os, header);
    }
    {
        auto os = open_out(dir / "xs.dat");
        write_cross_sections(out.xs, out.scan, os, header);
    }
    for (auto const* f : {"potential.dat", "scan.dat", "xs.dat"})
        manifest.add_output((dir / f).string());

    if (config.plots)
    {
        auto delay = ews_delay(out.scan);
        svg::Plot p;
        p.title = to_string(config.model) + " total cross section";
        p.x_label = "E (hartree)";
        p.y_label = "sigma (bohr^2)";
        p.log_y = true;
        p.series.push_back({"total", out.xs.energies, out.xs.total});
        for (auto const& c : detect(out.scan, delay, config.detect))
            p.markers.push_back({c.e_r, label_l(c.l)});
        svg::write(p, (dir / "xs.svg").string());
    }
    return out;
}

ScanOutcome load_or_scan(RunConfig const& config, RunManifest& manifest, bool force)
{
    auto dir = config.out();
    auto sp = dir / "scan.dat", pp = dir / "potential.dat", xp = dir / "xs.dat";
    if (!force && fs::exists(sp) && fs::exists(pp) && fs::exists(xp)
        && stored_checksum(sp) == config.checksum() && stored_checksum(pp) == config.checksum())
    {
        ScanOutcome out;
        std::ifstream is(sp);
        out.scan = read_scan(is);
        out.potential = read_table(pp.string());
        out.xs = cross_sections(out.scan);
        manifest.add_input(sp.string());
        manifest.add_input(pp.string());
        manifest.note("scan", "reused " + sp.string());
        return out;
    }
    return cmd_scan(config, manifest, force);
}

TimeDelayCurve cmd_delay(RunConfig const& config, RunManifest& manifest, bool force)
{
    auto s = load_or_scan(config, manifest, force);
    manifest.begin_stage("delay");
    auto curve = ews_delay(s.scan);
    average_delay(curve, s.xs);
    manifest.end_stage();

    auto dir = config.out();
    {
        auto os = open_out(dir / "delay.dat");
        write_delay(curve, config.model, os, file_header(config));
    }
    manifest.add_output((dir / "delay.dat").string());

    if (config.plots)
    {
        auto cands = detect(s.scan, curve, config.detect);
        svg::Plot p;
        p.title = to_string(config.model) + " time delay";
        p.x_label = "E (hartree)";
        p.y_label = "tau (as)";
        p.log_y = true;
        std::vector<int> shown;
        for (auto const& c : cands)
            if (std::find(shown.begin(), shown.end(), c.l) == shown.end())
            {
                shown.push_back(c.l);
                p.series.push_back({"tau " + label_l(c.l), curve.energies,
                                    curve.tau[static_cast<std::size_t>(c.l)]});
            }
        p.series.push_back({"tau avg", curve.energies, curve.average});
        for (auto const& c : cands)
            p.markers.push_back({c.e_r, label_l(c.l)});
        svg::write(p, (dir / "delay.svg").string());
    }
    return curve;
}

bool FitOutcome::all_converged() const
{
    return std::all_of(fits.begin(), fits.end(), [](FanoFit const& f) { return f.converged; });
}

FitOutcome cmd_fit(RunConfig const& config, RunManifest& manifest, bool force)
{
    auto s = load_or_scan(config, manifest, force);
    FitOutcome out;
    manifest.begin_stage("detect");
    auto delay = ews_delay(s.scan);
    out.candidates = detect(s.scan, delay, config.detect);
    manifest.begin_stage("fit");
    for (auto const& c : out.candidates)
    {
        try
        {
            out.fits.push_back(
                fit_resonance(s.potential, config.scatter, s.scan, c, config.fit_points, config.fit));
        }
        catch (NumericalError const& e)
        {
            FanoFit f;
            f.l = c.l;
            f.params = {c.e_r, 0, c.width / 2, 0};
            f.window_lo = c.window_lo;
            f.window_hi = c.window_hi;
            f.converged = false;
            out.fits.push_back(f);
            manifest.note("fit l=" + std::to_string(c.l), e.what());
        }
    }
    manifest.end_stage();

    auto dir = config.out();
    {
        auto os = open_out(dir / "fano.txt");
        write_fit_report(out.fits, config.model, os, file_header(config));
    }
    manifest.add_output((dir / "fano.txt").string());

    if (config.plots)
        for (auto const& f : out.fits)
        {
            auto l = static_cast<std::size_t>(f.l);
            svg::Series data{"sigma " + label_l(f.l), {}, {}}, model{"Fano fit", {}, {}};
            for (std::size_t j = 0; j < s.xs.energies.size(); ++j)
            {
                double e = s.xs.energies[j];
                if (e < f.window_lo || e > f.window_hi)
                    continue;
                data.x.push_back(e);
                data.y.push_back(s.xs.partial[l][j]);
            }
            int n = 400;
            for (int i = 0; i <= n; ++i)
            {
                double e = f.window_lo + (f.window_hi - f.window_lo) * i / n;
                model.x.push_back(e);
                model.y.push_back(fano_eval(f.params, e));
            }
            svg::Plot p;
            p.title = to_string(config.model) + ' ' + label_l(f.l) + " Fano profile";
            p.x_label = "E (hartree)";
            p.y_label = "sigma (bohr^2)";
            p.series = {data, model};
            p.markers.push_back({f.params.e_r, "E_r"});
            svg::write(p, (dir / ("fano_l" + std::to_string(f.l) + ".svg")).string());
        }
    return out;
}

}  // namespace ews
