// Command-line front end: ews {scf|scan|delay|fit|reproduce} [options]

#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "ews/errors.hpp"
#include "ews/pipeline.hpp"

namespace
{

struct Common
{
    std::string config;
    std::string model;
    std::string out;
    bool force = false;
    std::string plots;
    std::optional<int> lmax;
    std::optional<double> emax;
};

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("--config", c.config, "run configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--model", c.model, "ASW, ASW-P, DFT, DFT-P or custom");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_flag("--force", c.force, "ignore cached results");
    cmd->add_option("--plots", c.plots, "write SVG plots (on/off)")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--lmax", c.lmax, "highest partial wave");
    cmd->add_option("--emax", c.emax, "highest scan energy, hartree");
}

ews::RunConfig resolve(Common const& c)
{
    ews::RunConfig cfg = c.config.empty() ? ews::RunConfig{} : ews::load_config(c.config);
    if (!c.model.empty())
    {
        cfg.model = ews::model_from_string(c.model);
        if (cfg.model != ews::Model::Custom)
            cfg.potential_file.clear();
    }
    if (!c.out.empty())
        cfg.output_dir = c.out;
    if (!c.plots.empty())
        cfg.plots = c.plots == "on";
    if (c.lmax)
        cfg.scatter.lmax = *c.lmax;
    if (c.emax)
        cfg.emax = *c.emax;
    cfg.finalize();
    return cfg;
}

template <class F>
int run(std::string const& name, Common const& c, F body)
{
    auto cfg = resolve(c);
    ews::RunManifest manifest(name, cfg);
    manifest.start();
    int code = ews::exit_ok;
    std::string message;
    try
    {
        code = body(cfg, manifest);
    }
    catch (ews::ScfNotConverged const& e)
    {
        code = ews::exit_scf_unconverged;
        message = e.what();
    }
    catch (ews::ConfigError const& e)
    {
        code = ews::exit_config;
        message = e.what();
    }
    catch (std::runtime_error const& e)
    {
        code = ews::exit_numerical;
        message = e.what();
    }
    manifest.finish(code, message);
    if (!message.empty())
        std::cerr << "ews " << name << ": " << message << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Electron scattering phase shifts, time delays and Fano fits"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("ews ") + ews::tool_version);

    Common common;
    auto* scf = app.add_subcommand("scf", "self-consistent jellium potential (DFT models)");
    auto* scan = app.add_subcommand("scan", "phase shifts and cross sections");
    auto* delay = app.add_subcommand("delay", "Eisenbud-Wigner-Smith time delays");
    auto* fit = app.add_subcommand("fit", "resonance detection and Fano fits");
    for (auto* cmd : {scf, scan, delay, fit})
        add_common(cmd, common);

    ews::ReproduceOptions rep;
    std::string rep_plots;
    auto* reproduce = app.add_subcommand("reproduce", "run the four presets and compare with reference values");
    reproduce->add_option("--out", rep.output_dir, "output directory");
    reproduce->add_flag("--force", rep.force, "ignore cached results");
    reproduce->add_option("--plots", rep_plots, "write SVG plots (on/off)")
        ->check(CLI::IsMember({"on", "off"}));
    reproduce->add_option("--only", rep.only, "restrict to one model family")
        ->check(CLI::IsMember({"asw", "dft"}));
    reproduce->add_option("--expected", rep.expected_file, "reference values file")
        ->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (scf->parsed())
            return run("scf", common, [&](ews::RunConfig const& cfg, ews::RunManifest& m) {
                auto out = ews::cmd_scf(cfg, m, common.force);
                std::cout << (out.cached ? "cached " : "") << "SCF in " << cfg.scf_path().string()
                          << ": V0=" << out.state.pseudo_potential << " HOMO=" << out.state.homo()
                          << " electrons=" << out.state.electron_count() << '\n';
                return ews::exit_ok;
            });
        if (scan->parsed())
            return run("scan", common, [&](ews::RunConfig const& cfg, ews::RunManifest& m) {
                auto out = ews::cmd_scan(cfg, m, common.force);
                std::cout << "scanned " << out.scan.size() << " energies, l <= " << out.scan.lmax
                          << " -> " << cfg.output_dir << '\n';
                return ews::exit_ok;
            });
        if (delay->parsed())
            return run("delay", common, [&](ews::RunConfig const& cfg, ews::RunManifest& m) {
                ews::cmd_delay(cfg, m, common.force);
                std::cout << "delays -> " << cfg.output_dir << "/delay.dat\n";
                return ews::exit_ok;
            });
        if (fit->parsed())
            return run("fit", common, [&](ews::RunConfig const& cfg, ews::RunManifest& m) {
                auto out = ews::cmd_fit(cfg, m, common.force);
                ews::write_fit_report(out.fits, cfg.model, std::cout);
                return out.all_converged() ? ews::exit_ok : ews::exit_fit_unconverged;
            });
        if (reproduce->parsed())
        {
            if (!rep_plots.empty())
                rep.plots = rep_plots == "on";
            auto results = ews::cmd_reproduce(rep, std::cout);
            int failed = 0;
            for (auto const& r : results)
                failed += !r.passed;
            std::cout << results.size() - static_cast<std::size_t>(failed) << " of "
                      << results.size() << " criteria passed\n";
            return failed ? ews::exit_criterion : ews::exit_ok;
        }
    }
    catch (ews::ScfNotConverged const& e)
    {
        std::cerr << "ews: " << e.what() << '\n';
        return ews::exit_scf_unconverged;
    }
    catch (ews::ConfigError const& e)
    {
        std::cerr << "ews: " << e.what() << '\n';
        return ews::exit_config;
    }
    catch (std::runtime_error const& e)
    {
        std::cerr << "ews: " << e.what() << '\n';
        return ews::exit_numerical;
    }
    return ews::exit_ok;
}
