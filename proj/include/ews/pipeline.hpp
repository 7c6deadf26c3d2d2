#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ews/fano.hpp"
#include "ews/scf.hpp"

namespace ews
{

inline constexpr char const* tool_version = "1.0.0";

enum ExitCode : int
{
    exit_ok = 0,
    exit_config = 2,
    exit_numerical = 3,
    exit_scf_unconverged = 4,
    exit_fit_unconverged = 5,
    exit_criterion = 6,
};

struct RunConfig
{
    Model model = Model::Asw;
    //! Potential table read when model is custom.
    std::string potential_file;
    std::string output_dir = "out";
    //! Defaults to <output_dir>/scf.
    std::string scf_dir;
    bool plots = true;

    RadialGrid grid;
    AswParams asw;
    PolarizationParams polarization;
    //! The jellium block and grid live in here.
    ScfConfig scf;
    //! Tune the pseudo-potential to the target IP; otherwise use jellium.pseudo_potential as is.
    bool tune = true;
    ScatterConfig scatter;
    double emax = 0.5;
    std::size_t energy_points = 2000;
    DetectConfig detect;
    FitOptions fit;
    std::size_t fit_points = 201;

    //! Copies grid and energy settings into the module blocks and checks everything.
    void finalize();
    void validate() const;
    bool is_dft() const { return model == Model::Dft || model == Model::DftPol; }
    std::filesystem::path out() const { return output_dir; }
    std::filesystem::path scf_path() const;

    //! Every setting in fixed order, readable by parse_config.
    std::string canonical() const;
    std::string checksum() const;
    //! Checksum over the settings the SCF depends on.
    std::string scf_checksum() const;
};

//! Sectioned key = value text ([run], [grid], [asw], [polarization],
//! [jellium], [scf], [scatter], [detect], [fit]). Unknown sections or keys
//! are errors. Missing keys keep their defaults.
RunConfig parse_config(std::istream& is);
RunConfig load_config(std::string const& path);

//! CRC-32 as eight hex digits.
std::string crc32_hex(std::string const& data);
std::string file_crc32(std::string const& path);

class RunManifest
{
  public:
    RunManifest(std::string command, RunConfig const& config);

    void add_input(std::string const& path);
    void add_output(std::string const& path);
    void begin_stage(std::string const& name);
    void end_stage();
    void note(std::string const& key, std::string const& value);
    //! Writes with status "running".
    void start();
    void finish(int exit_code, std::string const& message = {});

    std::string path() const;
    std::string to_json() const;

  private:
    struct Stage
    {
        std::string name;
        double seconds;
    };
    struct File
    {
        std::string path;
        std::string crc32;
    };
    void write() const;

    std::string command_;
    RunConfig config_;
    std::vector<File> inputs_;
    std::vector<File> outputs_;
    std::vector<Stage> stages_;
    std::vector<std::pair<std::string, std::string>> notes_;
    std::string open_stage_;
    std::chrono::steady_clock::time_point stage_start_;
    std::string status_ = "created";
    int exit_code_ = 0;
    std::string message_;
};

//! Header lines for every data file: tool version, model, checksum.
std::vector<std::string> file_header(RunConfig const& config);

struct ScfOutcome
{
    ScfState state;
    bool cached = false;
};

//! Tuned (or fixed-V0) SCF for the jellium block, persisted under
//! config.scf_path(). A matching checksum on disk is reused unless forced.
ScfOutcome cmd_scf(RunConfig const& config, RunManifest& manifest, bool force = false);
ScfState load_scf_state(std::filesystem::path const& dir);

//! Effective potential of the selected model. DFT models go through cmd_scf.
PotentialTable model_potential(RunConfig const& config, RunManifest& manifest, bool force = false);

struct ScanOutcome
{
    PotentialTable potential;
    PhaseShiftScan scan;
    CrossSections xs;
};

//! Writes potential.dat, scan.dat, xs.dat and (with plots) xs.svg.
ScanOutcome cmd_scan(RunConfig const& config, RunManifest& manifest, bool force = false);

//! Loads scan.dat and potential.dat when their checksum matches, otherwise scans.
ScanOutcome load_or_scan(RunConfig const& config, RunManifest& manifest, bool force = false);

//! Writes delay.dat and (with plots) delay.svg.
TimeDelayCurve cmd_delay(RunConfig const& config, RunManifest& manifest, bool force = false);

struct FitOutcome
{
    std::vector<ResonanceCandidate> candidates;
    std::vector<FanoFit> fits;
    bool all_converged() const;
};

//! Detection and Fano fits across all l; writes fano.txt.
FitOutcome cmd_fit(RunConfig const& config, RunManifest& manifest, bool force = false);

struct CriterionResult
{
    std::string id;
    std::string description;
    bool passed;
    std::string detail;
};

struct ReproduceOptions
{
    std::string output_dir = "reproduce";
    std::string expected_file;
    //! Restrict to one model family: "", "asw" or "dft".
    std::string only;
    bool plots = true;
    bool force = false;
};

//! Runs the four presets and compares with the bundled expected values.
std::vector<CriterionResult> cmd_reproduce(ReproduceOptions const& options, std::ostream& log);

//! Default location of the expected-values file.
std::string default_expected_file();

}  // namespace ews
