#pragma once

#include "nanoflux/driver.hpp"
#include "nanoflux/mms.hpp"

#include <filesystem>

namespace nanoflux {

enum class RunMode { Solve, Mms, SweepEps, Check };

RunMode parse_mode(const std::string& s);

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fully resolved run configuration. load_config is strict: unknown keys are
/// rejected (with a nearest-key suggestion), every ModelParams invariant is
/// enforced at load time, referenced files must exist.
struct RunConfig {
    UniformGrid grid;
    ModelParams params;
    ContinuationSchedule schedule;
    PicardConfig picard;
    SubproblemOptions sub;
    StudyOptions study;

    RunMode mode = RunMode::Solve;
    std::string mms_case = "trig";
    std::vector<int> mms_grids;
    StudyKind mms_kind = StudyKind::Coupled;

    std::filesystem::path out_dir = "out";
    bool write_vtk = false;
    bool upwind = false;
    int threads = 1;
    int log_level = 1;          // 0 silent, 1 summary, 2 per-iteration
};

/// Parses a strict JSON document. Defaults applied where documented:
/// T_inf = 1, omega = 1, tol = 1e-8. Throws ConfigError with the offending
/// key or invariant in the message.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text,
                            const std::filesystem::path& base_dir);

// process exit codes, one per failure class
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitInvariant = 4;

/// Executes the selected mode, writes fields, the per-iteration diagnostics
/// stream and the final summary record (the summary is written even on
/// failure paths). Returns the process exit code.
int run(RunConfig cfg);

}  // namespace nanoflux
