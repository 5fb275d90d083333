#pragma once

#include "nanoflux/driver.hpp"
#include "nanoflux/invariants.hpp"

#include <filesystem>
#include <iosfwd>

namespace nanoflux {

// Text-first output formats. Cell fields go to whitespace-delimited text with
// a one-line header and full-precision decimals, so a write/read round trip
// reproduces the doubles bit-exactly and acceptance checks can diff files.

void write_cell_field(const std::filesystem::path& path, const CellField& a,
                      const std::string& name);
CellField read_cell_field(const std::filesystem::path& path, const UniformGrid& g);

/// Raw face components (two files: <stem>_x.txt, <stem>_y.txt).
void write_face_field(const std::filesystem::path& path_stem, const FaceField& w,
                      const std::string& name);
FaceField read_face_field(const std::filesystem::path& path_stem, const UniformGrid& g);

/// MAC velocity averaged to cell centers, for plotting.
void write_cell_centered_velocity(const std::filesystem::path& path, const FaceField& u);

/// Legacy structured-points volume file with phi, T, p and the cell-centered
/// velocity. Visualization convenience only; nothing load-bearing reads it.
void write_vtk(const std::filesystem::path& path, const SolverState& s);

/// One self-describing JSON record per line.
void append_diagnostics(std::ostream& os, const IterationRecord& rec);
void write_diagnostics(const std::filesystem::path& path,
                       const std::vector<IterationRecord>& recs);

struct RunSummary {
    std::string mode;
    bool ok = false;
    int exit_code = 0;
    std::string message;
    double final_epsilon = 0.0;
    int total_iterations = 0;
    WeakResidual residual;
    InvariantReport invariants;
};

void write_summary(const std::filesystem::path& path, const RunSummary& s);

}  // namespace nanoflux
