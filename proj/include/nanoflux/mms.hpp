#pragma once

#include "nanoflux/driver.hpp"

namespace nanoflux {

/// Closed-form solution fields for verification, together with every partial
/// derivative the strong equations need. The velocity derives from a stream
/// function, so it is solenoidal identically; the fraction field stays inside
/// a closed subinterval of (0,1); temperature and velocity vanish on the
/// boundary of the unit square.
struct ManufacturedCase {
    std::string name;

    std::function<double(double, double)> phi, T, ux, uy, p;
    // first and second partials (xy = mixed)
    std::function<double(double, double)> phi_x, phi_y, phi_xx, phi_yy;
    std::function<double(double, double)> T_x, T_y, T_xx, T_yy;
    std::function<double(double, double)> ux_x, ux_y, ux_xx, ux_yy, ux_xy;
    std::function<double(double, double)> uy_x, uy_y, uy_xx, uy_yy, uy_xy;
    std::function<double(double, double)> p_x, p_y;

    CellField sample_phi(const UniformGrid& g) const;
    CellField sample_T(const UniformGrid& g) const;
    FaceField sample_u(const UniformGrid& g) const;
    CellField sample_p(const UniformGrid& g) const;
};

/// phi = 1/2 + sin(pi x) sin(pi y)/4, T = sin(pi x) sin(pi y),
/// u = curl of sin^2(pi x) sin^2(pi y)/pi, p = cos(pi x) cos(pi y).
ManufacturedCase trig_case();

/// phi = c, T = 0, u = 0, p = 0; all forcings vanish.
ManufacturedCase constant_case(double c = 0.3);

struct ManufacturedForcing {
    CellField f;        // temperature source
    FaceField g;        // body force
    BoundaryData b;     // fraction trace
    FractionSource q;   // fraction source (zero only for special cases)
};

/// Substitutes the exact fields into the unregularized strong equations
/// (plain cutoff, normalized enthalpy/density factors) and samples the
/// residual forcings on the grid.
ManufacturedForcing manufactured_forcing(const ManufacturedCase& c,
                                         const UniformGrid& g,
                                         const ModelParams& coeffs);

/// Same forcings from high-order central differences of the primitive fields
/// alone; shares no derivative formulas with the closed-form path. The two
/// paths must agree to 1e-8 before a study runs.
ManufacturedForcing manufactured_forcing_fd(const ManufacturedCase& c,
                                            const UniformGrid& g,
                                            const ModelParams& coeffs);

/// Max pointwise gap between the closed-form and finite-difference forcings.
double forcing_paths_gap(const ManufacturedCase& c, const UniformGrid& g,
                         const ModelParams& coeffs);

enum class StudyKind {
    Poisson,        // -lap T = f, pure 5-point check
    Fraction,       // decoupled fraction advection-diffusion solve
    Temperature,    // decoupled temperature solve, unmollified coefficients
    Stokes,         // constant-viscosity Stokes, no transport
    Coupled,        // full driver with the regularized map
};

enum class EpsPolicy { Fixed, ProportionalToH };

struct StudyLevel {
    int n = 0;
    double h = 0.0;
    double err_phi = 0.0, err_T = 0.0, err_u = 0.0, err_p = 0.0;
    int picard_iters = 0;
};

struct StudyResult {
    std::vector<StudyLevel> levels;
    double order_phi = 0.0, order_T = 0.0, order_u = 0.0, order_p = 0.0;
    bool completed = true;
};

struct StudyOptions {
    EpsPolicy policy = EpsPolicy::ProportionalToH;
    double eps_fixed = 0.25;
    double eps_per_h = 2.0;      // eps = eps_per_h * h when proportional
    double picard_tol = 1e-9;
    int picard_max_iters = 80;
    AdvectScheme scheme = AdvectScheme::Centered;
};

/// Runs the chosen solve on each grid, compares with the exact fields in the
/// discrete L2 norm and returns least-squares log-log slopes. Needs at least
/// three grids refined by 2. Validates the two forcing paths first; any
/// non-convergence aborts with the levels completed so far.
StudyResult convergence_study(const ManufacturedCase& c, StudyKind kind,
                              const std::vector<int>& grids,
                              const ModelParams& coeffs,
                              const StudyOptions& opt = {});

}  // namespace nanoflux
