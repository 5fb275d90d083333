#pragma once

#include "nanoflux/linsys.hpp"
#include "nanoflux/operators.hpp"
#include "nanoflux/params.hpp"
#include "nanoflux/regularization.hpp"

namespace nanoflux {

/// Iterate of the fixed-point map: fields plus the regularization radius they
/// were produced with. Accepted iterates keep phi inside [0,1] up to
/// bound_tol and the velocity divergence at solver tolerance.
struct SolverState {
    CellField phi;
    CellField T;
    FaceField u;
    CellField p;
    double epsilon = 0.0;

    static SolverState initial(const UniformGrid& g, const ModelParams& params,
                               double epsilon);
};

struct SubproblemOptions {
    AdvectScheme scheme = AdvectScheme::Centered;
    LinearSolverOptions linear;
    double bound_tol = 1e-10;
    /// Certification threshold for ||div(phi w + j)||_inf, as a multiple of
    /// the linear solver tolerance (scaled by the rhs magnitude).
    double flux_cert_factor = 10.0;
};

/// Transport field of the regularized problem: the mollified velocity with
/// its normal trace zeroed and the discrete gradient part projected out.
/// Exact convolution preserves solenoidality; the discrete one does not, so
/// the projection restores it.
FaceField transport_field(const FaceField& u, const MollifierKernel& kernel,
                          double* div_before = nullptr);

/// Thermophoretic face flux coefficient: cutoff_smooth(phi) averaged to faces
/// (trace value on boundary faces) times grad(mollify(T))/T_inf. Built once
/// per map application; the fraction solve and the flux assembly must share
/// it for the certification identity to hold.
FaceField thermophoretic_gradient(const CellField& T, const MollifierKernel& kernel);
FaceField cutoff_on_faces(const CellField& phi, const BoundaryData& b, double eps);

struct FractionSolve {
    CellField phi_new;        // Dirichlet data b attached
    double solver_residual;   // pointwise equation residual, inf norm
};

/// Advection-diffusion solve for the new fraction field:
///   advect(w, phi~) - lap(phi~) = div(S) + q,  phi~ = b on the boundary,
/// with S the thermophoretic flux coefficient evaluated at the *input* state.
FractionSolve solve_fraction(const CellField& phi_old, const FaceField& w,
                             const FaceField& S, const ModelParams& params,
                             const SubproblemOptions& opt,
                             const FractionSource& q = {});

struct FluxResult {
    FaceField j;              // particle flux: -grad(phi~) - S
    FaceField F;              // phi~ * w + j, the conserved transport
    double div_F_inf = 0.0;   // measured ||div F - q||_inf
    double cert_threshold = 0.0;
};

/// Builds the particle flux and the conserved transport F, and certifies
/// ||div F - q||_inf against the fraction-system residual. The face values of
/// phi~ match the advection scheme used in solve_fraction, which makes
/// div F - q equal that residual identically; a certification failure
/// therefore means inconsistent assembly, and throws.
FluxResult compute_flux(const CellField& phi_new, const FaceField& w,
                        const FaceField& S, const SubproblemOptions& opt,
                        const FractionSource& q = {});

struct ScalarSolve {
    CellField field;
    double solver_residual;
};

/// Temperature solve:
///   -div( mollify(k(phi)) grad T~ ) + advect(w, T~) + advect(F, T~) = f
/// with zero Dirichlet data. k is extended by k(0) outside the domain before
/// convolution, so the mollified coefficient never drops below k0. The two
/// advection terms realize the conservative enthalpy transport split against
/// the certified F.
ScalarSolve solve_temperature(const CellField& phi_old, const FaceField& w,
                              const FluxResult& flux, const ModelParams& params,
                              const MollifierKernel& kernel,
                              const SubproblemOptions& opt);

struct MomentumSolve {
    FaceField u;
    CellField p;              // pinned at cell (0,0), reported zero-mean
    double solver_residual;
};

/// Variable-viscosity Stokes-with-convection saddle solve:
///   -div( mollify(mu(phi))/2 * D(u~) ) + advect_vec(w, u~) + advect_vec(F, u~)
///       + grad p = g - beta T e_g,   div u~ = 0,  no slip,
/// with the full symmetric-gradient stress (cell normal stresses, nodal shear
/// stresses) assembled variationally so the viscous block is symmetric
/// positive definite. Viscosity and buoyancy use the *input* fraction and
/// temperature; the new fraction enters through F. Momentum advection is
/// always centered; it carries the skew structure the energy estimate needs.
MomentumSolve solve_momentum(const CellField& phi_old, const CellField& T_old,
                             const FaceField& w, const FluxResult& flux,
                             const ModelParams& params, const MollifierKernel& kernel,
                             const SubproblemOptions& opt);

// --- assembly entry points shared with the oracle tests -------------------

LinearSystem assemble_fraction_system(const CellField& phi_old, const FaceField& w,
                                      const FaceField& S, const ModelParams& params,
                                      const SubproblemOptions& opt,
                                      const FractionSource& q);
/// -div(kf grad v) + sum_i advect(transport_i, v) = rhs with zero Dirichlet
/// data; the building block of the temperature system and the verification
/// studies.
LinearSystem assemble_scalar_system(const FaceField& kf,
                                    const std::vector<const FaceField*>& transports,
                                    const CellField& rhs, AdvectScheme scheme,
                                    std::string label);
LinearSystem assemble_temperature_system(const CellField& phi_old, const FaceField& w,
                                         const FluxResult& flux, const ModelParams& params,
                                         const MollifierKernel& kernel,
                                         const SubproblemOptions& opt);
/// Saddle system with unknowns [ux; uy; p]; continuity written as -div u = 0
/// so the (u,p) coupling is symmetric, pressure pinned at cell (0,0).
LinearSystem assemble_momentum_system(const CellField& phi_old, const CellField& T_old,
                                      const FaceField& w, const FluxResult& flux,
                                      const ModelParams& params, const MollifierKernel& kernel,
                                      const SubproblemOptions& opt, bool pin_pressure = true);

/// Mollified coefficient field with value extension: conv(c - c(outside)) +
/// c(outside), so coefficients never dip below their floor near the wall.
CellField mollify_coefficient(const CellField& c, const MollifierKernel& kernel,
                              double outside_value);
/// Same convolution evaluated at a ghost cell center (for boundary-face means).
double mollify_coefficient_at(const CellField& c, const MollifierKernel& kernel,
                              double outside_value, int i, int j);

/// mu = 1 viscous quadratic form K(u) (symmetric-gradient energy), and the
/// componentwise H1 seminorm it controls. K(u) >= korn_constant * |u|_1h^2.
double viscous_energy(const FaceField& u);
double component_h1_seminorm_sq(const FaceField& u);
/// Discrete Korn constant by generalized inverse iteration on the assembled
/// mu = 1 viscous block. An estimate; callers allow 5% slack.
double korn_constant(const UniformGrid& g, double rel_tol = 1e-10);

}  // namespace nanoflux
