#pragma once

#include "nanoflux/grid.hpp"

namespace nanoflux {

// Discrete differential operators on the MAC grid.
//
// Ghost conventions:
//  * gradient of a Dirichlet-tagged cell field: ghost cells by linear
//    reflection through the trace, so the boundary-face component is
//    2*(a_in - trace)/h (second order at the face).
//  * divergence: per-cell net flux over cell area, no ghosts needed.
//  * advection: divergence-form transport div(F * abar). On interior faces
//    abar is the arithmetic mean (or the upwind value); on boundary faces the
//    transported value is the mean of the inside cell and the zero extension,
//    i.e. a_in/2. Transports with zero normal trace never see that branch.

enum class AdvectScheme { Centered, Upwind };

FaceField gradient(const CellField& a);
CellField divergence(const FaceField& w);

/// | <gradient(a), w>_faces + <a, divergence(w)>_cells |.
/// Exactly zero (up to rounding) for w with zero normal trace.
double sbp_defect(const CellField& a, const FaceField& w);

CellField advect_scalar(const FaceField& F, const CellField& a,
                        AdvectScheme scheme = AdvectScheme::Centered);

/// | <advect_scalar(F,a), a> | for divergence-free F with zero normal trace.
/// Throws if ||div F||_inf exceeds div_tol (the skew identity needs it).
double advection_skew_defect(const FaceField& F, const CellField& a,
                             double div_tol = 1e-10,
                             AdvectScheme scheme = AdvectScheme::Centered);

/// Componentwise transport of a velocity-like field. The transport F is
/// averaged onto the shifted component lattices (cell centers for the
/// streamwise flux, nodes for the cross flux). Exactly skew-adjoint for
/// cell-divergence-free F with zero normal trace.
FaceField advect_vector(const FaceField& F, const FaceField& u,
                        AdvectScheme scheme = AdvectScheme::Centered);

struct LerayResult {
    FaceField projected;
    double achieved_div_inf = 0.0;   // ||div projected||_inf
    double solver_residual = 0.0;    // algebraic residual of the Poisson solve
};

/// Removes the discrete gradient part: w - grad(q), div grad q = div w with
/// homogeneous Neumann handling and one pinned cell. Requires (and preserves)
/// zero normal trace.
LerayResult leray_project(const FaceField& w, double rel_tol = 1e-12);

/// Discrete harmonic extension of boundary data (5-point Laplacian, ghost
/// reflection). Rejects data outside [0,1]; the discrete maximum principle
/// keeps the result inside [min b, max b].
CellField harmonic_extension(const UniformGrid& g, const BoundaryData& b);

/// Smallest eigenvalue of the (negative) 5-point Dirichlet Laplacian,
/// computed by inverse iteration. The Poincare constant is 1/sqrt(lambda_min).
double laplacian_min_eigenvalue(const UniformGrid& g, double rel_tol = 1e-12);

/// Closed-form lambda_min for the cell-centered Dirichlet Laplacian on a
/// rectangle (the discrete eigenvectors are sines sampled at cell centers).
double laplacian_min_eigenvalue_analytic(const UniformGrid& g);

double poincare_constant(const UniformGrid& g);

/// Stream-function curl: exactly divergence-free FaceField with zero normal
/// trace when psi vanishes on the boundary nodes. Used by tests and the
/// decoupled studies to build admissible transports.
FaceField curl_of_stream(const UniformGrid& g,
                         const std::function<double(double, double)>& psi);

}  // namespace nanoflux
