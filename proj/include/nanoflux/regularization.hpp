#pragma once

#include "nanoflux/grid.hpp"

namespace nanoflux {

/// Cutoff z+ (1-z)+ that switches the thermophoretic flux off outside [0,1].
/// Total on the reals; range [0, 1/4].
double cutoff(double z);

/// Piecewise-cubic C^1 smoothing of the cutoff with transition width eps.
/// Branches: 0 below 0 and above 1, the cutoff itself on [eps, 1-eps], and
/// Hermite cubics on the two transition bands. Properties (all exact):
///   sup |cutoff - cutoff_smooth| = 4*eps/27  <= eps - eps^2,
///   support [0,1], C^1 everywhere,
///   max |d/dz cutoff_smooth| = (2-eps)^2/3   (slightly above 1; the Hermite
///   data pin the cubic uniquely, so no smaller slope is possible).
/// Requires 0 < eps <= 1/4.
double cutoff_smooth(double z, double eps);

/// Exact derivative of cutoff_smooth, branch by branch.
double cutoff_smooth_deriv(double z, double eps);

/// Lipschitz constant of cutoff_smooth: (2-eps)^2/3.
double cutoff_smooth_lipschitz(double eps);

struct SmoothCutoff {
    double epsilon;
    explicit SmoothCutoff(double eps);
    double operator()(double z) const { return cutoff_smooth(z, epsilon); }
    double deriv(double z) const { return cutoff_smooth_deriv(z, epsilon); }
};

/// Discrete mollification kernel: the compactly supported bump
///   m(x) = C exp(1/(|x|^2 - 1)) on |x| < 1,   scaled to radius eps,
/// sampled on the cell-offset lattice and renormalized so that
/// sum(weights) * cell_area == 1 exactly. The normalization constant C comes
/// from numerical quadrature over the unit disk, never from a literal.
struct MollifierKernel {
    double epsilon = 0.0;        // radius, same units as the grid spacing
    double hx = 0.0, hy = 0.0;   // lattice the weights were sampled on
    int radius_i = 0, radius_j = 0;
    std::vector<double> w;       // (2*radius_i+1) x (2*radius_j+1), row-major
    double normalization = 0.0;  // the quadrature value of C actually used

    double weight(int di, int dj) const {
        return w[static_cast<size_t>((dj + radius_j) * (2 * radius_i + 1) + (di + radius_i))];
    }
    double weight_sum_times_area() const;
};

/// Unit-disk mass of the unnormalized bump, by adaptive Simpson quadrature.
double bump_mass_2d();
/// Same integral by Gauss-Legendre; independent cross-check of bump_mass_2d.
double bump_mass_2d_gauss(int nodes = 64);

/// Builds the kernel for radius eps on the grid's lattice.
/// Requires eps >= 2*max(hx,hy); smaller radii degenerate to near-deltas and
/// the error names the minimum.
MollifierKernel build_kernel(double eps, const UniformGrid& g);

/// Discrete convolution with zero extension outside the domain; samples at
/// the same points as the input. Non-expansive in the discrete L2 norm.
CellField mollify(const CellField& a, const MollifierKernel& k);
FaceField mollify(const FaceField& w, const MollifierKernel& k);

/// Convolution value at an arbitrary cell-lattice position (ghost indices
/// allowed); the in-domain part of the stencil is what contributes.
double mollify_at_cell(const CellField& a, const MollifierKernel& k, int i, int j);

/// |<f, m*g> - <m*f, g>| over the discrete cell inner product.
double adjoint_defect(const CellField& f, const CellField& g, const MollifierKernel& k);

}  // namespace nanoflux
