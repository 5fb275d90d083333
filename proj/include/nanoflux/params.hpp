#pragma once

#include "nanoflux/grid.hpp"

namespace nanoflux {

/// Physical parameters of the stationary convection model, normalized so the
/// enthalpy and density factors are 1 + phi. Linear coefficient laws
///   k(phi) = k0 + k1*phi,  mu(phi) = mu0 + mu1*phi
/// with k1, mu1 >= 0 so that k >= k0 > 0 and mu >= mu0 > 0 on [0,1]; those
/// floors are the coercivity constants the energy estimates use.
struct ModelParams {
    double k0 = 1.0, k1 = 0.0;
    double mu0 = 1.0, mu1 = 0.0;
    double beta = 0.0;           // buoyancy coefficient, >= 0
    double eg_x = 0.0, eg_y = -1.0;  // unit gravity direction
    double T_inf = 1.0;          // reference temperature, > 0

    BoundaryData b;              // fraction trace, within [0,1]
    CellField f;                 // heat source
    FaceField g;                 // body force

    double k_of(double z) const { return k0 + k1 * z; }
    double mu_of(double z) const { return mu0 + mu1 * z; }

    /// Throws std::invalid_argument naming the violated invariant.
    void validate(const UniformGrid& grid) const;
};

/// Optional extra source in the fraction equation. Zero for the physical
/// model; the manufactured-solution studies need it because generic exact
/// fields do not satisfy the sourceless fraction equation.
struct FractionSource {
    CellField q;   // empty grid pointer => absent
    bool present() const { return q.grid != nullptr; }
};

/// b == value everywhere, zero sources, beta = 0, unit coefficients.
/// (value, 0, 0) is an exact fixed point of the solver map.
ModelParams trivial_preset(const UniformGrid& g, double value = 0.3);

/// k = 1 + 0.1 phi, mu = 1 + 0.1 phi, beta = 0.1, f = 0.1, g = (0,-0.1),
/// b = 0.5 on a unit square.
ModelParams small_data_preset(const UniformGrid& g);

}  // namespace nanoflux
