#include "nanoflux/params.hpp"

#include <cmath>

namespace nanoflux {

void ModelParams::validate(const UniformGrid& grid) const {
    if (!(k0 > 0.0)) throw std::invalid_argument("ModelParams: k0 > 0 violated");
    if (!(mu0 > 0.0)) throw std::invalid_argument("ModelParams: mu0 > 0 violated");
    if (k1 < 0.0)
        throw std::invalid_argument("ModelParams: k1 >= 0 violated (k(phi) must stay >= k0 on [0,1])");
    if (mu1 < 0.0)
        throw std::invalid_argument("ModelParams: mu1 >= 0 violated (mu(phi) must stay >= mu0 on [0,1])");
    if (!(beta >= 0.0)) throw std::invalid_argument("ModelParams: beta >= 0 violated");
    if (!(T_inf > 0.0)) throw std::invalid_argument("ModelParams: T_inf > 0 violated");
    double egn = std::hypot(eg_x, eg_y);
    if (std::abs(egn - 1.0) > 1e-12)
        throw std::invalid_argument("ModelParams: e_g must be a unit vector, |e_g| = " +
                                    std::to_string(egn));
    if (b.empty()) throw std::invalid_argument("ModelParams: boundary data b missing");
    if (static_cast<int>(b.south.size()) != grid.nx || static_cast<int>(b.west.size()) != grid.ny)
        throw std::invalid_argument("ModelParams: boundary data does not match the grid");
    b.check_range(0.0, 1.0, "ModelParams b");
    if (f.grid == nullptr || !f.grid->same_as(grid))
        throw std::invalid_argument("ModelParams: heat source f missing or on the wrong grid");
    if (g.grid == nullptr || !g.grid->same_as(grid))
        throw std::invalid_argument("ModelParams: body force g missing or on the wrong grid");
    if (!f.finite() || !g.finite())
        throw std::invalid_argument("ModelParams: non-finite source data");
}

ModelParams trivial_preset(const UniformGrid& g, double value) {
    ModelParams p;
    p.k0 = 1.0;
    p.mu0 = 1.0;
    p.beta = 0.0;
    p.b = BoundaryData::constant(g, value);
    p.f = CellField(g);
    p.g = FaceField(g);
    return p;
}

ModelParams small_data_preset(const UniformGrid& g) {
    ModelParams p;
    p.k0 = 1.0;
    p.k1 = 0.1;
    p.mu0 = 1.0;
    p.mu1 = 0.1;
    p.beta = 0.1;
    p.b = BoundaryData::constant(g, 0.5);
    p.f = CellField(g, 0.1);
    p.g = FaceField(g);
    for (double& v : p.g.y) v = -0.1;
    return p;
}

}  // namespace nanoflux
