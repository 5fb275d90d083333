#include "nanoflux/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nanoflux {

UniformGrid::UniformGrid(int nx_, int ny_, double ox_, double oy_, double lx_, double ly_)
    : ox(ox_), oy(oy_), lx(lx_), ly(ly_), nx(nx_), ny(ny_) {
    if (nx < 4 || ny < 4)
        throw std::invalid_argument("UniformGrid: cell counts must be >= 4, got " +
                                    std::to_string(nx) + "x" + std::to_string(ny));
    if (lx <= 0.0 || ly <= 0.0)
        throw std::invalid_argument("UniformGrid: extents must be positive");
    hx = lx / nx;
    hy = ly / ny;
}

BoundaryData BoundaryData::constant(const UniformGrid& g, double value) {
    BoundaryData b;
    b.south.assign(static_cast<size_t>(g.nx), value);
    b.north.assign(static_cast<size_t>(g.nx), value);
    b.west.assign(static_cast<size_t>(g.ny), value);
    b.east.assign(static_cast<size_t>(g.ny), value);
    return b;
}

BoundaryData BoundaryData::from_function(const UniformGrid& g,
                                         const std::function<double(double, double)>& f) {
    BoundaryData b;
    b.south.resize(static_cast<size_t>(g.nx));
    b.north.resize(static_cast<size_t>(g.nx));
    b.west.resize(static_cast<size_t>(g.ny));
    b.east.resize(static_cast<size_t>(g.ny));
    for (int i = 0; i < g.nx; ++i) {
        b.south[static_cast<size_t>(i)] = f(g.cell_x(i), g.oy);
        b.north[static_cast<size_t>(i)] = f(g.cell_x(i), g.oy + g.ly);
    }
    for (int j = 0; j < g.ny; ++j) {
        b.west[static_cast<size_t>(j)] = f(g.ox, g.cell_y(j));
        b.east[static_cast<size_t>(j)] = f(g.ox + g.lx, g.cell_y(j));
    }
    return b;
}

void BoundaryData::check_range(double lo, double hi, const std::string& what) const {
    auto probe = [&](const std::vector<double>& side) {
        for (double v : side)
            if (!(v >= lo && v <= hi))
                throw std::invalid_argument(what + ": boundary value " + std::to_string(v) +
                                            " outside [" + std::to_string(lo) + ", " +
                                            std::to_string(hi) + "]");
    };
    probe(south);
    probe(north);
    probe(west);
    probe(east);
}

double BoundaryData::min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto* side : {&south, &north, &west, &east})
        for (double v : *side) m = std::min(m, v);
    return m;
}

double BoundaryData::max_value() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto* side : {&south, &north, &west, &east})
        for (double v : *side) m = std::max(m, v);
    return m;
}

void CellField::fill(const std::function<double(double, double)>& f) {
    for (int j = 0; j < grid->ny; ++j)
        for (int i = 0; i < grid->nx; ++i)
            (*this)(i, j) = f(grid->cell_x(i), grid->cell_y(j));
}

bool CellField::finite() const {
    for (double a : v)
        if (!std::isfinite(a)) return false;
    return true;
}

double CellField::min_value() const { return *std::min_element(v.begin(), v.end()); }
double CellField::max_value() const { return *std::max_element(v.begin(), v.end()); }

void FaceField::fill(const std::function<double(double, double)>& fx_,
                     const std::function<double(double, double)>& fy_) {
    const UniformGrid& g = *grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i)
            fx(i, j) = fx_(g.xface_x(i), g.cell_y(j));
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            fy(i, j) = fy_(g.cell_x(i), g.yface_y(j));
}

void FaceField::enforce_zero_normal() {
    const UniformGrid& g = *grid;
    for (int j = 0; j < g.ny; ++j) {
        fx(0, j) = 0.0;
        fx(g.nx, j) = 0.0;
    }
    for (int i = 0; i < g.nx; ++i) {
        fy(i, 0) = 0.0;
        fy(i, g.ny) = 0.0;
    }
    noslip = true;
}

double FaceField::max_normal_trace() const {
    const UniformGrid& g = *grid;
    double m = 0.0;
    for (int j = 0; j < g.ny; ++j)
        m = std::max({m, std::abs(fx(0, j)), std::abs(fx(g.nx, j))});
    for (int i = 0; i < g.nx; ++i)
        m = std::max({m, std::abs(fy(i, 0)), std::abs(fy(i, g.ny))});
    return m;
}

bool FaceField::finite() const {
    for (double a : x)
        if (!std::isfinite(a)) return false;
    for (double a : y)
        if (!std::isfinite(a)) return false;
    return true;
}

CellField blend(const CellField& a, const CellField& b, double wb) {
    CellField out = a;
    for (size_t k = 0; k < out.v.size(); ++k)
        out.v[k] = (1.0 - wb) * a.v[k] + wb * b.v[k];
    return out;
}

FaceField blend(const FaceField& a, const FaceField& b, double wb) {
    FaceField out = a;
    for (size_t k = 0; k < out.x.size(); ++k)
        out.x[k] = (1.0 - wb) * a.x[k] + wb * b.x[k];
    for (size_t k = 0; k < out.y.size(); ++k)
        out.y[k] = (1.0 - wb) * a.y[k] + wb * b.y[k];
    out.noslip = a.noslip && b.noslip;
    return out;
}

namespace {

// face quadrature weight: half on boundary-normal faces
double xface_weight(const UniformGrid& g, int i) { return (i == 0 || i == g.nx) ? 0.5 : 1.0; }
double yface_weight(const UniformGrid& g, int j) { return (j == 0 || j == g.ny) ? 0.5 : 1.0; }

}  // namespace

FieldNorms field_norms(const CellField& a) {
    const UniformGrid& g = *a.grid;
    FieldNorms n;
    double s = 0.0;
    for (double v : a.v) {
        s += v * v;
        n.linf = std::max(n.linf, std::abs(v));
    }
    n.l2 = std::sqrt(s * g.cell_area());

    // gradient with the field's trace (zero when untagged)
    double gs = 0.0;
    auto trace_w = [&](int j) { return a.has_dirichlet() ? a.dirichlet.west[static_cast<size_t>(j)] : 0.0; };
    auto trace_e = [&](int j) { return a.has_dirichlet() ? a.dirichlet.east[static_cast<size_t>(j)] : 0.0; };
    auto trace_s = [&](int i) { return a.has_dirichlet() ? a.dirichlet.south[static_cast<size_t>(i)] : 0.0; };
    auto trace_n = [&](int i) { return a.has_dirichlet() ? a.dirichlet.north[static_cast<size_t>(i)] : 0.0; };
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i <= g.nx; ++i) {
            double d;
            if (i == 0)
                d = 2.0 * (a(0, j) - trace_w(j)) / g.hx;
            else if (i == g.nx)
                d = 2.0 * (trace_e(j) - a(g.nx - 1, j)) / g.hx;
            else
                d = (a(i, j) - a(i - 1, j)) / g.hx;
            gs += xface_weight(g, i) * d * d;
        }
    }
    for (int j = 0; j <= g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double d;
            if (j == 0)
                d = 2.0 * (a(i, 0) - trace_s(i)) / g.hy;
            else if (j == g.ny)
                d = 2.0 * (trace_n(i) - a(i, g.ny - 1)) / g.hy;
            else
                d = (a(i, j) - a(i, j - 1)) / g.hy;
            gs += yface_weight(g, j) * d * d;
        }
    }
    n.h1_semi = std::sqrt(gs * g.cell_area());
    return n;
}

FieldNorms field_norms(const FaceField& w) {
    const UniformGrid& g = *w.grid;
    FieldNorms n;
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double v = w.fx(i, j);
            s += xface_weight(g, i) * v * v;
            n.linf = std::max(n.linf, std::abs(v));
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double v = w.fy(i, j);
            s += yface_weight(g, j) * v * v;
            n.linf = std::max(n.linf, std::abs(v));
        }
    n.l2 = std::sqrt(s * g.cell_area());

    // componentwise H1 seminorm with no-slip ghosts (w = 0 on the wall)
    double gs = 0.0;
    // d(ux)/dx at cell centers
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double d = (w.fx(i + 1, j) - w.fx(i, j)) / g.hx;
            gs += d * d;
        }
    // d(ux)/dy at nodes, ghost reflection across south/north walls
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double lo = (j == 0) ? -w.fx(i, 0) : w.fx(i, j - 1);
            double hi = (j == g.ny) ? -w.fx(i, g.ny - 1) : w.fx(i, j);
            double d = (hi - lo) / g.hy;
            gs += ((j == 0 || j == g.ny) ? 0.5 : 1.0) * ((i == 0 || i == g.nx) ? 0.5 : 1.0) * d * d;
        }
    // d(uy)/dy at cell centers
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double d = (w.fy(i, j + 1) - w.fy(i, j)) / g.hy;
            gs += d * d;
        }
    // d(uy)/dx at nodes
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double lo = (i == 0) ? -w.fy(0, j) : w.fy(i - 1, j);
            double hi = (i == g.nx) ? -w.fy(g.nx - 1, j) : w.fy(i, j);
            double d = (hi - lo) / g.hx;
            gs += ((j == 0 || j == g.ny) ? 0.5 : 1.0) * ((i == 0 || i == g.nx) ? 0.5 : 1.0) * d * d;
        }
    n.h1_semi = std::sqrt(gs * g.cell_area());
    return n;
}

double l2_inner(const CellField& a, const CellField& b) {
    double s = 0.0;
    for (size_t k = 0; k < a.v.size(); ++k) s += a.v[k] * b.v[k];
    return s * a.grid->cell_area();
}

double l2_inner(const FaceField& a, const FaceField& b) {
    const UniformGrid& g = *a.grid;
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i)
            s += xface_weight(g, i) * a.fx(i, j) * b.fx(i, j);
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            s += yface_weight(g, j) * a.fy(i, j) * b.fy(i, j);
    return s * g.cell_area();
}

}  // namespace nanoflux
