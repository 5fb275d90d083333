#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nanoflux {

/// Uniform rectangular MAC grid.
///
/// Scalars (volume fraction, temperature, pressure) live at cell centers,
/// vector quantities (velocity, particle flux) at face midpoints:
///
///   cell   (i,j), i=0..nx-1, j=0..ny-1, center (ox+(i+1/2)hx, oy+(j+1/2)hy)
///   x-face (i,j), i=0..nx,   j=0..ny-1, center (ox+i*hx,      oy+(j+1/2)hy)
///   y-face (i,j), i=0..nx-1, j=0..ny,   center (ox+(i+1/2)hx, oy+j*hy)
///   node   (i,j), i=0..nx,   j=0..ny,   position (ox+i*hx,    oy+j*hy)
///
/// The staggering makes the discrete gradient and divergence exact negative
/// adjoints of one another, which the energy identities of the solver rely on.
struct UniformGrid {
    double ox = 0.0, oy = 0.0;   // origin (lower-left corner)
    double lx = 1.0, ly = 1.0;   // extents
    int nx = 0, ny = 0;          // cell counts
    double hx = 0.0, hy = 0.0;   // spacings, hx = lx/nx

    UniformGrid() = default;
    UniformGrid(int nx_, int ny_, double ox_ = 0.0, double oy_ = 0.0,
                double lx_ = 1.0, double ly_ = 1.0);

    int cell_count() const { return nx * ny; }
    int xface_count() const { return (nx + 1) * ny; }
    int yface_count() const { return nx * (ny + 1); }

    int cell(int i, int j) const { return j * nx + i; }
    int xface(int i, int j) const { return j * (nx + 1) + i; }
    int yface(int i, int j) const { return j * nx + i; }
    int node(int i, int j) const { return j * (nx + 1) + i; }

    double cell_x(int i) const { return ox + (i + 0.5) * hx; }
    double cell_y(int j) const { return oy + (j + 0.5) * hy; }
    double xface_x(int i) const { return ox + i * hx; }
    double yface_y(int j) const { return oy + j * hy; }

    double min_spacing() const { return hx < hy ? hx : hy; }
    double max_spacing() const { return hx > hy ? hx : hy; }
    double cell_area() const { return hx * hy; }

    bool same_as(const UniformGrid& o) const {
        return nx == o.nx && ny == o.ny && ox == o.ox && oy == o.oy &&
               lx == o.lx && ly == o.ly;
    }
};

/// Dirichlet trace sampled at boundary face centers.
/// south/north have nx entries (x-faces of constant y), west/east ny entries.
struct BoundaryData {
    std::vector<double> south, north, west, east;

    BoundaryData() = default;
    static BoundaryData constant(const UniformGrid& g, double value);
    static BoundaryData from_function(const UniformGrid& g,
                                      const std::function<double(double, double)>& f);

    bool empty() const { return south.empty(); }
    void check_range(double lo, double hi, const std::string& what) const;
    double min_value() const;
    double max_value() const;
};

/// Scalar field at cell centers, optionally tagged with Dirichlet data.
struct CellField {
    const UniformGrid* grid = nullptr;
    std::vector<double> v;       // row-major, v[j*nx+i]
    BoundaryData dirichlet;      // empty => no trace available

    CellField() = default;
    explicit CellField(const UniformGrid& g, double init = 0.0)
        : grid(&g), v(static_cast<size_t>(g.cell_count()), init) {}

    double& operator()(int i, int j) { return v[static_cast<size_t>(grid->cell(i, j))]; }
    double operator()(int i, int j) const { return v[static_cast<size_t>(grid->cell(i, j))]; }

    bool has_dirichlet() const { return !dirichlet.empty(); }
    void fill(const std::function<double(double, double)>& f);
    bool finite() const;
    double min_value() const;
    double max_value() const;
};

/// Vector field with components on MAC faces. `noslip` marks fields whose
/// boundary-normal components are pinned to zero (velocity-like fields).
struct FaceField {
    const UniformGrid* grid = nullptr;
    std::vector<double> x;   // x-components on x-faces, (nx+1) x ny
    std::vector<double> y;   // y-components on y-faces, nx x (ny+1)
    bool noslip = false;

    FaceField() = default;
    explicit FaceField(const UniformGrid& g, double init = 0.0)
        : grid(&g),
          x(static_cast<size_t>(g.xface_count()), init),
          y(static_cast<size_t>(g.yface_count()), init) {}

    double& fx(int i, int j) { return x[static_cast<size_t>(grid->xface(i, j))]; }
    double fx(int i, int j) const { return x[static_cast<size_t>(grid->xface(i, j))]; }
    double& fy(int i, int j) { return y[static_cast<size_t>(grid->yface(i, j))]; }
    double fy(int i, int j) const { return y[static_cast<size_t>(grid->yface(i, j))]; }

    void fill(const std::function<double(double, double)>& fx_,
              const std::function<double(double, double)>& fy_);
    /// Zero the boundary-normal components and set the noslip tag.
    void enforce_zero_normal();
    double max_normal_trace() const;
    bool finite() const;
};

// axpy-style helpers used by the fixed-point driver
CellField blend(const CellField& a, const CellField& b, double wb);   // (1-wb)*a + wb*b
FaceField blend(const FaceField& a, const FaceField& b, double wb);

struct FieldNorms {
    double l2 = 0.0;
    double h1_semi = 0.0;
    double linf = 0.0;
};

/// Quadrature-weighted discrete norms.
///
/// Cell fields use the midpoint rule. Face fields use the trapezoid-consistent
/// rule with half weights on boundary-normal faces; that convention makes
/// <-div(k grad v), v> equal the face-weighted sum of k |grad v|^2 exactly,
/// which the energy estimates assert at machine precision.
/// The H1 seminorm of a CellField uses its Dirichlet tag when present and
/// homogeneous data otherwise.
FieldNorms field_norms(const CellField& a);
FieldNorms field_norms(const FaceField& w);

double l2_inner(const CellField& a, const CellField& b);
double l2_inner(const FaceField& a, const FaceField& b);

}  // namespace nanoflux
