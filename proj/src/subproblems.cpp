#include "nanoflux/subproblems.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <random>

namespace nanoflux {

namespace {

constexpr double kTransportDivTol = 1e-8;

double inf_residual(const LinearSystem& sys, const Eigen::VectorXd& x) {
    return (sys.A * x - sys.rhs).lpNorm<Eigen::Infinity>();
}

}  // namespace

SolverState SolverState::initial(const UniformGrid& g, const ModelParams& params,
                                 double epsilon) {
    SolverState s;
    s.phi = harmonic_extension(g, params.b);
    s.T = CellField(g);
    s.u = FaceField(g);
    s.u.noslip = true;
    s.p = CellField(g);
    s.epsilon = epsilon;
    return s;
}

FaceField transport_field(const FaceField& u, const MollifierKernel& kernel,
                          double* div_before) {
    FaceField m = mollify(u, kernel);
    m.enforce_zero_normal();
    if (div_before) *div_before = field_norms(divergence(m)).linf;
    return leray_project(m).projected;
}

FaceField thermophoretic_gradient(const CellField& T, const MollifierKernel& kernel) {
    const UniformGrid& g = *T.grid;
    FaceField out(g);
    CellField mT = mollify(T, kernel);
    // boundary faces difference against the convolution at the ghost center;
    // that is the discrete gradient of the zero-extended mollified field
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double left = (i == 0) ? mollify_at_cell(T, kernel, -1, j) : mT(i - 1, j);
            double right = (i == g.nx) ? mollify_at_cell(T, kernel, g.nx, j) : mT(i, j);
            out.fx(i, j) = (right - left) / g.hx;
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double lo = (j == 0) ? mollify_at_cell(T, kernel, i, -1) : mT(i, j - 1);
            double hi = (j == g.ny) ? mollify_at_cell(T, kernel, i, g.ny) : mT(i, j);
            out.fy(i, j) = (hi - lo) / g.hy;
        }
    return out;
}

FaceField cutoff_on_faces(const CellField& phi, const BoundaryData& b, double eps) {
    const UniformGrid& g = *phi.grid;
    FaceField out(g);
    auto h = [eps](double z) { return cutoff_smooth(z, eps); };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            if (i == 0) out.fx(i, j) = h(b.west[static_cast<size_t>(j)]);
            else if (i == g.nx) out.fx(i, j) = h(b.east[static_cast<size_t>(j)]);
            else out.fx(i, j) = 0.5 * (h(phi(i - 1, j)) + h(phi(i, j)));
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (j == 0) out.fy(i, j) = h(b.south[static_cast<size_t>(i)]);
            else if (j == g.ny) out.fy(i, j) = h(b.north[static_cast<size_t>(i)]);
            else out.fy(i, j) = 0.5 * (h(phi(i, j - 1)) + h(phi(i, j)));
        }
    return out;
}

namespace {

// Advective stencil entries at one face, mirroring advect_scalar exactly.
// Returns pairs (cell index or -1 for the Dirichlet/zero-extension side,
// coefficient on the transported value).
struct FaceStencil {
    int cells[2] = {-1, -1};
    double coef[2] = {0.0, 0.0};
};

FaceStencil x_face_stencil(const UniformGrid& g, int i, int j, double flux,
                           AdvectScheme s) {
    FaceStencil st;
    if (s == AdvectScheme::Centered) {
        if (i == 0) { st.cells[0] = g.cell(0, j); st.coef[0] = 0.5; }
        else if (i == g.nx) { st.cells[0] = g.cell(g.nx - 1, j); st.coef[0] = 0.5; }
        else {
            st.cells[0] = g.cell(i - 1, j); st.coef[0] = 0.5;
            st.cells[1] = g.cell(i, j); st.coef[1] = 0.5;
        }
        return st;
    }
    if (i == 0) { if (flux <= 0.0) { st.cells[0] = g.cell(0, j); st.coef[0] = 1.0; } }
    else if (i == g.nx) { if (flux > 0.0) { st.cells[0] = g.cell(g.nx - 1, j); st.coef[0] = 1.0; } }
    else { st.cells[0] = flux > 0.0 ? g.cell(i - 1, j) : g.cell(i, j); st.coef[0] = 1.0; }
    return st;
}

FaceStencil y_face_stencil(const UniformGrid& g, int i, int j, double flux,
                           AdvectScheme s) {
    FaceStencil st;
    if (s == AdvectScheme::Centered) {
        if (j == 0) { st.cells[0] = g.cell(i, 0); st.coef[0] = 0.5; }
        else if (j == g.ny) { st.cells[0] = g.cell(i, g.ny - 1); st.coef[0] = 0.5; }
        else {
            st.cells[0] = g.cell(i, j - 1); st.coef[0] = 0.5;
            st.cells[1] = g.cell(i, j); st.coef[1] = 0.5;
        }
        return st;
    }
    if (j == 0) { if (flux <= 0.0) { st.cells[0] = g.cell(i, 0); st.coef[0] = 1.0; } }
    else if (j == g.ny) { if (flux > 0.0) { st.cells[0] = g.cell(i, g.ny - 1); st.coef[0] = 1.0; } }
    else { st.cells[0] = flux > 0.0 ? g.cell(i, j - 1) : g.cell(i, j); st.coef[0] = 1.0; }
    return st;
}

// adds div(flux * value(a)) at cell (i,j) to the matrix row
void add_advection_row(std::vector<Eigen::Triplet<double>>& trips, const UniformGrid& g,
                       const FaceField& F, int i, int j, AdvectScheme s) {
    const int row = g.cell(i, j);
    auto add_x = [&](int fi, double sign) {
        double flux = F.fx(fi, j);
        if (flux == 0.0) return;
        FaceStencil st = x_face_stencil(g, fi, j, flux, s);
        for (int m = 0; m < 2; ++m)
            if (st.cells[m] >= 0)
                trips.emplace_back(row, st.cells[m], sign * flux * st.coef[m] / g.hx);
    };
    auto add_y = [&](int fj, double sign) {
        double flux = F.fy(i, fj);
        if (flux == 0.0) return;
        FaceStencil st = y_face_stencil(g, i, fj, flux, s);
        for (int m = 0; m < 2; ++m)
            if (st.cells[m] >= 0)
                trips.emplace_back(row, st.cells[m], sign * flux * st.coef[m] / g.hy);
    };
    add_x(i + 1, +1.0);
    add_x(i, -1.0);
    add_y(j + 1, +1.0);
    add_y(j, -1.0);
}

void check_transport(const FaceField& w, const char* who) {
    double dv = field_norms(divergence(w)).linf;
    if (dv > kTransportDivTol)
        throw std::invalid_argument(std::string(who) +
                                    ": transport field not divergence free, ||div w||_inf = " +
                                    std::to_string(dv));
    if (w.max_normal_trace() > 0.0)
        throw std::invalid_argument(std::string(who) + ": transport has nonzero normal trace");
}

}  // namespace

LinearSystem assemble_fraction_system(const CellField& phi_old, const FaceField& w,
                                      const FaceField& S, const ModelParams& params,
                                      const SubproblemOptions& opt,
                                      const FractionSource& q) {
    const UniformGrid& g = *phi_old.grid;
    const int n = g.cell_count();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(10 * n));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    CellField divS = divergence(S);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int c = g.cell(i, j);
            double diag = 2.0 * (ax + ay);
            if (i > 0) trips.emplace_back(c, g.cell(i - 1, j), -ax);
            else { diag += ax; rhs[c] += 2.0 * ax * params.b.west[static_cast<size_t>(j)]; }
            if (i < g.nx - 1) trips.emplace_back(c, g.cell(i + 1, j), -ax);
            else { diag += ax; rhs[c] += 2.0 * ax * params.b.east[static_cast<size_t>(j)]; }
            if (j > 0) trips.emplace_back(c, g.cell(i, j - 1), -ay);
            else { diag += ay; rhs[c] += 2.0 * ay * params.b.south[static_cast<size_t>(i)]; }
            if (j < g.ny - 1) trips.emplace_back(c, g.cell(i, j + 1), -ay);
            else { diag += ay; rhs[c] += 2.0 * ay * params.b.north[static_cast<size_t>(i)]; }
            trips.emplace_back(c, c, diag);

            add_advection_row(trips, g, w, i, j, opt.scheme);
            rhs[c] += divS(i, j);
            if (q.present()) rhs[c] += q.q(i, j);
        }

    LinearSystem sys;
    sys.from_triplets(n, trips, std::move(rhs), "fraction");
    return sys;
}

FractionSolve solve_fraction(const CellField& phi_old, const FaceField& w,
                             const FaceField& S, const ModelParams& params,
                             const SubproblemOptions& opt, const FractionSource& q) {
    if (phi_old.min_value() < -opt.bound_tol || phi_old.max_value() > 1.0 + opt.bound_tol)
        throw std::invalid_argument("solve_fraction: input fraction outside [0,1] (min " +
                                    std::to_string(phi_old.min_value()) + ", max " +
                                    std::to_string(phi_old.max_value()) + ")");
    check_transport(w, "solve_fraction");

    LinearSystem sys = assemble_fraction_system(phi_old, w, S, params, opt, q);
    SolveReport rep = linear_solve(sys, opt.linear);

    FractionSolve out;
    out.phi_new = CellField(*phi_old.grid);
    for (int c = 0; c < sys.size(); ++c) out.phi_new.v[static_cast<size_t>(c)] = rep.x[c];
    out.phi_new.dirichlet = params.b;
    out.solver_residual = inf_residual(sys, rep.x);
    return out;
}

FluxResult compute_flux(const CellField& phi_new, const FaceField& w,
                        const FaceField& S, const SubproblemOptions& opt,
                        const FractionSource& q) {
    const UniformGrid& g = *phi_new.grid;
    FluxResult out;
    FaceField grad_phi = gradient(phi_new);
    out.j = FaceField(g);
    out.F = FaceField(g);
    for (size_t k = 0; k < out.j.x.size(); ++k) out.j.x[k] = -grad_phi.x[k] - S.x[k];
    for (size_t k = 0; k < out.j.y.size(); ++k) out.j.y[k] = -grad_phi.y[k] - S.y[k];

    // face values of the new fraction follow the advection stencil, so that
    // div F - q is identically the fraction-system residual
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            FaceStencil st = x_face_stencil(g, i, j, w.fx(i, j), opt.scheme);
            double val = 0.0;
            for (int m = 0; m < 2; ++m)
                if (st.cells[m] >= 0) val += st.coef[m] * phi_new.v[static_cast<size_t>(st.cells[m])];
            out.F.fx(i, j) = w.fx(i, j) * val + out.j.fx(i, j);
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            FaceStencil st = y_face_stencil(g, i, j, w.fy(i, j), opt.scheme);
            double val = 0.0;
            for (int m = 0; m < 2; ++m)
                if (st.cells[m] >= 0) val += st.coef[m] * phi_new.v[static_cast<size_t>(st.cells[m])];
            out.F.fy(i, j) = w.fy(i, j) * val + out.j.fy(i, j);
        }

    CellField d = divergence(out.F);
    double defect = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double r = d(i, j) - (q.present() ? q.q(i, j) : 0.0);
            defect = std::max(defect, std::abs(r));
        }
    out.div_F_inf = defect;

    double rhs_scale = std::max(1.0, field_norms(divergence(S)).linf);
    out.cert_threshold = opt.flux_cert_factor * opt.linear.rel_tol * rhs_scale;
    if (defect > out.cert_threshold)
        throw std::runtime_error("compute_flux: conserved transport certification failed, "
                                 "||div F - q||_inf = " + std::to_string(defect) +
                                 " > " + std::to_string(out.cert_threshold) +
                                 " (inconsistent assembly)");
    return out;
}

CellField mollify_coefficient(const CellField& c, const MollifierKernel& kernel,
                              double outside_value) {
    CellField shifted = c;
    for (double& v : shifted.v) v -= outside_value;
    CellField out = mollify(shifted, kernel);
    for (double& v : out.v) v += outside_value;
    return out;
}

double mollify_coefficient_at(const CellField& c, const MollifierKernel& kernel,
                              double outside_value, int i, int j) {
    CellField shifted = c;
    for (double& v : shifted.v) v -= outside_value;
    return mollify_at_cell(shifted, kernel, i, j) + outside_value;
}

namespace {

// face means of a mollified coefficient, ghost convolution across the wall
struct CoefficientFaces {
    FaceField f;
};

CoefficientFaces coefficient_on_faces(const CellField& c, const MollifierKernel& kernel,
                                      double outside_value) {
    const UniformGrid& g = *c.grid;
    CellField shifted = c;
    for (double& v : shifted.v) v -= outside_value;
    CellField m = mollify(shifted, kernel);

    CoefficientFaces out;
    out.f = FaceField(g);
    auto ghost = [&](int i, int j) { return mollify_at_cell(shifted, kernel, i, j); };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double left = (i == 0) ? ghost(-1, j) : m(i - 1, j);
            double right = (i == g.nx) ? ghost(g.nx, j) : m(i, j);
            out.f.fx(i, j) = 0.5 * (left + right) + outside_value;
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double lo = (j == 0) ? ghost(i, -1) : m(i, j - 1);
            double hi = (j == g.ny) ? ghost(i, g.ny) : m(i, j);
            out.f.fy(i, j) = 0.5 * (lo + hi) + outside_value;
        }
    return out;
}

// -div(kf grad v) row with zero Dirichlet data (ghost reflection)
void add_diffusion_row(std::vector<Eigen::Triplet<double>>& trips, const UniformGrid& g,
                       const FaceField& kf, int i, int j) {
    const int c = g.cell(i, j);
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    double diag = 0.0;
    // east/west
    if (i < g.nx - 1) { trips.emplace_back(c, g.cell(i + 1, j), -kf.fx(i + 1, j) * ax); diag += kf.fx(i + 1, j) * ax; }
    else diag += 2.0 * kf.fx(g.nx, j) * ax;
    if (i > 0) { trips.emplace_back(c, g.cell(i - 1, j), -kf.fx(i, j) * ax); diag += kf.fx(i, j) * ax; }
    else diag += 2.0 * kf.fx(0, j) * ax;
    // north/south
    if (j < g.ny - 1) { trips.emplace_back(c, g.cell(i, j + 1), -kf.fy(i, j + 1) * ay); diag += kf.fy(i, j + 1) * ay; }
    else diag += 2.0 * kf.fy(i, g.ny) * ay;
    if (j > 0) { trips.emplace_back(c, g.cell(i, j - 1), -kf.fy(i, j) * ay); diag += kf.fy(i, j) * ay; }
    else diag += 2.0 * kf.fy(i, 0) * ay;
    trips.emplace_back(c, c, diag);
}

}  // namespace

LinearSystem assemble_scalar_system(const FaceField& kf,
                                    const std::vector<const FaceField*>& transports,
                                    const CellField& rhs_field, AdvectScheme scheme,
                                    std::string label) {
    const UniformGrid& g = *rhs_field.grid;
    const int n = g.cell_count();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>((5 + 5 * transports.size()) * static_cast<size_t>(n)));
    Eigen::VectorXd rhs(n);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            add_diffusion_row(trips, g, kf, i, j);
            for (const FaceField* t : transports)
                add_advection_row(trips, g, *t, i, j, scheme);
            rhs[g.cell(i, j)] = rhs_field(i, j);
        }
    LinearSystem sys;
    sys.from_triplets(n, trips, std::move(rhs), std::move(label));
    return sys;
}

LinearSystem assemble_temperature_system(const CellField& phi_old, const FaceField& w,
                                         const FluxResult& flux, const ModelParams& params,
                                         const MollifierKernel& kernel,
                                         const SubproblemOptions& opt) {
    const UniformGrid& g = *phi_old.grid;
    CellField kphi(g);
    for (size_t m = 0; m < kphi.v.size(); ++m) kphi.v[m] = params.k_of(phi_old.v[m]);
    CoefficientFaces kf = coefficient_on_faces(kphi, kernel, params.k_of(0.0));
    return assemble_scalar_system(kf.f, {&w, &flux.F}, params.f, opt.scheme, "temperature");
}

ScalarSolve solve_temperature(const CellField& phi_old, const FaceField& w,
                              const FluxResult& flux, const ModelParams& params,
                              const MollifierKernel& kernel, const SubproblemOptions& opt) {
    check_transport(w, "solve_temperature");
    LinearSystem sys = assemble_temperature_system(phi_old, w, flux, params, kernel, opt);
    SolveReport rep = linear_solve(sys, opt.linear);
    ScalarSolve out;
    out.field = CellField(*phi_old.grid);
    for (int c = 0; c < sys.size(); ++c) out.field.v[static_cast<size_t>(c)] = rep.x[c];
    out.solver_residual = inf_residual(sys, rep.x);
    return out;
}

// ---------------------------------------------------------------------------
// momentum saddle system
// ---------------------------------------------------------------------------

namespace {

struct MomentumIndex {
    const UniformGrid& g;
    int n_ux, n_uy;
    explicit MomentumIndex(const UniformGrid& gr)
        : g(gr), n_ux((gr.nx - 1) * gr.ny), n_uy(gr.nx * (gr.ny - 1)) {}

    // interior x-faces i=1..nx-1; returns -1 for eliminated no-slip faces
    int ux(int i, int j) const {
        if (i <= 0 || i >= g.nx) return -1;
        return j * (g.nx - 1) + (i - 1);
    }
    int uy(int i, int j) const {
        if (j <= 0 || j >= g.ny) return -1;
        return n_ux + (j - 1) * g.nx + i;
    }
    int p(int i, int j) const { return n_ux + n_uy + g.cell(i, j); }
    int total() const { return n_ux + n_uy + g.cell_count(); }
};

// symmetric viscous block, assembled element by element from the
// symmetric-gradient energy; `scale` folds in the 1/area of the operator rows
void assemble_viscous(std::vector<Eigen::Triplet<double>>& trips, const MomentumIndex& ix,
                      const std::function<double(int, int)>& mu_cell,
                      const std::function<double(int, int)>& mu_node) {
    const UniformGrid& g = ix.g;

    // cell elements: 2*mu*(dux/dx)^2 and 2*mu*(duy/dy)^2
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double m2 = 2.0 * mu_cell(i, j);
            int a = ix.ux(i, j), b = ix.ux(i + 1, j);
            double cx = 1.0 / g.hx;
            // L = cx*(u_b - u_a); entries m2 * c_r * c_s
            if (b >= 0) trips.emplace_back(b, b, m2 * cx * cx);
            if (a >= 0) trips.emplace_back(a, a, m2 * cx * cx);
            if (a >= 0 && b >= 0) {
                trips.emplace_back(a, b, -m2 * cx * cx);
                trips.emplace_back(b, a, -m2 * cx * cx);
            }
            int c = ix.uy(i, j), d = ix.uy(i, j + 1);
            double cy = 1.0 / g.hy;
            if (d >= 0) trips.emplace_back(d, d, m2 * cy * cy);
            if (c >= 0) trips.emplace_back(c, c, m2 * cy * cy);
            if (c >= 0 && d >= 0) {
                trips.emplace_back(c, d, -m2 * cy * cy);
                trips.emplace_back(d, c, -m2 * cy * cy);
            }
        }

    // node elements: mu * gamma^2, gamma = dy(ux) + dx(uy), ghost reflection
    // at the walls (the wall shear 2*u/h comes out of the reflected ghost).
    // Trapezoid node weights: with half weight on boundary nodes the
    // variational rows match the stress-divergence flux form at the wall;
    // full weight would count the wall stress twice and cost an order.
    for (int J = 0; J <= g.ny; ++J)
        for (int I = 0; I <= g.nx; ++I) {
            const double wj = (J == 0 || J == g.ny) ? 0.5 : 1.0;
            const double wi = (I == 0 || I == g.nx) ? 0.5 : 1.0;
            const double m = mu_node(I, J) * wi * wj;
            int idx[4];
            double coef[4];
            int cnt = 0;
            auto push = [&](int id, double cf) {
                if (id >= 0 && cf != 0.0) { idx[cnt] = id; coef[cnt] = cf; ++cnt; }
            };
            if (J == 0) push(ix.ux(I, 0), 2.0 / g.hy);
            else if (J == g.ny) push(ix.ux(I, g.ny - 1), -2.0 / g.hy);
            else { push(ix.ux(I, J), 1.0 / g.hy); push(ix.ux(I, J - 1), -1.0 / g.hy); }
            if (I == 0) push(ix.uy(0, J), 2.0 / g.hx);
            else if (I == g.nx) push(ix.uy(g.nx - 1, J), -2.0 / g.hx);
            else { push(ix.uy(I, J), 1.0 / g.hx); push(ix.uy(I - 1, J), -1.0 / g.hx); }
            for (int r = 0; r < cnt; ++r)
                for (int s = 0; s < cnt; ++s)
                    trips.emplace_back(idx[r], idx[s], m * coef[r] * coef[s]);
        }
}

// componentwise divergence-form transport rows for the x-velocity,
// mirroring advect_vector
void assemble_advect_ux(std::vector<Eigen::Triplet<double>>& trips, const MomentumIndex& ix,
                        const FaceField& F) {
    const UniformGrid& g = ix.g;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const int row = ix.ux(i, j);
            // streamwise fluxes through cell centers ic and ic-1
            for (int side = 0; side < 2; ++side) {
                int ic = i - 1 + side;                     // cell between faces ic, ic+1
                double sign = side ? +1.0 : -1.0;
                double Fc = 0.5 * (F.fx(ic, j) + F.fx(ic + 1, j));
                if (Fc == 0.0) continue;
                int a = ix.ux(ic, j), b = ix.ux(ic + 1, j);
                if (a >= 0) trips.emplace_back(row, a, sign * Fc * 0.5 / g.hx);
                if (b >= 0) trips.emplace_back(row, b, sign * Fc * 0.5 / g.hx);
            }
            // cross fluxes through nodes (i, j) and (i, j+1)
            for (int side = 0; side < 2; ++side) {
                int J = j + side;
                double sign = side ? +1.0 : -1.0;
                double Fn = 0.5 * (F.fy(i - 1, J) + F.fy(i, J));
                if (Fn == 0.0) continue;
                if (J == 0) {  // zero-extension mean below the wall
                    trips.emplace_back(row, ix.ux(i, 0), sign * Fn * 0.5 / g.hy);
                } else if (J == g.ny) {
                    trips.emplace_back(row, ix.ux(i, g.ny - 1), sign * Fn * 0.5 / g.hy);
                } else {
                    trips.emplace_back(row, ix.ux(i, J - 1), sign * Fn * 0.5 / g.hy);
                    trips.emplace_back(row, ix.ux(i, J), sign * Fn * 0.5 / g.hy);
                }
            }
        }
}

void assemble_advect_uy(std::vector<Eigen::Triplet<double>>& trips, const MomentumIndex& ix,
                        const FaceField& F) {
    const UniformGrid& g = ix.g;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int row = ix.uy(i, j);
            for (int side = 0; side < 2; ++side) {
                int jc = j - 1 + side;
                double sign = side ? +1.0 : -1.0;
                double Fc = 0.5 * (F.fy(i, jc) + F.fy(i, jc + 1));
                if (Fc == 0.0) continue;
                int a = ix.uy(i, jc), b = ix.uy(i, jc + 1);
                if (a >= 0) trips.emplace_back(row, a, sign * Fc * 0.5 / g.hy);
                if (b >= 0) trips.emplace_back(row, b, sign * Fc * 0.5 / g.hy);
            }
            for (int side = 0; side < 2; ++side) {
                int I = i + side;
                double sign = side ? +1.0 : -1.0;
                double Fn = 0.5 * (F.fx(I, j - 1) + F.fx(I, j));
                if (Fn == 0.0) continue;
                if (I == 0) {
                    trips.emplace_back(row, ix.uy(0, j), sign * Fn * 0.5 / g.hx);
                } else if (I == g.nx) {
                    trips.emplace_back(row, ix.uy(g.nx - 1, j), sign * Fn * 0.5 / g.hx);
                } else {
                    trips.emplace_back(row, ix.uy(I - 1, j), sign * Fn * 0.5 / g.hx);
                    trips.emplace_back(row, ix.uy(I, j), sign * Fn * 0.5 / g.hx);
                }
            }
        }
}

}  // namespace

LinearSystem assemble_momentum_system(const CellField& phi_old, const CellField& T_old,
                                      const FaceField& w, const FluxResult& flux,
                                      const ModelParams& params, const MollifierKernel& kernel,
                                      const SubproblemOptions&, bool pin_pressure) {
    const UniformGrid& g = *phi_old.grid;
    MomentumIndex ix(g);

    // viscosity is evaluated at the input fraction of the map
    CellField muphi(g);
    for (size_t m = 0; m < muphi.v.size(); ++m) muphi.v[m] = params.mu_of(phi_old.v[m]);
    CellField mu_moll = mollify_coefficient(muphi, kernel, params.mu_of(0.0));
    auto mu_cell = [&](int i, int j) { return mu_moll(i, j); };
    auto mu_node = [&](int I, int J) {
        double s = 0.0;
        int c = 0;
        for (int dj = -1; dj <= 0; ++dj)
            for (int di = -1; di <= 0; ++di) {
                int ii = I + di, jj = J + dj;
                if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny) continue;
                s += mu_moll(ii, jj);
                ++c;
            }
        return s / c;
    };

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(30 * ix.total()));
    assemble_viscous(trips, ix, mu_cell, mu_node);
    assemble_advect_ux(trips, ix, w);
    assemble_advect_ux(trips, ix, flux.F);
    assemble_advect_uy(trips, ix, w);
    assemble_advect_uy(trips, ix, flux.F);

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ix.total());

    // pressure gradient in the momentum rows, -div u = 0 in the continuity
    // rows; the pair is an exact transpose, so the saddle coupling is symmetric
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            int row = ix.ux(i, j);
            trips.emplace_back(row, ix.p(i, j), 1.0 / g.hx);
            trips.emplace_back(row, ix.p(i - 1, j), -1.0 / g.hx);
            double Tf = 0.5 * (T_old(i - 1, j) + T_old(i, j));
            rhs[row] = params.g.fx(i, j) - params.beta * Tf * params.eg_x;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int row = ix.uy(i, j);
            trips.emplace_back(row, ix.p(i, j), 1.0 / g.hy);
            trips.emplace_back(row, ix.p(i, j - 1), -1.0 / g.hy);
            double Tf = 0.5 * (T_old(i, j - 1) + T_old(i, j));
            rhs[row] = params.g.fy(i, j) - params.beta * Tf * params.eg_y;
        }
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int row = ix.p(i, j);
            if (pin_pressure && i == 0 && j == 0) {
                trips.emplace_back(row, row, 1.0);
                continue;
            }
            int a = ix.ux(i, j), b = ix.ux(i + 1, j);
            if (b >= 0) trips.emplace_back(row, b, -1.0 / g.hx);
            if (a >= 0) trips.emplace_back(row, a, 1.0 / g.hx);
            int c = ix.uy(i, j), d = ix.uy(i, j + 1);
            if (d >= 0) trips.emplace_back(row, d, -1.0 / g.hy);
            if (c >= 0) trips.emplace_back(row, c, 1.0 / g.hy);
        }

    LinearSystem sys;
    sys.from_triplets(ix.total(), trips, std::move(rhs), "momentum");
    return sys;
}

MomentumSolve solve_momentum(const CellField& phi_old, const CellField& T_old,
                             const FaceField& w, const FluxResult& flux,
                             const ModelParams& params, const MollifierKernel& kernel,
                             const SubproblemOptions& opt) {
    check_transport(w, "solve_momentum");
    const UniformGrid& g = *phi_old.grid;
    LinearSystem sys = assemble_momentum_system(phi_old, T_old, w, flux, params, kernel, opt);
    SolveReport rep = linear_solve(sys, opt.linear);

    MomentumIndex ix(g);
    MomentumSolve out;
    out.u = FaceField(g);
    out.u.noslip = true;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            out.u.fx(i, j) = rep.x[ix.ux(i, j)];
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.u.fy(i, j) = rep.x[ix.uy(i, j)];

    out.p = CellField(g);
    double mean = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            out.p(i, j) = rep.x[ix.p(i, j)];
            mean += out.p(i, j);
        }
    mean /= g.cell_count();
    for (double& v : out.p.v) v -= mean;  // reported up to a constant
    out.solver_residual = inf_residual(sys, rep.x);
    return out;
}

double viscous_energy(const FaceField& u) {
    const UniformGrid& g = *u.grid;
    double E = 0.0;
    const double A = g.cell_area();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double dxx = (u.fx(i + 1, j) - u.fx(i, j)) / g.hx;
            double dyy = (u.fy(i, j + 1) - u.fy(i, j)) / g.hy;
            E += 2.0 * (dxx * dxx + dyy * dyy) * A;
        }
    for (int J = 0; J <= g.ny; ++J)
        for (int I = 0; I <= g.nx; ++I) {
            const double wj = (J == 0 || J == g.ny) ? 0.5 : 1.0;
            const double wi = (I == 0 || I == g.nx) ? 0.5 : 1.0;
            double dyux;
            if (J == 0) dyux = 2.0 * u.fx(I, 0) / g.hy;
            else if (J == g.ny) dyux = -2.0 * u.fx(I, g.ny - 1) / g.hy;
            else dyux = (u.fx(I, J) - u.fx(I, J - 1)) / g.hy;
            double dxuy;
            if (I == 0) dxuy = 2.0 * u.fy(0, J) / g.hx;
            else if (I == g.nx) dxuy = -2.0 * u.fy(g.nx - 1, J) / g.hx;
            else dxuy = (u.fy(I, J) - u.fy(I - 1, J)) / g.hx;
            double gam = dyux + dxuy;
            E += wi * wj * gam * gam * A;
        }
    return E;
}

double component_h1_seminorm_sq(const FaceField& u) {
    double s = field_norms(u).h1_semi;
    return s * s;
}

namespace {

// quadratic forms as matrices over the interior-face unknowns
void assemble_form_matrices(const UniformGrid& g, Eigen::SparseMatrix<double>& K,
                            Eigen::SparseMatrix<double>& L) {
    MomentumIndex ix(g);
    const int n = ix.n_ux + ix.n_uy;
    std::vector<Eigen::Triplet<double>> tk, tl;

    auto element = [&](std::vector<Eigen::Triplet<double>>& t, int* idx, double* coef,
                       int cnt, double weight) {
        for (int r = 0; r < cnt; ++r)
            for (int s = 0; s < cnt; ++s)
                t.emplace_back(idx[r], idx[s], weight * coef[r] * coef[s]);
    };

    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int idx[2];
            double coef[2];
            int cnt = 0;
            auto push = [&](int id, double cf) { if (id >= 0) { idx[cnt] = id; coef[cnt] = cf; ++cnt; } };
            push(ix.ux(i, j), -1.0 / g.hx);
            push(ix.ux(i + 1, j), 1.0 / g.hx);
            element(tk, idx, coef, cnt, 2.0);
            element(tl, idx, coef, cnt, 1.0);
            cnt = 0;
            push(ix.uy(i, j), -1.0 / g.hy);
            push(ix.uy(i, j + 1), 1.0 / g.hy);
            element(tk, idx, coef, cnt, 2.0);
            element(tl, idx, coef, cnt, 1.0);
        }

    for (int J = 0; J <= g.ny; ++J)
        for (int I = 0; I <= g.nx; ++I) {
            double wj = (J == 0 || J == g.ny) ? 0.5 : 1.0;
            double wi = (I == 0 || I == g.nx) ? 0.5 : 1.0;
            int idx[4];
            double coef[4];
            int cnt = 0;
            auto push = [&](int id, double cf) { if (id >= 0) { idx[cnt] = id; coef[cnt] = cf; ++cnt; } };
            // dy(ux) at the node
            if (J == 0) push(ix.ux(I, 0), 2.0 / g.hy);
            else if (J == g.ny) push(ix.ux(I, g.ny - 1), -2.0 / g.hy);
            else { push(ix.ux(I, J), 1.0 / g.hy); push(ix.ux(I, J - 1), -1.0 / g.hy); }
            int cnt_ux = cnt;
            element(tl, idx, coef, cnt_ux, wi * wj);
            // dx(uy)
            if (I == 0) push(ix.uy(0, J), 2.0 / g.hx);
            else if (I == g.nx) push(ix.uy(g.nx - 1, J), -2.0 / g.hx);
            else { push(ix.uy(I, J), 1.0 / g.hx); push(ix.uy(I - 1, J), -1.0 / g.hx); }
            element(tk, idx, coef, cnt, wi * wj);  // gamma^2, trapezoid weight
            // dx(uy) alone for the seminorm
            int idx2[2];
            double coef2[2];
            int cnt2 = 0;
            for (int m = cnt_ux; m < cnt; ++m) { idx2[cnt2] = idx[m]; coef2[cnt2] = coef[m]; ++cnt2; }
            element(tl, idx2, coef2, cnt2, wi * wj);
        }

    K.resize(n, n);
    K.setFromTriplets(tk.begin(), tk.end());
    L.resize(n, n);
    L.setFromTriplets(tl.begin(), tl.end());
}

}  // namespace

double korn_constant(const UniformGrid& g, double rel_tol) {
    Eigen::SparseMatrix<double> K, L;
    assemble_form_matrices(g, K, L);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fact(K);
    if (fact.info() != Eigen::Success)
        throw std::runtime_error("korn_constant: viscous block factorization failed");

    // fixed-seed start: symmetric starts (like all-ones) can be orthogonal to
    // the minimal eigenspace and stall the iteration on a higher eigenvalue
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd x(K.rows());
    for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = dist(rng);
    x.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 500; ++it) {
        Eigen::VectorXd y = fact.solve(L * x);
        y.normalize();
        double next = y.dot(K * y) / y.dot(L * y);
        bool done = std::abs(next - lambda) <= rel_tol * std::abs(next);
        lambda = next;
        x.swap(y);
        if (done && it > 5) break;
    }
    return lambda;
}

}  // namespace nanoflux
