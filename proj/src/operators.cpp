#include "nanoflux/operators.hpp"

#include "nanoflux/linsys.hpp"

#include <cmath>

namespace nanoflux {

namespace {

double trace_w(const CellField& a, int j) {
    return a.has_dirichlet() ? a.dirichlet.west[static_cast<size_t>(j)] : 0.0;
}
double trace_e(const CellField& a, int j) {
    return a.has_dirichlet() ? a.dirichlet.east[static_cast<size_t>(j)] : 0.0;
}
double trace_s(const CellField& a, int i) {
    return a.has_dirichlet() ? a.dirichlet.south[static_cast<size_t>(i)] : 0.0;
}
double trace_n(const CellField& a, int i) {
    return a.has_dirichlet() ? a.dirichlet.north[static_cast<size_t>(i)] : 0.0;
}

}  // namespace

FaceField gradient(const CellField& a) {
    const UniformGrid& g = *a.grid;
    FaceField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double d;
            if (i == 0)
                d = 2.0 * (a(0, j) - trace_w(a, j)) / g.hx;
            else if (i == g.nx)
                d = 2.0 * (trace_e(a, j) - a(g.nx - 1, j)) / g.hx;
            else
                d = (a(i, j) - a(i - 1, j)) / g.hx;
            out.fx(i, j) = d;
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double d;
            if (j == 0)
                d = 2.0 * (a(i, 0) - trace_s(a, i)) / g.hy;
            else if (j == g.ny)
                d = 2.0 * (trace_n(a, i) - a(i, g.ny - 1)) / g.hy;
            else
                d = (a(i, j) - a(i, j - 1)) / g.hy;
            out.fy(i, j) = d;
        }
    return out;
}

CellField divergence(const FaceField& w) {
    const UniformGrid& g = *w.grid;
    CellField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = (w.fx(i + 1, j) - w.fx(i, j)) / g.hx +
                        (w.fy(i, j + 1) - w.fy(i, j)) / g.hy;
    return out;
}

double sbp_defect(const CellField& a, const FaceField& w) {
    return std::abs(l2_inner(gradient(a), w) + l2_inner(a, divergence(w)));
}

namespace {

// transported face value: mean of the two adjacent cells, zero extension at
// the boundary (upwind takes the upstream side instead)
double face_value_x(const CellField& a, int i, int j, double flux, AdvectScheme s) {
    const int nx = a.grid->nx;
    if (s == AdvectScheme::Centered) {
        if (i == 0) return 0.5 * a(0, j);
        if (i == nx) return 0.5 * a(nx - 1, j);
        return 0.5 * (a(i - 1, j) + a(i, j));
    }
    if (i == 0) return flux > 0.0 ? 0.0 : a(0, j);
    if (i == nx) return flux > 0.0 ? a(nx - 1, j) : 0.0;
    return flux > 0.0 ? a(i - 1, j) : a(i, j);
}

double face_value_y(const CellField& a, int i, int j, double flux, AdvectScheme s) {
    const int ny = a.grid->ny;
    if (s == AdvectScheme::Centered) {
        if (j == 0) return 0.5 * a(i, 0);
        if (j == ny) return 0.5 * a(i, ny - 1);
        return 0.5 * (a(i, j - 1) + a(i, j));
    }
    if (j == 0) return flux > 0.0 ? 0.0 : a(i, 0);
    if (j == ny) return flux > 0.0 ? a(i, ny - 1) : 0.0;
    return flux > 0.0 ? a(i, j - 1) : a(i, j);
}

}  // namespace

CellField advect_scalar(const FaceField& F, const CellField& a, AdvectScheme scheme) {
    const UniformGrid& g = *a.grid;
    CellField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double fe = F.fx(i + 1, j) * face_value_x(a, i + 1, j, F.fx(i + 1, j), scheme);
            double fw = F.fx(i, j) * face_value_x(a, i, j, F.fx(i, j), scheme);
            double fn = F.fy(i, j + 1) * face_value_y(a, i, j + 1, F.fy(i, j + 1), scheme);
            double fs = F.fy(i, j) * face_value_y(a, i, j, F.fy(i, j), scheme);
            out(i, j) = (fe - fw) / g.hx + (fn - fs) / g.hy;
        }
    return out;
}

double advection_skew_defect(const FaceField& F, const CellField& a, double div_tol,
                             AdvectScheme scheme) {
    CellField d = divergence(F);
    double div_inf = field_norms(d).linf;
    if (div_inf > div_tol)
        throw std::invalid_argument(
            "advection_skew_defect: transport not divergence free, ||div F||_inf = " +
            std::to_string(div_inf) + " > " + std::to_string(div_tol));
    return std::abs(l2_inner(advect_scalar(F, a, scheme), a));
}

FaceField advect_vector(const FaceField& F, const FaceField& u, AdvectScheme scheme) {
    const UniformGrid& g = *u.grid;
    FaceField out(g);

    // x-component: streamwise fluxes at cell centers, cross fluxes at nodes
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 1; i < g.nx; ++i) {
            auto xflux = [&](int ic) {  // cell-center flux between faces ic, ic+1
                double Fc = 0.5 * (F.fx(ic, j) + F.fx(ic + 1, j));
                double val = (scheme == AdvectScheme::Centered)
                                 ? 0.5 * (u.fx(ic, j) + u.fx(ic + 1, j))
                                 : (Fc > 0.0 ? u.fx(ic, j) : u.fx(ic + 1, j));
                return Fc * val;
            };
            auto yflux = [&](int J) {  // node flux below/above face row
                double Fn = 0.5 * (F.fy(i - 1, J) + F.fy(i, J));
                double val;
                if (scheme == AdvectScheme::Centered) {
                    if (J == 0) val = 0.5 * u.fx(i, 0);
                    else if (J == g.ny) val = 0.5 * u.fx(i, g.ny - 1);
                    else val = 0.5 * (u.fx(i, J - 1) + u.fx(i, J));
                } else {
                    if (J == 0) val = Fn > 0.0 ? 0.0 : u.fx(i, 0);
                    else if (J == g.ny) val = Fn > 0.0 ? u.fx(i, g.ny - 1) : 0.0;
                    else val = Fn > 0.0 ? u.fx(i, J - 1) : u.fx(i, J);
                }
                return Fn * val;
            };
            out.fx(i, j) = (xflux(i) - xflux(i - 1)) / g.hx + (yflux(j + 1) - yflux(j)) / g.hy;
        }
    }

    // y-component, mirrored
    for (int j = 1; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            auto yflux = [&](int jc) {
                double Fc = 0.5 * (F.fy(i, jc) + F.fy(i, jc + 1));
                double val = (scheme == AdvectScheme::Centered)
                                 ? 0.5 * (u.fy(i, jc) + u.fy(i, jc + 1))
                                 : (Fc > 0.0 ? u.fy(i, jc) : u.fy(i, jc + 1));
                return Fc * val;
            };
            auto xflux = [&](int I) {
                double Fn = 0.5 * (F.fx(I, j - 1) + F.fx(I, j));
                double val;
                if (scheme == AdvectScheme::Centered) {
                    if (I == 0) val = 0.5 * u.fy(0, j);
                    else if (I == g.nx) val = 0.5 * u.fy(g.nx - 1, j);
                    else val = 0.5 * (u.fy(I - 1, j) + u.fy(I, j));
                } else {
                    if (I == 0) val = Fn > 0.0 ? 0.0 : u.fy(0, j);
                    else if (I == g.nx) val = Fn > 0.0 ? u.fy(g.nx - 1, j) : 0.0;
                    else val = Fn > 0.0 ? u.fy(I - 1, j) : u.fy(I, j);
                }
                return Fn * val;
            };
            out.fy(i, j) = (yflux(j) - yflux(j - 1)) / g.hy + (xflux(i + 1) - xflux(i)) / g.hx;
        }
    }
    return out;
}

LerayResult leray_project(const FaceField& w, double rel_tol) {
    const UniformGrid& g = *w.grid;
    FaceField wz = w;
    wz.enforce_zero_normal();

    CellField rhs_field = divergence(wz);

    // Neumann Laplacian with one pinned cell; rows are div(grad q) = div w
    const int n = g.cell_count();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(5 * n));
    Eigen::VectorXd rhs(n);
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int c = g.cell(i, j);
            if (c == 0) {  // pin
                trips.emplace_back(c, c, 1.0);
                rhs[c] = 0.0;
                continue;
            }
            double diag = 0.0;
            auto nb = [&](int ii, int jj, double coef) {
                trips.emplace_back(c, g.cell(ii, jj), coef);
                diag -= coef;
            };
            if (i > 0) nb(i - 1, j, ax);
            if (i < g.nx - 1) nb(i + 1, j, ax);
            if (j > 0) nb(i, j - 1, ay);
            if (j < g.ny - 1) nb(i, j + 1, ay);
            trips.emplace_back(c, c, diag);
            rhs[c] = rhs_field(i, j);
        }

    LinearSystem sys;
    sys.from_triplets(n, trips, std::move(rhs), "leray_poisson");
    LinearSolverOptions opt;
    opt.rel_tol = rel_tol;
    SolveReport rep = linear_solve(sys, opt);

    LerayResult out;
    out.projected = wz;
    out.solver_residual = rep.residual_rel;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            out.projected.fx(i, j) -= (rep.x[g.cell(i, j)] - rep.x[g.cell(i - 1, j)]) / g.hx;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.projected.fy(i, j) -= (rep.x[g.cell(i, j)] - rep.x[g.cell(i, j - 1)]) / g.hy;
    out.achieved_div_inf = field_norms(divergence(out.projected)).linf;
    return out;
}

CellField harmonic_extension(const UniformGrid& g, const BoundaryData& b) {
    b.check_range(0.0, 1.0, "harmonic_extension");

    const int n = g.cell_count();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(5 * n));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int c = g.cell(i, j);
            double diag = 2.0 * (ax + ay);
            // ghost reflection: a_ghost = 2 b - a_in
            if (i > 0) trips.emplace_back(c, g.cell(i - 1, j), -ax);
            else { diag += ax; rhs[c] += 2.0 * ax * b.west[static_cast<size_t>(j)]; }
            if (i < g.nx - 1) trips.emplace_back(c, g.cell(i + 1, j), -ax);
            else { diag += ax; rhs[c] += 2.0 * ax * b.east[static_cast<size_t>(j)]; }
            if (j > 0) trips.emplace_back(c, g.cell(i, j - 1), -ay);
            else { diag += ay; rhs[c] += 2.0 * ay * b.south[static_cast<size_t>(i)]; }
            if (j < g.ny - 1) trips.emplace_back(c, g.cell(i, j + 1), -ay);
            else { diag += ay; rhs[c] += 2.0 * ay * b.north[static_cast<size_t>(i)]; }
            trips.emplace_back(c, c, diag);
        }

    LinearSystem sys;
    sys.from_triplets(n, trips, std::move(rhs), "harmonic_extension");
    SolveReport rep = linear_solve(sys);

    CellField out(g);
    for (int c = 0; c < n; ++c) out.v[static_cast<size_t>(c)] = rep.x[c];
    out.dirichlet = b;
    return out;
}

namespace {

Eigen::SparseMatrix<double> dirichlet_laplacian(const UniformGrid& g) {
    const int n = g.cell_count();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(5 * n));
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int c = g.cell(i, j);
            double diag = 2.0 * (ax + ay);
            if (i > 0) trips.emplace_back(c, g.cell(i - 1, j), -ax); else diag += ax;
            if (i < g.nx - 1) trips.emplace_back(c, g.cell(i + 1, j), -ax); else diag += ax;
            if (j > 0) trips.emplace_back(c, g.cell(i, j - 1), -ay); else diag += ay;
            if (j < g.ny - 1) trips.emplace_back(c, g.cell(i, j + 1), -ay); else diag += ay;
            trips.emplace_back(c, c, diag);
        }
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

}  // namespace

double laplacian_min_eigenvalue(const UniformGrid& g, double rel_tol) {
    Eigen::SparseMatrix<double> A = dirichlet_laplacian(g);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fact(A);
    if (fact.info() != Eigen::Success)
        throw std::runtime_error("laplacian_min_eigenvalue: factorization failed");

    // the ground mode is positive, so the all-ones vector overlaps it
    Eigen::VectorXd x = Eigen::VectorXd::Ones(A.rows());
    x.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd y = fact.solve(x);
        y.normalize();
        double next = y.dot(A * y);
        bool done = std::abs(next - lambda) <= rel_tol * std::abs(next);
        lambda = next;
        x.swap(y);
        if (done && it > 2) break;
    }
    return lambda;
}

double laplacian_min_eigenvalue_analytic(const UniformGrid& g) {
    auto s = [](double h, double length) {
        double t = std::sin(0.5 * M_PI * h / length);
        return 4.0 / (h * h) * t * t;
    };
    return s(g.hx, g.lx) + s(g.hy, g.ly);
}

double poincare_constant(const UniformGrid& g) {
    return 1.0 / std::sqrt(laplacian_min_eigenvalue(g));
}

FaceField curl_of_stream(const UniformGrid& g,
                         const std::function<double(double, double)>& psi) {
    FaceField w(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i)
            w.fx(i, j) = (psi(g.xface_x(i), g.yface_y(j + 1)) - psi(g.xface_x(i), g.yface_y(j))) / g.hy;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            w.fy(i, j) = -(psi(g.xface_x(i + 1), g.yface_y(j)) - psi(g.xface_x(i), g.yface_y(j))) / g.hx;
    return w;
}

}  // namespace nanoflux
