#include "nanoflux/driver.hpp"

#include <cmath>

namespace nanoflux {

void PicardConfig::validate() const {
    if (!(omega > 0.0 && omega <= 1.0))
        throw std::invalid_argument("PicardConfig: omega must lie in (0,1]");
    if (!(tol > 0.0)) throw std::invalid_argument("PicardConfig: tol must be positive");
    if (max_iters < 1) throw std::invalid_argument("PicardConfig: max_iters must be >= 1");
}

ContinuationSchedule ContinuationSchedule::make(double eps0, double factor, int n_steps,
                                                const UniformGrid& g) {
    ContinuationSchedule s;
    s.eps0 = eps0;
    s.factor = factor;
    s.n_steps = n_steps;
    s.eps_min = 2.0 * g.max_spacing();
    if (!(eps0 > 0.0 && eps0 <= 0.25))
        throw std::invalid_argument("ContinuationSchedule: eps0 must lie in (0, 1/4]");
    if (!(factor > 0.0 && factor < 1.0))
        throw std::invalid_argument("ContinuationSchedule: factor must lie in (0,1)");
    if (n_steps < 0) throw std::invalid_argument("ContinuationSchedule: n_steps must be >= 0");
    double last = eps0 * std::pow(factor, n_steps);
    if (last < s.eps_min)
        throw std::invalid_argument("ContinuationSchedule: final radius " + std::to_string(last) +
                                    " drops below the kernel floor 2*spacing = " +
                                    std::to_string(s.eps_min));
    return s;
}

std::vector<double> ContinuationSchedule::levels() const {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(n_steps + 1));
    for (int n = 0; n <= n_steps; ++n) out.push_back(eps0 * std::pow(factor, n));
    return out;
}

namespace {

double effective_bound_tol(const SubproblemOptions& opt, const UniformGrid& g) {
    // The upwind scheme honors the pointwise bounds to roundoff; centered
    // advection may violate them by O(h), which is recorded, not fatal.
    if (opt.scheme == AdvectScheme::Upwind) return opt.bound_tol;
    return std::max(opt.bound_tol, g.max_spacing());
}

double combined_h1(const CellField& phi, const CellField& T, const FaceField& u) {
    FieldNorms np = field_norms(phi), nT = field_norms(T), nu = field_norms(u);
    auto sq = [](const FieldNorms& n) { return n.l2 * n.l2 + n.h1_semi * n.h1_semi; };
    return std::sqrt(sq(np) + sq(nT) + sq(nu));
}

CellField diff_cell(const CellField& a, const CellField& b) {
    CellField d(*a.grid);
    for (size_t k = 0; k < d.v.size(); ++k) d.v[k] = a.v[k] - b.v[k];
    // same trace on both sides, so the difference carries homogeneous data
    return d;
}

FaceField diff_face(const FaceField& a, const FaceField& b) {
    FaceField d(*a.grid);
    for (size_t k = 0; k < d.x.size(); ++k) d.x[k] = a.x[k] - b.x[k];
    for (size_t k = 0; k < d.y.size(); ++k) d.y[k] = a.y[k] - b.y[k];
    d.noslip = a.noslip && b.noslip;
    return d;
}

}  // namespace

MapOutput apply_map(const SolverState& state, const ModelParams& params,
                    const MollifierKernel& kernel, const SubproblemOptions& opt,
                    const FractionSource& q) {
    const UniformGrid& g = *state.phi.grid;
    params.validate(g);
    double btol = effective_bound_tol(opt, g);
    if (!state.phi.finite() || !state.T.finite() || !state.u.finite())
        throw std::invalid_argument("apply_map: non-finite state");
    if (state.phi.min_value() < -btol || state.phi.max_value() > 1.0 + btol)
        throw std::invalid_argument("apply_map: fraction outside [0,1] beyond tolerance (min " +
                                    std::to_string(state.phi.min_value()) + ", max " +
                                    std::to_string(state.phi.max_value()) + ")");
    if (state.u.max_normal_trace() > 0.0)
        throw std::invalid_argument("apply_map: velocity must have zero normal trace");
    double div_u = field_norms(divergence(state.u)).linf;
    if (div_u > 1e-6)
        throw std::invalid_argument("apply_map: velocity divergence " + std::to_string(div_u) +
                                    " violates the state invariant");

    SubproblemOptions eff = opt;
    eff.bound_tol = btol;

    FaceField w = transport_field(state.u, kernel);

    FaceField grad_mT = thermophoretic_gradient(state.T, kernel);
    FaceField hf = cutoff_on_faces(state.phi, params.b, kernel.epsilon);
    FaceField S(g);
    for (size_t k = 0; k < S.x.size(); ++k) S.x[k] = hf.x[k] * grad_mT.x[k] / params.T_inf;
    for (size_t k = 0; k < S.y.size(); ++k) S.y[k] = hf.y[k] * grad_mT.y[k] / params.T_inf;

    FractionSolve fs = solve_fraction(state.phi, w, S, params, eff, q);
    FluxResult flux = compute_flux(fs.phi_new, w, S, eff, q);
    ScalarSolve ts = solve_temperature(state.phi, w, flux, params, kernel, eff);
    MomentumSolve ms = solve_momentum(state.phi, state.T, w, flux, params, kernel, eff);

    MapOutput out;
    out.state.phi = fs.phi_new;
    out.state.T = ts.field;
    out.state.u = ms.u;
    out.state.p = ms.p;
    out.state.epsilon = kernel.epsilon;

    IterationRecord& r = out.record;
    r.epsilon = kernel.epsilon;
    r.phi_min = fs.phi_new.min_value();
    r.phi_max = fs.phi_new.max_value();
    r.flux_cert_defect = flux.div_F_inf;
    r.div_u_inf = field_norms(divergence(ms.u)).linf;
    r.phi_norms = field_norms(fs.phi_new);
    r.T_norms = field_norms(ts.field);
    r.u_norms = field_norms(ms.u);
    r.p_norms = field_norms(ms.p);
    r.lin_residual_phi = fs.solver_residual;
    r.lin_residual_T = ts.solver_residual;
    r.lin_residual_u = ms.solver_residual;
    return out;
}

PicardResult picard_solve(const SolverState& initial, const ModelParams& params,
                          double epsilon, const PicardConfig& cfg,
                          const SubproblemOptions& opt, const FractionSource& q) {
    cfg.validate();
    const UniformGrid& g = *initial.phi.grid;
    MollifierKernel kernel = build_kernel(epsilon, g);

    PicardResult res;
    SolverState x = initial;
    x.epsilon = epsilon;

    double omega = cfg.omega;
    double best = std::numeric_limits<double>::infinity();
    int grow_streak = 0;
    double prev_rel = std::numeric_limits<double>::infinity();

    SubproblemOptions eff = opt;
    eff.bound_tol = cfg.bound_tol;

    for (int it = 1; it <= cfg.max_iters; ++it) {
        MapOutput out = apply_map(x, params, kernel, eff, q);

        SolverState next;
        next.phi = blend(x.phi, out.state.phi, omega);
        next.phi.dirichlet = out.state.phi.dirichlet;
        next.T = blend(x.T, out.state.T, omega);
        next.u = blend(x.u, out.state.u, omega);
        next.p = out.state.p;  // multiplier, taken undamped
        next.epsilon = epsilon;

        double dnorm = combined_h1(diff_cell(next.phi, x.phi), diff_cell(next.T, x.T),
                                   diff_face(next.u, x.u));
        double scale = std::max(combined_h1(next.phi, next.T, next.u), 1e-30);
        double rel = dnorm / scale;

        out.record.index = it;
        out.record.rel_change = rel;
        res.history.push_back(out.record);

        x = std::move(next);
        res.iterations = it;
        res.final_rel_change = rel;

        if (rel < best) {
            best = rel;
            res.state = x;
        }
        if (rel <= cfg.tol) {
            res.converged = true;
            res.state = x;
            return res;
        }
        if (rel > prev_rel) {
            if (++grow_streak >= 3 && cfg.halve_omega_on_divergence && omega > cfg.omega / 16.0) {
                omega *= 0.5;
                grow_streak = 0;
            }
        } else {
            grow_streak = 0;
        }
        prev_rel = rel;
    }
    return res;  // non-convergence is a value; best iterate is in res.state
}

ContinuationResult continuation_solve(const SolverState& initial, const ModelParams& params,
                                      const ContinuationSchedule& schedule,
                                      const PicardConfig& cfg, const SubproblemOptions& opt,
                                      const FractionSource& q) {
    ContinuationResult out;
    SolverState warm = initial;
    int consecutive_failures = 0;
    for (double eps : schedule.levels()) {
        ContinuationLevel lvl;
        lvl.epsilon = eps;
        lvl.picard = picard_solve(warm, params, eps, cfg, opt, q);
        lvl.residual = weak_residual(lvl.picard.state, params, opt, q);
        warm = lvl.picard.state;
        bool ok = lvl.picard.converged;
        out.levels.push_back(std::move(lvl));
        consecutive_failures = ok ? 0 : consecutive_failures + 1;
        if (consecutive_failures >= 2) return out;  // completed stays false
    }
    out.completed = true;
    return out;
}

// ---------------------------------------------------------------------------
// unregularized weak residual
// ---------------------------------------------------------------------------

namespace {

// -div(mu(phi) D(u)) evaluated at the interior faces (stress form, ghost
// reflection at the walls, nodal viscosity by interior averaging)
FaceField viscous_apply(const CellField& mu, const FaceField& u) {
    const UniformGrid& g = *u.grid;
    std::vector<double> sxx(static_cast<size_t>(g.cell_count()));
    std::vector<double> syy(static_cast<size_t>(g.cell_count()));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            sxx[static_cast<size_t>(g.cell(i, j))] =
                2.0 * mu(i, j) * (u.fx(i + 1, j) - u.fx(i, j)) / g.hx;
            syy[static_cast<size_t>(g.cell(i, j))] =
                2.0 * mu(i, j) * (u.fy(i, j + 1) - u.fy(i, j)) / g.hy;
        }
    std::vector<double> sxy(static_cast<size_t>((g.nx + 1) * (g.ny + 1)));
    for (int J = 0; J <= g.ny; ++J)
        for (int I = 0; I <= g.nx; ++I) {
            double mun = 0.0;
            int cnt = 0;
            for (int dj = -1; dj <= 0; ++dj)
                for (int di = -1; di <= 0; ++di) {
                    int ii = I + di, jj = J + dj;
                    if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny) continue;
                    mun += mu(ii, jj);
                    ++cnt;
                }
            mun /= cnt;
            double dyux;
            if (J == 0) dyux = 2.0 * u.fx(I, 0) / g.hy;
            else if (J == g.ny) dyux = -2.0 * u.fx(I, g.ny - 1) / g.hy;
            else dyux = (u.fx(I, J) - u.fx(I, J - 1)) / g.hy;
            double dxuy;
            if (I == 0) dxuy = 2.0 * u.fy(0, J) / g.hx;
            else if (I == g.nx) dxuy = -2.0 * u.fy(g.nx - 1, J) / g.hx;
            else dxuy = (u.fy(I, J) - u.fy(I - 1, J)) / g.hx;
            sxy[static_cast<size_t>(J * (g.nx + 1) + I)] = mun * (dyux + dxuy);
        }

    FaceField out(g);
    auto node = [&](int I, int J) { return sxy[static_cast<size_t>(J * (g.nx + 1) + I)]; };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            out.fx(i, j) = -(sxx[static_cast<size_t>(g.cell(i, j))] -
                             sxx[static_cast<size_t>(g.cell(i - 1, j))]) / g.hx -
                           (node(i, j + 1) - node(i, j)) / g.hy;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.fy(i, j) = -(syy[static_cast<size_t>(g.cell(i, j))] -
                             syy[static_cast<size_t>(g.cell(i, j - 1))]) / g.hy -
                           (node(i + 1, j) - node(i, j)) / g.hx;
    return out;
}

// plain-cutoff face coefficient at the state's fraction
FaceField cutoff_faces_raw(const CellField& phi, const BoundaryData& b) {
    const UniformGrid& g = *phi.grid;
    FaceField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            if (i == 0) out.fx(i, j) = cutoff(b.west[static_cast<size_t>(j)]);
            else if (i == g.nx) out.fx(i, j) = cutoff(b.east[static_cast<size_t>(j)]);
            else out.fx(i, j) = 0.5 * (cutoff(phi(i - 1, j)) + cutoff(phi(i, j)));
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (j == 0) out.fy(i, j) = cutoff(b.south[static_cast<size_t>(i)]);
            else if (j == g.ny) out.fy(i, j) = cutoff(b.north[static_cast<size_t>(i)]);
            else out.fy(i, j) = 0.5 * (cutoff(phi(i, j - 1)) + cutoff(phi(i, j)));
        }
    return out;
}

// H1 dual norm of a cell residual: sqrt(<R, z>) with (-lap + id) z = R
double dual_norm_cells(const CellField& R) {
    const UniformGrid& g = *R.grid;
    const int n = g.cell_count();
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs(n);
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            int c = g.cell(i, j);
            double diag = 2.0 * (ax + ay) + 1.0;
            if (i > 0) trips.emplace_back(c, g.cell(i - 1, j), -ax); else diag += ax;
            if (i < g.nx - 1) trips.emplace_back(c, g.cell(i + 1, j), -ax); else diag += ax;
            if (j > 0) trips.emplace_back(c, g.cell(i, j - 1), -ay); else diag += ay;
            if (j < g.ny - 1) trips.emplace_back(c, g.cell(i, j + 1), -ay); else diag += ay;
            trips.emplace_back(c, c, diag);
            rhs[c] = R.v[static_cast<size_t>(c)];
        }
    LinearSystem sys;
    sys.from_triplets(n, trips, std::move(rhs), "riesz_cells");
    SolveReport rep = linear_solve(sys);
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += R.v[static_cast<size_t>(c)] * rep.x[c];
    return std::sqrt(std::max(0.0, s * g.cell_area()));
}

// componentwise Riesz solve on the face lattices (no-slip conventions)
double dual_norm_faces(const FaceField& R) {
    const UniformGrid& g = *R.grid;
    const int nux = (g.nx - 1) * g.ny, nuy = g.nx * (g.ny - 1);
    auto iux = [&](int i, int j) { return j * (g.nx - 1) + (i - 1); };
    auto iuy = [&](int i, int j) { return (j - 1) * g.nx + i; };
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);

    double total = 0.0;
    {
        std::vector<Eigen::Triplet<double>> trips;
        Eigen::VectorXd rhs(nux);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 1; i < g.nx; ++i) {
                int r = iux(i, j);
                double diag = 2.0 * (ax + ay) + 1.0;
                if (i > 1) trips.emplace_back(r, iux(i - 1, j), -ax);
                if (i < g.nx - 1) trips.emplace_back(r, iux(i + 1, j), -ax);
                if (j > 0) trips.emplace_back(r, iux(i, j - 1), -ay); else diag += ay;
                if (j < g.ny - 1) trips.emplace_back(r, iux(i, j + 1), -ay); else diag += ay;
                trips.emplace_back(r, r, diag);
                rhs[r] = R.fx(i, j);
            }
        LinearSystem sys;
        sys.from_triplets(nux, trips, std::move(rhs), "riesz_ux");
        SolveReport rep = linear_solve(sys);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 1; i < g.nx; ++i)
                total += R.fx(i, j) * rep.x[iux(i, j)];
    }
    {
        std::vector<Eigen::Triplet<double>> trips;
        Eigen::VectorXd rhs(nuy);
        for (int j = 1; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                int r = iuy(i, j);
                double diag = 2.0 * (ax + ay) + 1.0;
                if (j > 1) trips.emplace_back(r, iuy(i, j - 1), -ay);
                if (j < g.ny - 1) trips.emplace_back(r, iuy(i, j + 1), -ay);
                if (i > 0) trips.emplace_back(r, iuy(i - 1, j), -ax); else diag += ax;
                if (i < g.nx - 1) trips.emplace_back(r, iuy(i + 1, j), -ax); else diag += ax;
                trips.emplace_back(r, r, diag);
                rhs[r] = R.fy(i, j);
            }
        LinearSystem sys;
        sys.from_triplets(nuy, trips, std::move(rhs), "riesz_uy");
        SolveReport rep = linear_solve(sys);
        for (int j = 1; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                total += R.fy(i, j) * rep.x[iuy(i, j)];
    }
    return std::sqrt(std::max(0.0, total * g.cell_area()));
}

}  // namespace

double WeakResidual::total() const { return std::sqrt(r_phi * r_phi + r_T * r_T + r_u * r_u); }

WeakResidual weak_residual(const SolverState& state, const ModelParams& params,
                           const SubproblemOptions& opt, const FractionSource& q) {
    const UniformGrid& g = *state.phi.grid;
    const FaceField& u = state.u;

    FaceField hf = cutoff_faces_raw(state.phi, params.b);
    FaceField gradT = gradient(state.T);  // zero trace
    FaceField Su(g);
    for (size_t k = 0; k < Su.x.size(); ++k) Su.x[k] = hf.x[k] * gradT.x[k] / params.T_inf;
    for (size_t k = 0; k < Su.y.size(); ++k) Su.y[k] = hf.y[k] * gradT.y[k] / params.T_inf;

    FaceField grad_phi = gradient(state.phi);
    FaceField j_u(g);
    for (size_t k = 0; k < j_u.x.size(); ++k) j_u.x[k] = -grad_phi.x[k] - Su.x[k];
    for (size_t k = 0; k < j_u.y.size(); ++k) j_u.y[k] = -grad_phi.y[k] - Su.y[k];

    // fraction residual
    CellField adv_phi = advect_scalar(u, state.phi, opt.scheme);
    CellField div_j = divergence(j_u);
    CellField R_phi(g);
    for (size_t k = 0; k < R_phi.v.size(); ++k) {
        R_phi.v[k] = adv_phi.v[k] + div_j.v[k];
        if (q.present()) R_phi.v[k] -= q.q.v[k];
    }

    // conserved transport of the unregularized system
    FaceField Fu(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double pf;
            if (i == 0) pf = 0.5 * state.phi(0, j);
            else if (i == g.nx) pf = 0.5 * state.phi(g.nx - 1, j);
            else pf = 0.5 * (state.phi(i - 1, j) + state.phi(i, j));
            if (opt.scheme == AdvectScheme::Upwind && i > 0 && i < g.nx)
                pf = u.fx(i, j) > 0.0 ? state.phi(i - 1, j) : state.phi(i, j);
            Fu.fx(i, j) = u.fx(i, j) * pf + j_u.fx(i, j);
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double pf;
            if (j == 0) pf = 0.5 * state.phi(i, 0);
            else if (j == g.ny) pf = 0.5 * state.phi(i, g.ny - 1);
            else pf = 0.5 * (state.phi(i, j - 1) + state.phi(i, j));
            if (opt.scheme == AdvectScheme::Upwind && j > 0 && j < g.ny)
                pf = u.fy(i, j) > 0.0 ? state.phi(i, j - 1) : state.phi(i, j);
            Fu.fy(i, j) = u.fy(i, j) * pf + j_u.fy(i, j);
        }

    // temperature residual
    CellField kphi(g);
    for (size_t k = 0; k < kphi.v.size(); ++k) kphi.v[k] = params.k_of(state.phi.v[k]);
    FaceField kf(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            if (i == 0) kf.fx(i, j) = params.k_of(params.b.west[static_cast<size_t>(j)]);
            else if (i == g.nx) kf.fx(i, j) = params.k_of(params.b.east[static_cast<size_t>(j)]);
            else kf.fx(i, j) = 0.5 * (kphi(i - 1, j) + kphi(i, j));
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (j == 0) kf.fy(i, j) = params.k_of(params.b.south[static_cast<size_t>(i)]);
            else if (j == g.ny) kf.fy(i, j) = params.k_of(params.b.north[static_cast<size_t>(i)]);
            else kf.fy(i, j) = 0.5 * (kphi(i, j - 1) + kphi(i, j));
        }
    FaceField diff_flux(g);
    for (size_t k = 0; k < diff_flux.x.size(); ++k) diff_flux.x[k] = kf.x[k] * gradT.x[k];
    for (size_t k = 0; k < diff_flux.y.size(); ++k) diff_flux.y[k] = kf.y[k] * gradT.y[k];
    CellField diffT = divergence(diff_flux);
    CellField advT_u = advect_scalar(u, state.T, opt.scheme);
    CellField advT_F = advect_scalar(Fu, state.T, opt.scheme);
    CellField R_T(g);
    for (size_t k = 0; k < R_T.v.size(); ++k)
        R_T.v[k] = -diffT.v[k] + advT_u.v[k] + advT_F.v[k] - params.f.v[k];

    // momentum residual on the interior faces
    CellField muphi(g);
    for (size_t k = 0; k < muphi.v.size(); ++k) muphi.v[k] = params.mu_of(state.phi.v[k]);
    FaceField R_u = viscous_apply(muphi, u);
    FaceField adv_u = advect_vector(u, u);
    FaceField adv_F = advect_vector(Fu, u);
    FaceField grad_p = gradient(state.p);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            double Tf = 0.5 * (state.T(i - 1, j) + state.T(i, j));
            R_u.fx(i, j) += adv_u.fx(i, j) + adv_F.fx(i, j) + grad_p.fx(i, j) +
                            params.beta * Tf * params.eg_x - params.g.fx(i, j);
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double Tf = 0.5 * (state.T(i, j - 1) + state.T(i, j));
            R_u.fy(i, j) += adv_u.fy(i, j) + adv_F.fy(i, j) + grad_p.fy(i, j) +
                            params.beta * Tf * params.eg_y - params.g.fy(i, j);
        }
    // boundary components are constrained, not residuals
    for (int j = 0; j < g.ny; ++j) { R_u.fx(0, j) = 0.0; R_u.fx(g.nx, j) = 0.0; }
    for (int i = 0; i < g.nx; ++i) { R_u.fy(i, 0) = 0.0; R_u.fy(i, g.ny) = 0.0; }

    WeakResidual out;
    out.r_phi = dual_norm_cells(R_phi);
    out.r_T = dual_norm_cells(R_T);
    out.r_u = dual_norm_faces(R_u);
    return out;
}

}  // namespace nanoflux
