#include "nanoflux/invariants.hpp"

#include <cmath>

namespace nanoflux {

bool InvariantReport::all_pass() const {
    for (const auto& it : items)
        if (!it.pass) return false;
    return true;
}

const InvariantItem* InvariantReport::find(const std::string& name) const {
    for (const auto& it : items)
        if (it.name == name) return &it;
    return nullptr;
}

InvariantReport invariant_suite(const SolverState& state, const ModelParams& params,
                                double epsilon, const InvariantOptions& opt,
                                const FractionSource& q) {
    const UniformGrid& g = *state.phi.grid;
    InvariantReport rep;
    auto push = [&](std::string name, double measured, double threshold, std::string note = "") {
        InvariantItem it;
        it.name = std::move(name);
        it.measured = measured;
        it.threshold = threshold;
        it.pass = measured <= threshold;
        it.note = std::move(note);
        rep.items.push_back(std::move(it));
    };

    // fraction bounds
    double envelope = opt.centered_bound_envelope > 0.0 ? opt.centered_bound_envelope
                                                        : g.max_spacing();
    double btol = opt.sub.scheme == AdvectScheme::Upwind ? opt.bound_tol
                                                         : std::max(opt.bound_tol, envelope);
    double viol = std::max({0.0, -state.phi.min_value(), state.phi.max_value() - 1.0});
    push("phi_bounds", viol, btol);

    // grid constants, each with its analytic cross-check where one exists
    double lam_ii = laplacian_min_eigenvalue(g);
    double lam_an = laplacian_min_eigenvalue_analytic(g);
    push("poincare_crosscheck", std::abs(lam_ii - lam_an) / lam_an, 1e-6,
         "inverse iteration vs closed-form eigenvalue");
    const double c_poincare = 1.0 / std::sqrt(lam_ii);
    const double c_korn = korn_constant(g);

    // temperature energy estimate: ||grad T|| <= (C_P / k0) ||f||
    {
        double lhs = field_norms(state.T).h1_semi;
        double rhs = c_poincare / params.k0 * field_norms(params.f).l2;
        push("temperature_energy", lhs, rhs * (1.0 + 1e-9) + 1e-12,
         "||grad T|| vs (C_P/k0)||f||");
    }

    // velocity energy estimate in the Korn-adjusted seminorm:
    // |u|_1h <= C_P / (mu0 c_K) (||g|| + beta ||T||), Korn constant estimated
    {
        double lhs = std::sqrt(component_h1_seminorm_sq(state.u));
        double data = field_norms(params.g).l2 + params.beta * field_norms(state.T).l2;
        double rhs = c_poincare / (params.mu0 * c_korn) * data;
        push("velocity_energy", lhs, rhs * (1.0 + opt.korn_slack) + 1e-12,
             "|u|_1h vs C_P/(mu0 c_K)(||g|| + beta||T||), c_K estimated");
    }

    // conserved-transport divergence, recomputed through a fresh fraction
    // solve so the certification identity applies at this state
    try {
        MollifierKernel kernel = build_kernel(epsilon, g);
        SubproblemOptions sub = opt.sub;
        sub.bound_tol = btol;
        FaceField w = transport_field(state.u, kernel);
        FaceField grad_mT = thermophoretic_gradient(state.T, kernel);
        FaceField hf = cutoff_on_faces(state.phi, params.b, epsilon);
        FaceField S(g);
        for (size_t k = 0; k < S.x.size(); ++k) S.x[k] = hf.x[k] * grad_mT.x[k] / params.T_inf;
        for (size_t k = 0; k < S.y.size(); ++k) S.y[k] = hf.y[k] * grad_mT.y[k] / params.T_inf;
        FractionSolve fs = solve_fraction(state.phi, w, S, params, sub, q);
        FluxResult flux = compute_flux(fs.phi_new, w, S, sub, q);
        push("flux_conservation", flux.div_F_inf, flux.cert_threshold,
             "||div(phi w + j) - q||_inf after a fresh fraction solve");
    } catch (const std::exception& e) {
        InvariantItem it;
        it.name = "flux_conservation";
        it.measured = std::numeric_limits<double>::quiet_NaN();
        it.threshold = 0.0;
        it.pass = false;
        it.note = std::string("subproblem pass failed: ") + e.what();
        rep.items.push_back(std::move(it));
    }

    // velocity divergence at solver tolerance
    push("velocity_divergence", field_norms(divergence(state.u)).linf,
         100.0 * opt.sub.linear.rel_tol);

    return rep;
}

}  // namespace nanoflux
