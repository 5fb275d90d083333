// Acceptance suite: one numbered criterion per function, each printing a
// PASS/FAIL line with the measured quantities. Run with a number to execute a
// single criterion, with no arguments for all of them. The exit status is the
// count of failed criteria.

#include "nanoflux/driver.hpp"
#include "nanoflux/invariants.hpp"
#include "nanoflux/mms.hpp"

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace nanoflux;

namespace {

// frozen regression values, established on the first full measurement run
constexpr int kSmallDataIterations = 5;          // criterion 8, 64^2, tol 1e-8
constexpr double kCenteredBoundEnvelope = 0.5;   // criterion 4: violations <= 0.5*h
constexpr double kCoupledOrderFloorPhi = 1.00;   // criterion 10 regression floors
constexpr double kCoupledOrderFloorT = 1.10;
constexpr double kCoupledOrderFloorU = 1.70;

struct Check {
    bool pass = true;
    std::vector<std::string> lines;
    void add(bool ok, const std::string& what) {
        pass = pass && ok;
        lines.push_back(std::string(ok ? "    ok   " : "    FAIL ") + what);
    }
    void info(const std::string& what) { lines.push_back("    note " + what); }
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

CellField random_cell(const UniformGrid& g, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    CellField f(g);
    for (double& v : f.v) v = d(rng);
    return f;
}

FaceField random_face_zero_normal(const UniformGrid& g, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    FaceField w(g);
    for (double& v : w.x) v = d(rng);
    for (double& v : w.y) v = d(rng);
    w.enforce_zero_normal();
    return w;
}

// ---------------------------------------------------------------------------
// Randomized battery of solver-reachable fraction-solve applications.
// Problem data are drawn from the admissible ranges (coefficients above their
// floors, |e_g| = 1, 0 <= b <= 1, moderate sources, including saturated
// boundary data near 0 and 1); each Picard iteration feeds one admissible
// state to the fraction solve, and the history records the raw output extrema
// and the flux certification defect.
struct BatteryResult {
    int records = 0;
    double min_phi = 0.0;       // most negative output value
    double overshoot = 0.0;     // max(phi) - 1, positive part
    double max_cert_defect = 0.0;
};

BatteryResult fraction_battery(int n, AdvectScheme scheme, int setups) {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    BatteryResult out;
    for (int s = 0; s < setups; ++s) {
        UniformGrid g(n, n);
        ModelParams p;
        p.k0 = 0.5 + uni(rng);
        p.k1 = 0.5 * uni(rng);
        p.mu0 = 0.5 + uni(rng);
        p.mu1 = 0.5 * uni(rng);
        p.beta = 0.5 * uni(rng);
        double ang = 2 * M_PI * uni(rng);
        p.eg_x = std::cos(ang);
        p.eg_y = std::sin(ang);
        double bc;
        if (s % 4 == 0) bc = uni(rng);
        else if (s % 4 == 1) bc = 0.9 + 0.1 * uni(rng);   // saturated side
        else if (s % 4 == 2) bc = 0.1 * uni(rng);
        else bc = 0.5;
        if (s % 5 == 0)
            p.b = BoundaryData::from_function(g, [&](double x, double y) {
                return 0.5 + 0.45 * std::sin(M_PI * x) * (y > 0.5 ? 1.0 : -1.0);
            });
        else
            p.b = BoundaryData::constant(g, bc);
        p.f = CellField(g, 0.5 * (uni(rng) - 0.3));
        p.g = FaceField(g);
        double ga = 0.5 * uni(rng);
        for (double& v : p.g.y) v = -ga;
        for (double& v : p.g.x) v = 0.3 * (uni(rng) - 0.5);

        PicardConfig pc;
        pc.max_iters = 5;
        pc.tol = 1e-12;  // keep iterating; every application is a record
        SubproblemOptions sub;
        sub.scheme = scheme;
        SolverState init = SolverState::initial(g, p, 0.25);
        PicardResult r = picard_solve(init, p, 0.25, pc, sub);
        for (const auto& h : r.history) {
            ++out.records;
            out.min_phi = std::min(out.min_phi, h.phi_min);
            out.overshoot = std::max(out.overshoot, h.phi_max - 1.0);
            out.max_cert_defect = std::max(out.max_cert_defect, h.flux_cert_defect);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

Check criterion1() {
    Check c;
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> dist(-0.5, 1.5);
    for (double eps : {0.25, 0.1, 0.05, 0.01}) {
        double sup_gap = 0.0, sup_deriv = 0.0, arg_deriv = 0.0;
        for (int k = 0; k < 1000000; ++k) {
            double z = dist(rng);
            sup_gap = std::max(sup_gap, std::abs(cutoff(z) - cutoff_smooth(z, eps)));
            double d = std::abs(cutoff_smooth_deriv(z, eps));
            if (d > sup_deriv) {
                sup_deriv = d;
                arg_deriv = z;
            }
        }
        c.add(sup_gap <= eps - eps * eps,
              fmt("eps=%.2f  sup|h - h_eps| = %.6f <= eps - eps^2 = %.6f", eps, sup_gap,
                  eps - eps * eps));
        bool deriv_ok = sup_deriv <= 1.0 + 1e-12;
        c.add(deriv_ok, fmt("eps=%.2f  max|h_eps'| = %.6f at z = %.4f (asserted <= 1 + 1e-12)",
                            eps, sup_deriv, arg_deriv));
        if (!deriv_ok)
            c.info(fmt("exact bound for this piecewise cubic is (2-eps)^2/3 = %.6f; no C1 "
                       "cubic matching the cutoff and its slope at the joints stays below 1",
                       cutoff_smooth_lipschitz(eps)));
    }
    return c;
}

Check criterion2() {
    Check c;
    for (int n : {16, 32}) {
        UniformGrid g(n, n);
        for (double eps : {0.25, 0.125}) {
            MollifierKernel k = build_kernel(eps, g);
            c.add(std::abs(k.weight_sum_times_area() - 1.0) <= 1e-12,
                  fmt("n=%d eps=%.3f unit mass defect %.2e", n, eps,
                      std::abs(k.weight_sum_times_area() - 1.0)));
        }
        MollifierKernel k = build_kernel(0.25, g);
        double worst = 0.0;
        for (uint32_t seed = 0; seed < 100; ++seed) {
            CellField f = random_cell(g, 100 + seed);
            worst = std::max(worst, field_norms(mollify(f, k)).l2 / field_norms(f).l2);
        }
        c.add(worst <= 1.0 + 1e-13, fmt("n=%d worst L2 expansion ratio %.15f", n, worst));
        double worst_adj = 0.0;
        for (uint32_t seed = 0; seed < 100; ++seed) {
            CellField a = random_cell(g, 300 + seed), b = random_cell(g, 500 + seed);
            worst_adj = std::max(worst_adj, adjoint_defect(a, b, k) /
                                                (field_norms(a).l2 * field_norms(b).l2));
        }
        c.add(worst_adj <= 1e-12, fmt("n=%d adjoint defect / (|f||g|) = %.2e", n, worst_adj));
    }
    return c;
}

Check criterion3() {
    Check c;
    for (int n : {8, 16, 32}) {
        UniformGrid g(n, n);
        double worst_sbp = 0.0, worst_skew = 0.0, worst_div = 0.0;
        std::mt19937 rng(77);
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        for (uint32_t t = 0; t < 100; ++t) {
            CellField a = random_cell(g, 1000 + t);
            FaceField w = random_face_zero_normal(g, 2000 + t);
            worst_sbp = std::max(worst_sbp, sbp_defect(a, w) /
                                                (field_norms(a).l2 * field_norms(w).l2));
            double a1 = d(rng), a2 = d(rng);
            FaceField F = curl_of_stream(g, [&](double x, double y) {
                return a1 * std::sin(M_PI * x) * std::sin(M_PI * y) +
                       a2 * x * y * (1 - x) * (1 - y) * std::cos(M_PI * x);
            });
            CellField b = random_cell(g, 3000 + t);
            double nb = field_norms(b).l2;
            worst_skew = std::max(worst_skew, advection_skew_defect(F, b) /
                                                  (field_norms(F).linf * nb * nb));
            worst_div = std::max(
                worst_div, leray_project(random_face_zero_normal(g, 4000 + t)).achieved_div_inf);
        }
        c.add(worst_sbp <= 1e-12, fmt("n=%2d summation-by-parts defect %.2e", n, worst_sbp));
        c.add(worst_skew <= 1e-12, fmt("n=%2d skew-advection defect %.2e", n, worst_skew));
        c.add(worst_div <= 1e-10, fmt("n=%2d Leray projected divergence %.2e", n, worst_div));
    }
    return c;
}

Check criterion4() {
    Check c;
    BatteryResult up = fraction_battery(32, AdvectScheme::Upwind, 12);
    c.add(up.records >= 50, fmt("upwind battery size %d >= 50", up.records));
    c.add(up.min_phi >= -1e-10 && up.overshoot <= 1e-10,
          fmt("upwind bounds: min %.3e, overshoot %.3e (tolerance 1e-10)", up.min_phi,
              up.overshoot));
    for (int n : {16, 32, 64}) {
        BatteryResult ce = fraction_battery(n, AdvectScheme::Centered, 12);
        double h = 1.0 / n;
        double viol = std::max(-ce.min_phi, ce.overshoot);
        c.add(viol <= std::max(1e-10, kCenteredBoundEnvelope * h),
              fmt("centered n=%2d violation %.3e <= %.1f*h = %.3e (frozen envelope; the first "
                  "measurement saw none)",
                  n, viol, kCenteredBoundEnvelope, kCenteredBoundEnvelope * h));
    }
    return c;
}

Check criterion5() {
    Check c;
    UniformGrid g(16, 16);
    ModelParams base = small_data_preset(g);
    MollifierKernel kernel = build_kernel(0.25, g);
    SubproblemOptions opt;
    const double cp = poincare_constant(g);
    const double ck = korn_constant(g);
    c.info(fmt("C_P = %.6f (analytic %.6f), Korn constant = %.6f", cp,
               1.0 / std::sqrt(laplacian_min_eigenvalue_analytic(g)), ck));

    CellField phi0 = harmonic_extension(g, base.b);
    FaceField w = transport_field(curl_of_stream(g, [](double x, double y) {
                                      return 0.05 * std::sin(M_PI * x) * std::sin(M_PI * y);
                                  }),
                                  kernel);
    FluxResult fr;
    fr.j = FaceField(g);
    fr.F = FaceField(g);
    double worst_T = 0.0;
    for (uint32_t t = 0; t < 20; ++t) {
        ModelParams p = base;
        p.f = random_cell(g, 7000 + t);
        ScalarSolve ts = solve_temperature(phi0, w, fr, p, kernel, opt);
        double lhs = field_norms(ts.field).h1_semi;
        double rhs = cp / p.k0 * field_norms(p.f).l2;
        worst_T = std::max(worst_T, lhs / rhs);
    }
    c.add(worst_T <= 1.0 + 1e-9,
          fmt("20 random f: max ||grad T|| / ((C_P/k0)||f||) = %.9f", worst_T));

    std::mt19937 rng(71);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    double worst_u = 0.0;
    for (uint32_t t = 0; t < 20; ++t) {
        ModelParams p = base;
        p.beta = 0.2;
        for (double& v : p.g.x) v = 0.3 * d(rng);
        for (double& v : p.g.y) v = 0.3 * d(rng);
        CellField T0 = random_cell(g, 9100 + t);
        for (double& v : T0.v) v *= 0.5;
        MomentumSolve ms = solve_momentum(phi0, T0, w, fr, p, kernel, opt);
        double lhs = std::sqrt(component_h1_seminorm_sq(ms.u));
        double rhs = cp / (p.mu0 * ck) * (field_norms(p.g).l2 + p.beta * field_norms(T0).l2);
        worst_u = std::max(worst_u, lhs / rhs);
    }
    c.add(worst_u <= 1.05, fmt("20 random g,T: max |u|_1h / bound = %.9f (5%% slack)", worst_u));
    return c;
}

Check criterion6() {
    Check c;
    // every application already certifies internally (compute_flux throws on
    // violation); re-assert the recorded maxima against 10x the solver tol
    BatteryResult up = fraction_battery(32, AdvectScheme::Upwind, 12);
    BatteryResult ce = fraction_battery(32, AdvectScheme::Centered, 12);
    c.add(up.max_cert_defect <= 1e-9,
          fmt("upwind battery: max ||div(phi w + j) - q||_inf = %.2e", up.max_cert_defect));
    c.add(ce.max_cert_defect <= 1e-9,
          fmt("centered battery: max ||div(phi w + j) - q||_inf = %.2e", ce.max_cert_defect));

    UniformGrid g(64, 64);
    ModelParams p = small_data_preset(g);
    PicardConfig pc;
    SolverState init = SolverState::initial(g, p, 0.25);
    PicardResult r = picard_solve(init, p, 0.25, pc, SubproblemOptions{});
    double worst = 0.0;
    for (const auto& h : r.history) worst = std::max(worst, h.flux_cert_defect);
    c.add(r.converged && worst <= 1e-9,
          fmt("small-data 64^2 run: max certification defect %.2e", worst));
    return c;
}

Check criterion7() {
    Check c;
    UniformGrid g(8, 8);
    ModelParams p = small_data_preset(g);
    MollifierKernel kernel = build_kernel(0.25, g);
    SubproblemOptions opt;
    CellField phi0 = harmonic_extension(g, p.b);
    CellField T0(g);
    T0.fill([](double x, double y) { return 0.4 * std::sin(M_PI * x) * std::sin(M_PI * y); });
    FaceField u0 = curl_of_stream(g, [](double x, double y) {
        return 0.15 * std::sin(M_PI * x) * std::sin(M_PI * y);
    });
    u0.noslip = true;
    FaceField w = transport_field(u0, kernel);
    FaceField gmT = thermophoretic_gradient(T0, kernel);
    FaceField hf = cutoff_on_faces(phi0, p.b, kernel.epsilon);
    FaceField S(g);
    for (size_t k = 0; k < S.x.size(); ++k) S.x[k] = hf.x[k] * gmT.x[k];
    for (size_t k = 0; k < S.y.size(); ++k) S.y[k] = hf.y[k] * gmT.y[k];

    auto gap = [](const LinearSystem& sys) {
        Eigen::VectorXd a = linear_solve(sys).x;
        Eigen::VectorXd b = dense_solve_oracle(sys);
        return (a - b).norm() / std::max(b.norm(), 1e-30);
    };
    LinearSystem sys_phi = assemble_fraction_system(phi0, w, S, p, opt, {});
    double gp = gap(sys_phi);
    c.add(gp <= 1e-10, fmt("fraction system (%d unknowns): oracle gap %.2e", sys_phi.size(), gp));

    FractionSolve fs = solve_fraction(phi0, w, S, p, opt);
    FluxResult fr = compute_flux(fs.phi_new, w, S, opt);
    LinearSystem sys_T = assemble_temperature_system(phi0, w, fr, p, kernel, opt);
    double gt = gap(sys_T);
    c.add(gt <= 1e-10,
          fmt("temperature system (%d unknowns): oracle gap %.2e", sys_T.size(), gt));

    LinearSystem sys_u = assemble_momentum_system(phi0, T0, w, fr, p, kernel, opt);
    double gu = gap(sys_u);
    c.add(sys_u.size() <= 2500 && gu <= 1e-10,
          fmt("momentum saddle system (%d unknowns): oracle gap %.2e", sys_u.size(), gu));
    return c;
}

Check criterion8() {
    Check c;
    {
        UniformGrid g(16, 16);
        ModelParams p = trivial_preset(g, 0.3);
        PicardConfig pc;
        SolverState init = SolverState::initial(g, p, 0.25);
        PicardResult r = picard_solve(init, p, 0.25, pc, SubproblemOptions{});
        c.add(r.converged && r.iterations == 1,
              fmt("trivial preset: converged=%d in %d iteration(s)", r.converged, r.iterations));
    }
    {
        UniformGrid g(64, 64);
        ModelParams p = small_data_preset(g);
        PicardConfig pc;  // omega 1, tol 1e-8
        SolverState init = SolverState::initial(g, p, 0.25);
        PicardResult r = picard_solve(init, p, 0.25, pc, SubproblemOptions{});
        c.add(r.converged, fmt("small-data 64^2 converged, rel change %.2e", r.final_rel_change));
        c.add(r.iterations <= 50, fmt("iterations %d <= 50", r.iterations));
        c.add(r.iterations <= kSmallDataIterations,
              fmt("iterations %d <= frozen regression bound %d", r.iterations,
                  kSmallDataIterations));
    }
    return c;
}

Check criterion9() {
    Check c;
    // schedule 0.25 * 2^-n, n = 0..4; its floor of two spacings forces the
    // 128^2 grid (on 64^2 the last level would cross the kernel floor and the
    // schedule constructor rejects it)
    UniformGrid g(128, 128);
    ModelParams p = small_data_preset(g);
    PicardConfig pc;
    SolverState init = SolverState::initial(g, p, 0.25);
    ContinuationSchedule sched = ContinuationSchedule::make(0.25, 0.5, 4, g);
    ContinuationResult cont = continuation_solve(init, p, sched, pc, SubproblemOptions{});
    c.add(cont.completed && cont.levels.size() == 5, "all five levels ran");
    double prev = -1.0;
    for (const auto& lvl : cont.levels) {
        double total = lvl.residual.total();
        bool mono = prev < 0.0 || total <= 1.10 * prev;
        c.add(lvl.picard.converged && mono,
              fmt("eps=%.6f iters=%d weak residual %.6e%s", lvl.epsilon, lvl.picard.iterations,
                  total, mono ? "" : " (not within 10% of the previous level)"));
        prev = total;
    }
    InvariantOptions iopt;
    InvariantReport rep = invariant_suite(cont.levels.back().picard.state, p,
                                          cont.levels.back().epsilon, iopt);
    for (const auto& it : rep.items)
        c.add(it.pass, fmt("invariant %-22s measured %.3e threshold %.3e", it.name.c_str(),
                           it.measured, it.threshold));
    return c;
}

Check criterion10() {
    Check c;
    ModelParams coeffs;
    coeffs.k0 = 1.0;
    coeffs.k1 = 0.1;
    coeffs.mu0 = 1.0;
    coeffs.mu1 = 0.1;
    coeffs.beta = 0.1;

    StudyResult poisson =
        convergence_study(trig_case(), StudyKind::Poisson, {16, 32, 64, 128}, coeffs);
    c.add(poisson.completed && std::abs(poisson.order_T - 2.0) <= 0.1,
          fmt("decoupled Poisson: order %.3f (target 2.0 +- 0.1)", poisson.order_T));

    StudyResult frac =
        convergence_study(trig_case(), StudyKind::Fraction, {16, 32, 64, 128}, coeffs);
    c.add(frac.completed && frac.order_phi >= 1.9,
          fmt("decoupled fraction solve: order %.3f >= 1.9", frac.order_phi));

    StudyResult temp =
        convergence_study(trig_case(), StudyKind::Temperature, {16, 32, 64, 128}, coeffs);
    c.add(temp.completed && temp.order_T >= 1.9,
          fmt("decoupled temperature solve: order %.3f >= 1.9", temp.order_T));

    StudyResult stokes =
        convergence_study(trig_case(), StudyKind::Stokes, {16, 32, 64, 128}, coeffs);
    c.add(stokes.completed && stokes.order_u >= 1.9,
          fmt("decoupled Stokes: velocity order %.3f >= 1.9", stokes.order_u));
    c.add(stokes.order_p >= 0.9,
          fmt("decoupled Stokes: pressure order %.3f >= 0.9", stokes.order_p));

    StudyOptions copt;
    copt.policy = EpsPolicy::ProportionalToH;
    copt.eps_per_h = 2.0;  // the kernel floor; no admissible policy shrinks faster
    StudyResult coup =
        convergence_study(trig_case(), StudyKind::Coupled, {16, 32, 64}, coeffs, copt);
    c.add(coup.completed, "coupled trig case converged on every grid");
    bool phi_ok = coup.order_phi >= 1.5, T_ok = coup.order_T >= 1.5, u_ok = coup.order_u >= 1.5;
    c.add(phi_ok, fmt("coupled fraction order %.3f >= 1.5", coup.order_phi));
    c.add(T_ok, fmt("coupled temperature order %.3f >= 1.5", coup.order_T));
    c.add(u_ok, fmt("coupled velocity order %.3f >= 1.5", coup.order_u));
    if (!phi_ok || !T_ok)
        c.info("the eps-proportional study is bounded by the Theta(eps) = Theta(2h) "
               "regularization gap of the mollified model (zero-extension smoothing has an "
               "O(1)-amplitude error in the eps strip at the wall, where the cutoff is 1/4); "
               "with the kernel floor eps >= 2*spacing no implementation of this construction "
               "reaches 1.5 for the fraction and temperature fields");
    c.add(coup.order_phi >= kCoupledOrderFloorPhi && coup.order_T >= kCoupledOrderFloorT &&
              coup.order_u >= kCoupledOrderFloorU,
          fmt("frozen regression floors hold: phi %.2f/%.2f, T %.2f/%.2f, u %.2f/%.2f",
              coup.order_phi, kCoupledOrderFloorPhi, coup.order_T, kCoupledOrderFloorT,
              coup.order_u, kCoupledOrderFloorU));
    return c;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Check()> run;
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<Criterion> criteria = {
        {1, "regularization suite (cutoff gap and derivative bound)", criterion1},
        {2, "mollifier suite (unit mass, non-expansiveness, adjoint)", criterion2},
        {3, "operator algebra (SBP, skew advection, Leray projection)", criterion3},
        {4, "pointwise fraction bounds (upwind battery, centered envelope)", criterion4},
        {5, "energy estimates (temperature and velocity)", criterion5},
        {6, "flux certification after every fraction solve", criterion6},
        {7, "dense-oracle equivalence of the assembled systems", criterion7},
        {8, "fixed-point behavior (trivial and small-data presets)", criterion8},
        {9, "eps-continuation with residual monitor and invariant suite", criterion9},
        {10, "manufactured-solution convergence orders", criterion10},
    };

    int only = -1;
    if (argc > 1) only = std::atoi(argv[1]);

    int failed = 0;
    for (const auto& cr : criteria) {
        if (only > 0 && cr.id != only) continue;
        Check c;
        try {
            c = cr.run();
        } catch (const std::exception& e) {
            c.pass = false;
            c.lines.push_back(std::string("    FAIL exception: ") + e.what());
        }
        std::printf("[%s] criterion %d: %s\n", c.pass ? "PASS" : "FAIL", cr.id, cr.name);
        for (const auto& l : c.lines) std::printf("%s\n", l.c_str());
        if (!c.pass) ++failed;
    }
    if (only <= 0) std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed;
}
