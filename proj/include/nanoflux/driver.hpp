#pragma once

#include "nanoflux/subproblems.hpp"

#include <optional>

namespace nanoflux {

struct PicardConfig {
    double omega = 1.0;        // damping, in (0,1]
    double tol = 1e-8;         // relative combined H1 change
    int max_iters = 50;
    double bound_tol = 1e-10;
    /// On three consecutive growing steps, halve omega (down to omega/16)
    /// instead of giving up immediately.
    bool halve_omega_on_divergence = false;

    void validate() const;
};

/// Geometric regularization schedule eps_n = eps0 * factor^n, n = 0..n_steps.
/// The floor eps_min must stay at or above twice the grid spacing or the
/// kernel degenerates; construction rejects schedules that cross it.
struct ContinuationSchedule {
    double eps0 = 0.25;
    double factor = 0.5;
    int n_steps = 0;
    double eps_min = 0.0;

    static ContinuationSchedule make(double eps0, double factor, int n_steps,
                                     const UniformGrid& g);
    std::vector<double> levels() const;
};

struct IterationRecord {
    int index = 0;
    double epsilon = 0.0;
    double rel_change = 0.0;
    double phi_min = 0.0, phi_max = 0.0;
    double flux_cert_defect = 0.0;
    double div_u_inf = 0.0;
    FieldNorms phi_norms, T_norms, p_norms;
    FieldNorms u_norms;
    double lin_residual_phi = 0.0, lin_residual_T = 0.0, lin_residual_u = 0.0;
};

struct MapOutput {
    SolverState state;
    IterationRecord record;
};

/// One application of the fixed-point map: fraction, flux, temperature,
/// momentum, in that order, all subproblems fed by the same input state and
/// the same certified F. Throws on invariant violations of the input.
MapOutput apply_map(const SolverState& state, const ModelParams& params,
                    const MollifierKernel& kernel, const SubproblemOptions& opt,
                    const FractionSource& q = {});

struct PicardResult {
    SolverState state;           // converged state, or best iterate otherwise
    bool converged = false;
    int iterations = 0;
    double final_rel_change = 0.0;
    std::vector<IterationRecord> history;
};

/// Damped Picard iteration x <- (1-omega) x + omega G(x) until the relative
/// combined H1 change drops below tol. Non-convergence is a result, not an
/// exception: the continuation driver decides what to do with it.
PicardResult picard_solve(const SolverState& initial, const ModelParams& params,
                          double epsilon, const PicardConfig& cfg,
                          const SubproblemOptions& opt,
                          const FractionSource& q = {});

struct WeakResidual {
    double r_phi = 0.0;
    double r_T = 0.0;
    double r_u = 0.0;
    double total() const;
};

/// Defect of the state in the *unregularized* discrete problem: no
/// mollification, the plain cutoff, j = -grad(phi) - cutoff(phi) grad(T)/T_inf,
/// transport by the state's own velocity. Returned in the discrete dual norm
/// (residual paired against the H1 Riesz representative per field), which is
/// the quantity that shrinks at the discretization rate for exact fields.
WeakResidual weak_residual(const SolverState& state, const ModelParams& params,
                           const SubproblemOptions& opt,
                           const FractionSource& q = {});

struct ContinuationLevel {
    double epsilon = 0.0;
    PicardResult picard;
    WeakResidual residual;
};

struct ContinuationResult {
    std::vector<ContinuationLevel> levels;
    bool completed = false;   // false if two consecutive levels failed
};

/// Runs the schedule with warm starts; each level's converged state seeds the
/// next. Records the unregularized weak residual at every level.
ContinuationResult continuation_solve(const SolverState& initial,
                                      const ModelParams& params,
                                      const ContinuationSchedule& schedule,
                                      const PicardConfig& cfg,
                                      const SubproblemOptions& opt,
                                      const FractionSource& q = {});

}  // namespace nanoflux
