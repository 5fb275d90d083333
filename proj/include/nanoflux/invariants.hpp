#pragma once

#include "nanoflux/driver.hpp"

namespace nanoflux {

struct InvariantItem {
    std::string name;
    double measured = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string note;
};

struct InvariantReport {
    std::vector<InvariantItem> items;
    bool all_pass() const;
    const InvariantItem* find(const std::string& name) const;
};

struct InvariantOptions {
    SubproblemOptions sub;
    /// Fraction bound tolerance; the centered scheme gets the empirically
    /// frozen O(h) envelope instead when larger.
    double bound_tol = 1e-10;
    double centered_bound_envelope = 0.0;  // 0 => use bound_tol regardless
    double korn_slack = 0.05;              // Korn constant is an estimate
};

/// Report-only evaluation of the lemma-derived inequalities at a state:
/// fraction bounds, the temperature and velocity energy estimates with
/// grid-computed Poincare/Korn constants, the conserved-transport divergence
/// (recomputed through a fresh fraction solve so the certification identity
/// applies), and the velocity divergence.
InvariantReport invariant_suite(const SolverState& state, const ModelParams& params,
                                double epsilon, const InvariantOptions& opt = {},
                                const FractionSource& q = {});

}  // namespace nanoflux
