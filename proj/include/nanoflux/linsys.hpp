#pragma once

#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace nanoflux {

/// Assembled sparse system. Rows are the pointwise discrete operator; the
/// residual of a row is therefore the pointwise equation defect, which the
/// flux certification reads directly.
struct LinearSystem {
    Eigen::SparseMatrix<double> A;   // compressed column storage
    Eigen::VectorXd rhs;
    std::string label;

    int size() const { return static_cast<int>(A.rows()); }
    void from_triplets(int n, std::vector<Eigen::Triplet<double>>& trips,
                       Eigen::VectorXd b, std::string name);
};

struct SolveReport {
    Eigen::VectorXd x;
    double residual_l2 = 0.0;    // ||A x - b||_2
    double residual_rel = 0.0;   // relative to max(||b||_2, 1)
    bool direct = true;
    int iterations = 0;          // Krylov iterations when not direct
};

struct LinearSolverOptions {
    double rel_tol = 1e-10;          // target for the iterative fallback
    int max_iterations = 2000;
    int direct_size_limit = 200000;  // above this, restarted Krylov + ILU
};

/// Sparse direct factorization up to direct_size_limit unknowns, BiCGSTAB
/// with incomplete LU above it. Throws std::runtime_error (carrying the
/// achieved residual) on singular matrices or iteration-cap exhaustion.
SolveReport linear_solve(const LinearSystem& sys, const LinearSolverOptions& opt = {});

/// Row-pivoted dense elimination, written out longhand so it shares nothing
/// with the sparse path. Caps at 2500 unknowns.
Eigen::VectorXd dense_solve_oracle(const LinearSystem& sys);

}  // namespace nanoflux
