#include "nanoflux/linsys.hpp"

#include <Eigen/SparseLU>
#include <Eigen/IterativeLinearSolvers>
#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>
#include <stdexcept>

namespace nanoflux {

void LinearSystem::from_triplets(int n, std::vector<Eigen::Triplet<double>>& trips,
                                 Eigen::VectorXd b, std::string name) {
    A.resize(n, n);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    rhs = std::move(b);
    label = std::move(name);
    if (rhs.size() != n)
        throw std::invalid_argument("LinearSystem " + label + ": rhs size mismatch");
    if (!rhs.allFinite() || !Eigen::Map<const Eigen::VectorXd>(A.valuePtr(), A.nonZeros()).allFinite())
        throw std::invalid_argument("LinearSystem " + label + ": non-finite entries");
}

namespace {

void finish_report(const LinearSystem& sys, SolveReport& rep, const LinearSolverOptions& opt) {
    if (!rep.x.allFinite())
        throw std::runtime_error("linear_solve[" + sys.label + "]: non-finite solution (singular matrix?)");
    double bn = std::max(sys.rhs.norm(), 1.0);
    rep.residual_l2 = (sys.A * rep.x - sys.rhs).norm();
    rep.residual_rel = rep.residual_l2 / bn;
    // a factorization that "succeeded" on a numerically singular matrix still
    // shows up here
    if (rep.residual_rel > std::max(1e6 * opt.rel_tol, 1e-4))
        throw std::runtime_error("linear_solve[" + sys.label + "]: residual " +
                                 std::to_string(rep.residual_rel) +
                                 " far above tolerance; matrix singular or ill-posed");
}

}  // namespace

SolveReport linear_solve(const LinearSystem& sys, const LinearSolverOptions& opt) {
    SolveReport rep;
    if (sys.size() <= opt.direct_size_limit) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.analyzePattern(sys.A);
        lu.factorize(sys.A);
        if (lu.info() != Eigen::Success)
            throw std::runtime_error("linear_solve[" + sys.label + "]: singular matrix (" +
                                     lu.lastErrorMessage() + ")");
        rep.x = lu.solve(sys.rhs);
        rep.direct = true;
        // nullspace probe: a rank-deficient factorization reproduces A*1
        // wildly off the ones vector even when the residual looks clean
        {
            Eigen::VectorXd ones = Eigen::VectorXd::Ones(sys.size());
            Eigen::VectorXd probe = lu.solve(sys.A * ones);
            double dev = (probe - ones).lpNorm<Eigen::Infinity>();
            if (!probe.allFinite() || dev > 1e-6)
                throw std::runtime_error("linear_solve[" + sys.label +
                                         "]: numerically singular matrix (nullspace probe " +
                                         std::to_string(dev) + "; unpinned pressure?)");
        }
        finish_report(sys, rep, opt);
        return rep;
    }

    Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> krylov;
    krylov.preconditioner().setDroptol(1e-5);
    krylov.preconditioner().setFillfactor(12);
    krylov.set_restart(60);
    krylov.setTolerance(opt.rel_tol);
    krylov.setMaxIterations(opt.max_iterations);
    krylov.compute(sys.A);
    if (krylov.info() != Eigen::Success)
        throw std::runtime_error("linear_solve[" + sys.label + "]: preconditioner failed");
    rep.x = krylov.solve(sys.rhs);
    rep.direct = false;
    rep.iterations = static_cast<int>(krylov.iterations());
    if (krylov.info() != Eigen::Success) {
        double res = (sys.A * rep.x - sys.rhs).norm() / std::max(sys.rhs.norm(), 1.0);
        throw std::runtime_error("linear_solve[" + sys.label + "]: Krylov cap " +
                                 std::to_string(opt.max_iterations) +
                                 " reached, residual " + std::to_string(res));
    }
    finish_report(sys, rep, opt);
    return rep;
}

Eigen::VectorXd dense_solve_oracle(const LinearSystem& sys) {
    const int n = sys.size();
    if (n > 2500)
        throw std::invalid_argument("dense_solve_oracle: " + std::to_string(n) +
                                    " unknowns exceeds the 2500 cap");

    // plain Gaussian elimination with row pivoting on an explicit dense copy
    std::vector<std::vector<double>> M(static_cast<size_t>(n),
                                       std::vector<double>(static_cast<size_t>(n), 0.0));
    for (int k = 0; k < sys.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, k); it; ++it)
            M[static_cast<size_t>(it.row())][static_cast<size_t>(it.col())] = it.value();
    std::vector<double> b(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) b[static_cast<size_t>(i)] = sys.rhs[i];

    double pivot_scale = 0.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = std::abs(M[static_cast<size_t>(col)][static_cast<size_t>(col)]);
        for (int r = col + 1; r < n; ++r) {
            double v = std::abs(M[static_cast<size_t>(r)][static_cast<size_t>(col)]);
            if (v > best) { best = v; piv = r; }
        }
        pivot_scale = std::max(pivot_scale, best);
        if (best <= 1e-12 * pivot_scale)
            throw std::runtime_error("dense_solve_oracle: singular matrix at column " +
                                     std::to_string(col));
        if (piv != col) {
            std::swap(M[static_cast<size_t>(piv)], M[static_cast<size_t>(col)]);
            std::swap(b[static_cast<size_t>(piv)], b[static_cast<size_t>(col)]);
        }
        const double d = M[static_cast<size_t>(col)][static_cast<size_t>(col)];
        for (int r = col + 1; r < n; ++r) {
            double m = M[static_cast<size_t>(r)][static_cast<size_t>(col)] / d;
            if (m == 0.0) continue;
            M[static_cast<size_t>(r)][static_cast<size_t>(col)] = 0.0;
            for (int c = col + 1; c < n; ++c)
                M[static_cast<size_t>(r)][static_cast<size_t>(c)] -=
                    m * M[static_cast<size_t>(col)][static_cast<size_t>(c)];
            b[static_cast<size_t>(r)] -= m * b[static_cast<size_t>(col)];
        }
    }
    Eigen::VectorXd x(n);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[static_cast<size_t>(r)];
        for (int c = r + 1; c < n; ++c)
            s -= M[static_cast<size_t>(r)][static_cast<size_t>(c)] * x[c];
        x[r] = s / M[static_cast<size_t>(r)][static_cast<size_t>(r)];
    }
    return x;
}

}  // namespace nanoflux
