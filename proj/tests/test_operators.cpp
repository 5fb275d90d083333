#include "nanoflux/operators.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nanoflux;

namespace {

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

}  // namespace

TEST_SUITE("operators") {

TEST_CASE("gradient of constants and linears") {
    UniformGrid g(16, 16);
    CellField c(g, 3.7);
    c.dirichlet = BoundaryData::constant(g, 3.7);
    FaceField gr = gradient(c);
    for (double v : gr.x) CHECK(std::abs(v) <= 1e-13);
    for (double v : gr.y) CHECK(std::abs(v) <= 1e-13);

    CellField a(g);
    a.fill([](double x, double) { return x; });
    a.dirichlet = BoundaryData::from_function(g, [](double x, double) { return x; });
    FaceField ga = gradient(a);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) CHECK(ga.fx(i, j) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : ga.y) CHECK(std::abs(v) <= 1e-12);
}

TEST_CASE("gradient converges at second order") {
    auto max_err = [](int n) {
        UniformGrid g(n, n);
        CellField a(g);
        auto f = [](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); };
        a.fill(f);
        a.dirichlet = BoundaryData::from_function(g, f);
        FaceField ga = gradient(a);
        double e = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i) {
                double exact = M_PI * std::cos(M_PI * g.xface_x(i)) * std::sin(M_PI * g.cell_y(j));
                e = std::max(e, std::abs(ga.fx(i, j) - exact));
            }
        return e;
    };
    double ratio = max_err(16) / max_err(32);
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("divergence basics") {
    UniformGrid g(12, 12);
    FaceField w(g, 0.0);
    for (double& v : w.x) v = 2.0;
    for (double& v : w.y) v = -1.5;
    CellField d = divergence(w);
    for (double v : d.v) CHECK(std::abs(v) <= 1e-13);

    // div(grad a) equals the ghost-consistent 5-point Laplacian, exactly
    CellField a = random_cell(g, 9);
    a.dirichlet = BoundaryData::constant(g, 0.4);
    CellField lap = divergence(gradient(a));
    const double ax = 1.0 / (g.hx * g.hx), ay = 1.0 / (g.hy * g.hy);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            auto at = [&](int ii, int jj, double ghost) {
                if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny) return ghost;
                return a(ii, jj);
            };
            double gw = 2.0 * 0.4 - a(i, j);
            double direct = ax * (at(i - 1, j, gw) - 2.0 * a(i, j) + at(i + 1, j, gw)) +
                            ay * (at(i, j - 1, gw) - 2.0 * a(i, j) + at(i, j + 1, gw));
            CHECK(lap(i, j) == doctest::Approx(direct).epsilon(1e-12));
        }

    // total flux of a zero-normal field telescopes away
    for (uint32_t seed = 0; seed < 5; ++seed) {
        FaceField r = random_face_zero_normal(g, seed);
        CellField dr = divergence(r);
        double total = 0.0;
        for (double v : dr.v) total += v * g.cell_area();
        CHECK(std::abs(total) <= 1e-12);
    }
}

TEST_CASE("summation by parts is exact") {
    CellField zero4(UniformGrid(4, 4));
    // a = 0 gives zero defect trivially
    {
        UniformGrid g(8, 8);
        CellField a(g);
        FaceField w = random_face_zero_normal(g, 77);
        CHECK(sbp_defect(a, w) == 0.0);
    }
    for (int n : {8, 16, 32}) {
        UniformGrid g(n, n);
        for (uint32_t seed = 0; seed < 100; ++seed) {
            CellField a = random_cell(g, 1000 + seed);  // homogeneous trace
            FaceField w = random_face_zero_normal(g, 2000 + seed);
            double defect = sbp_defect(a, w);
            CHECK(defect <= 1e-12 * field_norms(a).l2 * field_norms(w).l2 + 1e-15);
        }
    }

    // direct expansion on 4x4 with its own difference formulas
    {
        UniformGrid g(4, 4);
        CellField a = random_cell(g, 3);
        FaceField w = random_face_zero_normal(g, 4);
        double s1 = 0.0;  // <grad a, w>
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i) {
                double grad;
                if (i == 0) grad = 2.0 * a(0, j) / g.hx;
                else if (i == g.nx) grad = -2.0 * a(g.nx - 1, j) / g.hx;
                else grad = (a(i, j) - a(i - 1, j)) / g.hx;
                double wt = (i == 0 || i == g.nx) ? 0.5 : 1.0;
                s1 += wt * grad * w.fx(i, j) * g.cell_area();
            }
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double grad;
                if (j == 0) grad = 2.0 * a(i, 0) / g.hy;
                else if (j == g.ny) grad = -2.0 * a(i, g.ny - 1) / g.hy;
                else grad = (a(i, j) - a(i, j - 1)) / g.hy;
                double wt = (j == 0 || j == g.ny) ? 0.5 : 1.0;
                s1 += wt * grad * w.fy(i, j) * g.cell_area();
            }
        double s2 = 0.0;  // <a, div w>
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                s2 += a(i, j) * ((w.fx(i + 1, j) - w.fx(i, j)) / g.hx +
                                 (w.fy(i, j + 1) - w.fy(i, j)) / g.hy) * g.cell_area();
        CHECK(std::abs(s1 + s2) <= 1e-14);
        CHECK(sbp_defect(a, w) == doctest::Approx(std::abs(s1 + s2)).epsilon(1e-10));
    }

    // composition: w = grad b makes <grad a, grad b> = -<a, lap b>
    {
        UniformGrid g(16, 16);
        CellField a = random_cell(g, 5), b = random_cell(g, 6);
        FaceField gb = gradient(b);
        gb.enforce_zero_normal();  // clip the boundary trace for the identity
        double lhs = l2_inner(gradient(a), gb);
        double rhs = -l2_inner(a, divergence(gb));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("advection basics") {
    UniformGrid g(16, 16);
    // constant field, divergence-free transport: zero away from the boundary
    FaceField F = curl_of_stream(g, [](double x, double y) {
        return std::sin(2.0 * M_PI * x) * std::sin(M_PI * y);
    });
    CellField c(g, 2.5);
    CellField adv = advect_scalar(F, c);
    for (int j = 1; j + 1 < g.ny; ++j)
        for (int i = 1; i + 1 < g.nx; ++i) CHECK(std::abs(adv(i, j)) <= 1e-11);

    CellField a = random_cell(g, 12);
    CellField z = advect_scalar(FaceField(g), a);
    for (double v : z.v) CHECK(v == 0.0);
}

TEST_CASE("advection converges to div(F a)") {
    auto f_a = [](double x, double y) { return std::cos(M_PI * x) * std::sin(2.0 * M_PI * y) + 0.3; };
    auto Fx = [](double x, double y) { return std::sin(M_PI * x) * std::cos(M_PI * y); };
    auto Fy = [](double x, double y) { return std::cos(M_PI * x) * std::sin(M_PI * y); };
    // d/dx(Fx a) + d/dy(Fy a), hand-differentiated
    auto exact = [&](double x, double y) {
        double pi = M_PI;
        double a = f_a(x, y);
        double ax = -pi * std::sin(pi * x) * std::sin(2 * pi * y);
        double ay = 2 * pi * std::cos(pi * x) * std::cos(2 * pi * y);
        double fxx = pi * std::cos(pi * x) * std::cos(pi * y);
        double fyy = pi * std::cos(pi * x) * std::cos(pi * y);
        return fxx * a + Fx(x, y) * ax + fyy * a + Fy(x, y) * ay;
    };
    auto interior_err = [&](int n, AdvectScheme s) {
        UniformGrid g(n, n);
        CellField a(g);
        a.fill(f_a);
        FaceField F(g);
        F.fill(Fx, Fy);
        CellField adv = advect_scalar(F, a, s);
        double e = 0.0;
        for (int j = 1; j + 1 < g.ny; ++j)
            for (int i = 1; i + 1 < g.nx; ++i)
                e = std::max(e, std::abs(adv(i, j) - exact(g.cell_x(i), g.cell_y(j))));
        return e;
    };
    double r_centered = interior_err(32, AdvectScheme::Centered) / interior_err(64, AdvectScheme::Centered);
    double r_upwind = interior_err(32, AdvectScheme::Upwind) / interior_err(64, AdvectScheme::Upwind);
    CHECK(r_centered > 3.5);   // second order
    CHECK(r_upwind > 1.7);     // first order
    CHECK(r_upwind < 2.9);
}

TEST_CASE("centered advection is exactly skew for discrete div-free transport") {
    UniformGrid g(16, 16);
    CHECK(advection_skew_defect(FaceField(g), random_cell(g, 1)) == 0.0);

    std::mt19937 rng(31);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        double a1 = d(rng), a2 = d(rng), a3 = d(rng);
        FaceField F = curl_of_stream(g, [&](double x, double y) {
            return a1 * std::sin(M_PI * x) * std::sin(M_PI * y) +
                   a2 * std::sin(2 * M_PI * x) * std::sin(M_PI * y) +
                   a3 * x * x * y * (1 - x) * (1 - y);
        });
        CHECK(field_norms(divergence(F)).linf <= 1e-11);
        CellField a = random_cell(g, 500 + static_cast<uint32_t>(trial));
        double defect = advection_skew_defect(F, a);
        double bound = 1e-12 * field_norms(F).linf * field_norms(a).l2 * field_norms(a).l2;
        CHECK(defect <= bound + 1e-15);
    }

    // direct quadratic-form expansion on 6x6
    {
        UniformGrid g6(6, 6);
        FaceField F = curl_of_stream(g6, [](double x, double y) {
            return std::sin(M_PI * x) * std::sin(M_PI * y) * (1.0 + x * y);
        });
        CellField a = random_cell(g6, 99);
        CellField adv = advect_scalar(F, a);
        double q = 0.0;
        for (int j = 0; j < g6.ny; ++j)
            for (int i = 0; i < g6.nx; ++i) q += adv(i, j) * a(i, j) * g6.cell_area();
        CHECK(advection_skew_defect(F, a) == doctest::Approx(std::abs(q)).epsilon(1e-12));
        CHECK(std::abs(q) <= 1e-13);
    }

    // precondition violation reports the measured divergence
    {
        FaceField bad(g, 0.0);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 1; i < g.nx; ++i) bad.fx(i, j) = g.xface_x(i);
        bad.enforce_zero_normal();
        CHECK_THROWS_WITH_AS(advection_skew_defect(bad, random_cell(g, 2)),
                             doctest::Contains("divergence free"), std::invalid_argument);
    }
}

TEST_CASE("upwind advection is dissipative") {
    UniformGrid g(16, 16);
    std::mt19937 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        FaceField F = curl_of_stream(g, [&](double x, double y) {
            return std::sin(M_PI * x) * std::sin(M_PI * y) * (1.0 + 0.3 * trial);
        });
        CellField a = random_cell(g, 700 + static_cast<uint32_t>(trial));
        CellField adv = advect_scalar(F, a, AdvectScheme::Upwind);
        double q = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) q += adv(i, j) * a(i, j) * g.cell_area();
        CHECK(q >= -1e-12);
    }
}

TEST_CASE("vector advection is exactly skew componentwise") {
    UniformGrid g(12, 12);
    FaceField F = curl_of_stream(g, [](double x, double y) {
        return std::sin(M_PI * x) * std::sin(M_PI * y) * (1.3 - 0.4 * x + 0.2 * y * y);
    });
    std::mt19937 rng(51);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    FaceField u(g);
    for (double& v : u.x) v = d(rng);
    for (double& v : u.y) v = d(rng);
    u.enforce_zero_normal();
    FaceField adv = advect_vector(F, u);
    double q = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) q += adv.fx(i, j) * u.fx(i, j) * g.cell_area();
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) q += adv.fy(i, j) * u.fy(i, j) * g.cell_area();
    CHECK(std::abs(q) <= 1e-13);
}

TEST_CASE("Leray projection") {
    UniformGrid g(16, 16);
    // already divergence-free input passes through
    FaceField divfree = curl_of_stream(g, [](double x, double y) {
        return std::sin(M_PI * x) * std::sin(M_PI * y);
    });
    LerayResult r1 = leray_project(divfree);
    for (size_t k = 0; k < divfree.x.size(); ++k)
        CHECK(std::abs(r1.projected.x[k] - divfree.x[k]) <= 1e-10);
    for (size_t k = 0; k < divfree.y.size(); ++k)
        CHECK(std::abs(r1.projected.y[k] - divfree.y[k]) <= 1e-10);

    // pure gradient with clipped trace maps to (nearly) zero
    CellField q0 = random_cell(g, 8);
    FaceField grad_part = gradient(q0);
    grad_part.enforce_zero_normal();
    LerayResult r2 = leray_project(grad_part);
    CHECK(field_norms(divergence(r2.projected)).linf <= 1e-10);

    for (uint32_t seed = 0; seed < 10; ++seed) {
        FaceField w = random_face_zero_normal(g, 900 + seed);
        LerayResult r = leray_project(w);
        CHECK(r.achieved_div_inf <= 1e-10);
        LerayResult rr = leray_project(r.projected);  // idempotent
        double diff = 0.0;
        for (size_t k = 0; k < w.x.size(); ++k)
            diff = std::max(diff, std::abs(rr.projected.x[k] - r.projected.x[k]));
        for (size_t k = 0; k < w.y.size(); ++k)
            diff = std::max(diff, std::abs(rr.projected.y[k] - r.projected.y[k]));
        CHECK(diff <= 1e-10);
    }
}

TEST_CASE("harmonic extension") {
    UniformGrid g(16, 16);
    CellField c = harmonic_extension(g, BoundaryData::constant(g, 0.42));
    for (double v : c.v) CHECK(v == doctest::Approx(0.42).epsilon(1e-12));

    // hot left edge: strict interior bounds from the maximum principle
    BoundaryData hot = BoundaryData::constant(g, 0.0);
    for (double& v : hot.west) v = 1.0;
    CellField e = harmonic_extension(g, hot);
    for (double v : e.v) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }

    // linears are discrete-harmonic
    BoundaryData lin = BoundaryData::from_function(g, [](double x, double) { return x; });
    CellField l = harmonic_extension(g, lin);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            CHECK(l(i, j) == doctest::Approx(g.cell_x(i)).epsilon(1e-10));

    BoundaryData bad = BoundaryData::constant(g, 1.3);
    CHECK_THROWS_AS(harmonic_extension(g, bad), std::invalid_argument);
}

TEST_CASE("norms") {
    UniformGrid g(64, 64);
    CellField z(g);
    FieldNorms nz = field_norms(z);
    CHECK(nz.l2 == 0.0);
    CHECK(nz.h1_semi == 0.0);
    CHECK(nz.linf == 0.0);

    CellField c(g, -2.0);
    c.dirichlet = BoundaryData::constant(g, 0.0);
    CHECK(field_norms(c).l2 == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(field_norms(c).linf == 2.0);

    CellField s(g);
    s.fill([](double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); });
    CHECK(field_norms(s).l2 == doctest::Approx(0.5).epsilon(2e-3));
}

TEST_CASE("discrete Poincare constant") {
    for (int n : {8, 16, 24}) {
        UniformGrid g(n, n);
        double lam = laplacian_min_eigenvalue(g);
        double ana = laplacian_min_eigenvalue_analytic(g);
        CHECK(lam == doctest::Approx(ana).epsilon(1e-8));
        double cp = poincare_constant(g);
        for (uint32_t seed = 0; seed < 20; ++seed) {
            CellField a = random_cell(g, 4000 + seed);
            FieldNorms na = field_norms(a);
            CHECK(na.l2 <= cp * na.h1_semi * (1.0 + 1e-10));
        }
    }
}

TEST_CASE("operators on a non-square rectangle with anisotropic spacing") {
    UniformGrid g(20, 12, 0.0, 0.0, 2.0, 1.0);
    CHECK(g.hx != g.hy);

    // gradients of linears are exact
    CellField a(g);
    auto f = [](double x, double y) { return 0.5 * x + 2.0 * y - 0.3; };
    a.fill(f);
    a.dirichlet = BoundaryData::from_function(g, f);
    FaceField ga = gradient(a);
    for (double v : ga.x) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
    for (double v : ga.y) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));

    // eigenvalue machinery handles hx != hy
    CHECK(laplacian_min_eigenvalue(g) ==
          doctest::Approx(laplacian_min_eigenvalue_analytic(g)).epsilon(1e-8));

    // operator algebra identities do not rely on square cells
    CellField b = random_cell(g, 314);
    FaceField w = random_face_zero_normal(g, 2718);
    CHECK(sbp_defect(b, w) <= 1e-12 * field_norms(b).l2 * field_norms(w).l2);
    FaceField F = curl_of_stream(g, [](double x, double y) {
        return std::sin(M_PI * x) * std::sin(M_PI * y) * (0.7 + 0.2 * x);
    });
    double nb = field_norms(b).l2;
    CHECK(advection_skew_defect(F, b) <= 1e-12 * field_norms(F).linf * nb * nb + 1e-15);
}

TEST_CASE("stream-function curl is exactly divergence free") {
    UniformGrid g(20, 12, 0.0, 0.0, 2.0, 1.0);
    FaceField w = curl_of_stream(g, [](double x, double y) {
        return std::sin(M_PI * x) * y * y * (1.0 - y) * (2.0 - x);
    });
    CHECK(field_norms(divergence(w)).linf <= 1e-12);
}

}  // TEST_SUITE
