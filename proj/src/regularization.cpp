#include "nanoflux/regularization.hpp"

#include <cmath>

namespace nanoflux {

namespace {

void check_eps(double eps) {
    if (!(eps > 0.0 && eps <= 0.25))
        throw std::invalid_argument("cutoff_smooth: epsilon must lie in (0, 1/4], got " +
                                    std::to_string(eps));
}

}  // namespace

double cutoff(double z) {
    double a = z > 0.0 ? z : 0.0;
    double b = 1.0 - z > 0.0 ? 1.0 - z : 0.0;
    return a * b;
}

double cutoff_smooth(double z, double eps) {
    check_eps(eps);
    // closed support [0,1]; the endpoint values are exact zeros, skipping the
    // cubic avoids cancellation residue there
    if (z <= 0.0 || z >= 1.0) return 0.0;
    if (z < eps) return -z * z * z / (eps * eps) + (2.0 / eps - 1.0) * z * z;
    if (z <= 1.0 - eps) return z * (1.0 - z);
    // upper transition band; mirror image of the lower one
    double e2 = eps * eps;
    return z * z * z / e2 + (-3.0 / e2 + 2.0 / eps - 1.0) * z * z +
           (3.0 / e2 - 4.0 / eps + 2.0) * z - 1.0 / e2 + 2.0 / eps - 1.0;
}

double cutoff_smooth_deriv(double z, double eps) {
    check_eps(eps);
    if (z <= 0.0 || z >= 1.0) return 0.0;  // C1 joints carry zero slope

    if (z < eps) return -3.0 * z * z / (eps * eps) + 2.0 * (2.0 / eps - 1.0) * z;
    if (z <= 1.0 - eps) return 1.0 - 2.0 * z;
    double e2 = eps * eps;
    return 3.0 * z * z / e2 + 2.0 * (-3.0 / e2 + 2.0 / eps - 1.0) * z +
           3.0 / e2 - 4.0 / eps + 2.0;
}

double cutoff_smooth_lipschitz(double eps) {
    check_eps(eps);
    double t = 2.0 - eps;
    return t * t / 3.0;  // attained at z = eps*(2-eps)/3 inside the band
}

SmoothCutoff::SmoothCutoff(double eps) : epsilon(eps) { check_eps(eps); }

namespace {

double bump_radial(double r) {  // exp(1/(r^2-1)) on [0,1)
    if (r >= 1.0) return 0.0;
    return std::exp(1.0 / (r * r - 1.0));
}

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

// adaptive Simpson on the radial integrand r*exp(1/(r^2-1))
double adaptive_mass() {
    auto f = [](double r) { return r * bump_radial(r); };
    double prev = simpson(f, 0.0, 1.0, 64);
    for (int panels = 128; panels <= 1 << 20; panels *= 2) {
        double cur = simpson(f, 0.0, 1.0, panels);
        if (std::abs(cur - prev) <= 1e-14 * std::abs(cur)) return cur;
        prev = cur;
    }
    return prev;
}

}  // namespace

double bump_mass_2d() { return 2.0 * M_PI * adaptive_mass(); }

double bump_mass_2d_gauss(int nodes) {
    // Gauss-Legendre on [0,1] via Newton iteration for the nodes
    std::vector<double> xg(static_cast<size_t>(nodes)), wg(static_cast<size_t>(nodes));
    for (int k = 0; k < nodes; ++k) {
        double x = std::cos(M_PI * (k + 0.75) / (nodes + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int m = 2; m <= nodes; ++m) {
                double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
                p0 = p1;
                p1 = p2;
            }
            double dp = nodes * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int m = 2; m <= nodes; ++m) {
            double p2 = ((2.0 * m - 1.0) * x * p1 - (m - 1.0) * p0) / m;
            p0 = p1;
            p1 = p2;
        }
        double dp = nodes * (x * p1 - p0) / (x * x - 1.0);
        xg[static_cast<size_t>(k)] = 0.5 * (x + 1.0);
        wg[static_cast<size_t>(k)] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    double s = 0.0;
    for (int k = 0; k < nodes; ++k)
        s += wg[static_cast<size_t>(k)] * xg[static_cast<size_t>(k)] * bump_radial(xg[static_cast<size_t>(k)]);
    return 2.0 * M_PI * s;
}

MollifierKernel build_kernel(double eps, const UniformGrid& g) {
    const double hmax = g.max_spacing();
    if (!(eps >= 2.0 * hmax))
        throw std::invalid_argument("build_kernel: radius " + std::to_string(eps) +
                                    " below the minimum 2*max(hx,hy) = " +
                                    std::to_string(2.0 * hmax));

    MollifierKernel k;
    k.epsilon = eps;
    k.hx = g.hx;
    k.hy = g.hy;
    k.normalization = 1.0 / bump_mass_2d();
    k.radius_i = static_cast<int>(std::ceil(eps / g.hx));
    k.radius_j = static_cast<int>(std::ceil(eps / g.hy));
    const int wi = 2 * k.radius_i + 1, wj = 2 * k.radius_j + 1;
    k.w.assign(static_cast<size_t>(wi * wj), 0.0);

    double sum = 0.0;
    for (int dj = -k.radius_j; dj <= k.radius_j; ++dj)
        for (int di = -k.radius_i; di <= k.radius_i; ++di) {
            double r = std::hypot(di * g.hx, dj * g.hy) / eps;
            double val = k.normalization * bump_radial(r) / (eps * eps);
            k.w[static_cast<size_t>((dj + k.radius_j) * wi + (di + k.radius_i))] = val;
            sum += val;
        }
    // renormalize so the discrete unit-mass property holds exactly
    const double scale = 1.0 / (sum * g.cell_area());
    for (double& v : k.w) v *= scale;
    return k;
}

double MollifierKernel::weight_sum_times_area() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s * hx * hy;
}

double mollify_at_cell(const CellField& a, const MollifierKernel& k, int i, int j) {
    const UniformGrid& g = *a.grid;
    double s = 0.0;
    for (int dj = -k.radius_j; dj <= k.radius_j; ++dj) {
        int jj = j - dj;
        if (jj < 0 || jj >= g.ny) continue;
        for (int di = -k.radius_i; di <= k.radius_i; ++di) {
            int ii = i - di;
            if (ii < 0 || ii >= g.nx) continue;
            s += k.weight(di, dj) * a(ii, jj);
        }
    }
    return s * g.cell_area();
}

CellField mollify(const CellField& a, const MollifierKernel& k) {
    if (!a.finite()) throw std::invalid_argument("mollify: non-finite input field");
    const UniformGrid& g = *a.grid;
    CellField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) = mollify_at_cell(a, k, i, j);
    return out;
}

FaceField mollify(const FaceField& w, const MollifierKernel& k) {
    if (!w.finite()) throw std::invalid_argument("mollify: non-finite input field");
    const UniformGrid& g = *w.grid;
    FaceField out(g);
    const double area = g.cell_area();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            double s = 0.0;
            for (int dj = -k.radius_j; dj <= k.radius_j; ++dj) {
                int jj = j - dj;
                if (jj < 0 || jj >= g.ny) continue;
                for (int di = -k.radius_i; di <= k.radius_i; ++di) {
                    int ii = i - di;
                    if (ii < 0 || ii > g.nx) continue;
                    s += k.weight(di, dj) * w.fx(ii, jj);
                }
            }
            out.fx(i, j) = s * area;
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double s = 0.0;
            for (int dj = -k.radius_j; dj <= k.radius_j; ++dj) {
                int jj = j - dj;
                if (jj < 0 || jj > g.ny) continue;
                for (int di = -k.radius_i; di <= k.radius_i; ++di) {
                    int ii = i - di;
                    if (ii < 0 || ii >= g.nx) continue;
                    s += k.weight(di, dj) * w.fy(ii, jj);
                }
            }
            out.fy(i, j) = s * area;
        }
    return out;
}

double adjoint_defect(const CellField& f, const CellField& g, const MollifierKernel& k) {
    return std::abs(l2_inner(f, mollify(g, k)) - l2_inner(mollify(f, k), g));
}

}  // namespace nanoflux
