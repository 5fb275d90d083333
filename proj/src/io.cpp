#include "nanoflux/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace nanoflux {

using json = nlohmann::ordered_json;

namespace {

std::string full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot open for writing: " + p.string());
    return os;
}

std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw std::runtime_error("cannot open for reading: " + p.string());
    return is;
}

}  // namespace

void write_cell_field(const std::filesystem::path& path, const CellField& a,
                      const std::string& name) {
    const UniformGrid& g = *a.grid;
    auto os = open_out(path);
    os << "# cellfield " << name << " nx=" << g.nx << " ny=" << g.ny << " ox=" << full(g.ox)
       << " oy=" << full(g.oy) << " lx=" << full(g.lx) << " ly=" << full(g.ly) << "\n";
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            os << i << " " << j << " " << full(a(i, j)) << "\n";
}

CellField read_cell_field(const std::filesystem::path& path, const UniformGrid& g) {
    auto is = open_in(path);
    std::string header;
    std::getline(is, header);
    CellField out(g);
    int i, j;
    double v;
    int count = 0;
    while (is >> i >> j >> v) {
        out(i, j) = v;
        ++count;
    }
    if (count != g.cell_count())
        throw std::runtime_error("read_cell_field: expected " + std::to_string(g.cell_count()) +
                                 " values, got " + std::to_string(count));
    return out;
}

void write_face_field(const std::filesystem::path& path_stem, const FaceField& w,
                      const std::string& name) {
    const UniformGrid& g = *w.grid;
    {
        auto os = open_out(path_stem.string() + "_x.txt");
        os << "# facefield_x " << name << " nx=" << g.nx << " ny=" << g.ny << "\n";
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i)
                os << i << " " << j << " " << full(w.fx(i, j)) << "\n";
    }
    {
        auto os = open_out(path_stem.string() + "_y.txt");
        os << "# facefield_y " << name << " nx=" << g.nx << " ny=" << g.ny << "\n";
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                os << i << " " << j << " " << full(w.fy(i, j)) << "\n";
    }
}

FaceField read_face_field(const std::filesystem::path& path_stem, const UniformGrid& g) {
    FaceField out(g);
    {
        auto is = open_in(path_stem.string() + "_x.txt");
        std::string header;
        std::getline(is, header);
        int i, j, count = 0;
        double v;
        while (is >> i >> j >> v) {
            out.fx(i, j) = v;
            ++count;
        }
        if (count != g.xface_count())
            throw std::runtime_error("read_face_field: x-component count mismatch");
    }
    {
        auto is = open_in(path_stem.string() + "_y.txt");
        std::string header;
        std::getline(is, header);
        int i, j, count = 0;
        double v;
        while (is >> i >> j >> v) {
            out.fy(i, j) = v;
            ++count;
        }
        if (count != g.yface_count())
            throw std::runtime_error("read_face_field: y-component count mismatch");
    }
    return out;
}

void write_cell_centered_velocity(const std::filesystem::path& path, const FaceField& u) {
    const UniformGrid& g = *u.grid;
    auto os = open_out(path);
    os << "# velocity_cell_centers nx=" << g.nx << " ny=" << g.ny << " columns=x y ux uy\n";
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double cx = 0.5 * (u.fx(i, j) + u.fx(i + 1, j));
            double cy = 0.5 * (u.fy(i, j) + u.fy(i, j + 1));
            os << full(g.cell_x(i)) << " " << full(g.cell_y(j)) << " " << full(cx) << " "
               << full(cy) << "\n";
        }
}

void write_vtk(const std::filesystem::path& path, const SolverState& s) {
    const UniformGrid& g = *s.phi.grid;
    auto os = open_out(path);
    os << "# vtk DataFile Version 3.0\nnanoflux fields\nASCII\nDATASET STRUCTURED_POINTS\n";
    os << "DIMENSIONS " << g.nx << " " << g.ny << " 1\n";
    os << "ORIGIN " << g.cell_x(0) << " " << g.cell_y(0) << " 0\n";
    os << "SPACING " << g.hx << " " << g.hy << " 1\n";
    os << "POINT_DATA " << g.cell_count() << "\n";
    auto scalars = [&](const char* name, const CellField& f) {
        os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) os << f(i, j) << "\n";
    };
    scalars("fraction", s.phi);
    scalars("temperature", s.T);
    scalars("pressure", s.p);
    os << "VECTORS velocity double\n";
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            os << 0.5 * (s.u.fx(i, j) + s.u.fx(i + 1, j)) << " "
               << 0.5 * (s.u.fy(i, j) + s.u.fy(i, j + 1)) << " 0\n";
}

namespace {

json norms_json(const FieldNorms& n) {
    return json{{"l2", n.l2}, {"h1_semi", n.h1_semi}, {"linf", n.linf}};
}

}  // namespace

void append_diagnostics(std::ostream& os, const IterationRecord& rec) {
    json j{{"record", "picard_iteration"},
           {"iteration", rec.index},
           {"epsilon", rec.epsilon},
           {"rel_change", rec.rel_change},
           {"phi_min", rec.phi_min},
           {"phi_max", rec.phi_max},
           {"flux_cert_defect", rec.flux_cert_defect},
           {"div_u_inf", rec.div_u_inf},
           {"phi", norms_json(rec.phi_norms)},
           {"T", norms_json(rec.T_norms)},
           {"u", norms_json(rec.u_norms)},
           {"p", norms_json(rec.p_norms)},
           {"lin_residual_phi", rec.lin_residual_phi},
           {"lin_residual_T", rec.lin_residual_T},
           {"lin_residual_u", rec.lin_residual_u}};
    os << j.dump() << "\n";
}

void write_diagnostics(const std::filesystem::path& path,
                       const std::vector<IterationRecord>& recs) {
    auto os = open_out(path);
    for (const auto& r : recs) append_diagnostics(os, r);
}

void write_summary(const std::filesystem::path& path, const RunSummary& s) {
    json inv = json::array();
    for (const auto& it : s.invariants.items)
        inv.push_back(json{{"name", it.name},
                           {"measured", it.measured},
                           {"threshold", it.threshold},
                           {"pass", it.pass},
                           {"note", it.note}});
    json j{{"record", "run_summary"},
           {"mode", s.mode},
           {"ok", s.ok},
           {"exit_code", s.exit_code},
           {"message", s.message},
           {"final_epsilon", s.final_epsilon},
           {"total_iterations", s.total_iterations},
           {"weak_residual",
            json{{"r_phi", s.residual.r_phi}, {"r_T", s.residual.r_T}, {"r_u", s.residual.r_u}}},
           {"invariants", inv}};
    auto os = open_out(path);
    os << j.dump(2) << "\n";
}

}  // namespace nanoflux
