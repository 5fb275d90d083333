#include "nanoflux/config.hpp"

#include "nanoflux/io.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace nanoflux {

using json = nlohmann::json;

RunMode parse_mode(const std::string& s) {
    if (s == "solve") return RunMode::Solve;
    if (s == "mms") return RunMode::Mms;
    if (s == "sweep-eps") return RunMode::SweepEps;
    if (s == "check") return RunMode::Check;
    throw ConfigError("unknown mode '" + s + "' (expected solve|mms|sweep-eps|check)");
}

namespace {

int edit_distance(const std::string& a, const std::string& b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (size_t j = 1; j <= b.size(); ++j) {
            int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

// strict object view: every key must be consumed, unknown keys get a
// nearest-neighbor suggestion
struct Strict {
    const json& obj;
    std::string where;
    std::vector<std::string> known;

    Strict(const json& o, std::string w) : obj(o), where(std::move(w)) {
        if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    }
    const json* get(const std::string& key) {
        known.push_back(key);
        auto it = obj.find(key);
        return it == obj.end() ? nullptr : &*it;
    }
    ~Strict() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (std::find(known.begin(), known.end(), it.key()) != known.end()) continue;
            std::string best;
            int bestd = 100;
            for (const auto& k : known) {
                int d = edit_distance(it.key(), k);
                if (d < bestd) { bestd = d; best = k; }
            }
            std::string msg = where + ": unknown key '" + it.key() + "'";
            if (bestd <= 3) msg += " (did you mean '" + best + "'?)";
            throw ConfigError(msg);
        }
    }
};

double num(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError(where + ": expected a number");
    return j.get<double>();
}

BoundaryData load_boundary(const json& j, const UniformGrid& g,
                           const std::filesystem::path& base) {
    Strict s(j, "params.b");
    const json* preset = s.get("preset");
    const json* value = s.get("value");
    const json* file = s.get("file");
    if (file) {
        std::filesystem::path p = base / file->get<std::string>();
        if (!std::filesystem::exists(p)) throw ConfigError("params.b.file does not exist: " + p.string());
        BoundaryData b = BoundaryData::constant(g, 0.0);
        std::ifstream is(p);
        std::string side;
        int idx;
        double v;
        while (is >> side >> idx >> v) {
            if (side == "south") b.south.at(static_cast<size_t>(idx)) = v;
            else if (side == "north") b.north.at(static_cast<size_t>(idx)) = v;
            else if (side == "west") b.west.at(static_cast<size_t>(idx)) = v;
            else if (side == "east") b.east.at(static_cast<size_t>(idx)) = v;
            else throw ConfigError("params.b file: unknown side '" + side + "'");
        }
        return b;
    }
    std::string kind = preset ? preset->get<std::string>() : "constant";
    if (kind == "constant")
        return BoundaryData::constant(g, value ? num(*value, "params.b.value") : 0.5);
    if (kind == "linear_x")
        return BoundaryData::from_function(g, [&](double x, double) { return (x - g.ox) / g.lx; });
    throw ConfigError("params.b.preset: unknown preset '" + kind + "'");
}

CellField load_cell_source(const json* j, const UniformGrid& g,
                           const std::filesystem::path& base, const std::string& where) {
    if (!j) return CellField(g);
    Strict s(*j, where);
    const json* preset = s.get("preset");
    const json* value = s.get("value");
    const json* file = s.get("file");
    if (file) {
        std::filesystem::path p = base / file->get<std::string>();
        if (!std::filesystem::exists(p)) throw ConfigError(where + ".file does not exist: " + p.string());
        return read_cell_field(p, g);
    }
    std::string kind = preset ? preset->get<std::string>() : "zero";
    if (kind == "zero") return CellField(g);
    if (kind == "constant") return CellField(g, value ? num(*value, where + ".value") : 0.0);
    throw ConfigError(where + ".preset: unknown preset '" + kind + "'");
}

FaceField load_face_source(const json* j, const UniformGrid& g,
                           const std::filesystem::path& base, const std::string& where) {
    if (!j) return FaceField(g);
    Strict s(*j, where);
    const json* preset = s.get("preset");
    const json* gx = s.get("gx");
    const json* gy = s.get("gy");
    const json* stem = s.get("file_stem");
    if (stem) {
        std::filesystem::path p = base / stem->get<std::string>();
        if (!std::filesystem::exists(p.string() + "_x.txt"))
            throw ConfigError(where + ".file_stem: missing " + p.string() + "_x.txt");
        return read_face_field(p, g);
    }
    std::string kind = preset ? preset->get<std::string>() : "zero";
    if (kind == "zero") return FaceField(g);
    if (kind == "constant") {
        FaceField f(g);
        double vx = gx ? num(*gx, where + ".gx") : 0.0;
        double vy = gy ? num(*gy, where + ".gy") : 0.0;
        for (double& v : f.x) v = vx;
        for (double& v : f.y) v = vy;
        return f;
    }
    throw ConfigError(where + ".preset: unknown preset '" + kind + "'");
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    RunConfig cfg;
    Strict top(root, "config");

    {
        const json* jg = top.get("grid");
        if (!jg) throw ConfigError("config: missing 'grid'");
        Strict s(*jg, "grid");
        const json* nx = s.get("nx");
        const json* ny = s.get("ny");
        const json* origin = s.get("origin");
        const json* extent = s.get("extent");
        if (!nx || !ny) throw ConfigError("grid: nx and ny are required");
        double ox = 0, oy = 0, lx = 1, ly = 1;
        if (origin) { ox = num((*origin).at(0), "grid.origin"); oy = num((*origin).at(1), "grid.origin"); }
        if (extent) { lx = num((*extent).at(0), "grid.extent"); ly = num((*extent).at(1), "grid.extent"); }
        cfg.grid = UniformGrid(nx->get<int>(), ny->get<int>(), ox, oy, lx, ly);
    }

    {
        const json* jp = top.get("params");
        if (!jp) throw ConfigError("config: missing 'params'");
        Strict s(*jp, "params");
        auto pair = [&](const char* key, double& c0, double& c1) {
            const json* v = s.get(key);
            if (!v) return;
            Strict ps(*v, std::string("params.") + key);
            const json* j0 = ps.get("c0");
            const json* j1 = ps.get("c1");
            if (j0) c0 = num(*j0, std::string("params.") + key + ".c0");
            if (j1) c1 = num(*j1, std::string("params.") + key + ".c1");
        };
        pair("conductivity", cfg.params.k0, cfg.params.k1);
        pair("viscosity", cfg.params.mu0, cfg.params.mu1);
        auto getd = [&](const char* k, double dflt) {
            const json* v = s.get(k);
            return v ? num(*v, std::string("params.") + k) : dflt;
        };
        cfg.params.beta = getd("beta", 0.0);
        cfg.params.T_inf = getd("T_inf", 1.0);
        const json* eg = s.get("e_g");
        if (eg) {
            cfg.params.eg_x = num((*eg).at(0), "params.e_g");
            cfg.params.eg_y = num((*eg).at(1), "params.e_g");
        }
        const json* jb = s.get("b");
        cfg.params.b = jb ? load_boundary(*jb, cfg.grid, base_dir)
                          : BoundaryData::constant(cfg.grid, 0.5);
        cfg.params.f = load_cell_source(s.get("f"), cfg.grid, base_dir, "params.f");
        cfg.params.g = load_face_source(s.get("g"), cfg.grid, base_dir, "params.g");
    }

    {
        const json* je = top.get("eps");
        double eps0 = 0.25, factor = 0.5;
        int n_steps = 0;
        if (je) {
            Strict s(*je, "eps");
            const json* v0 = s.get("eps0");
            const json* vf = s.get("factor");
            const json* vn = s.get("n_steps");
            if (v0) eps0 = num(*v0, "eps.eps0");
            if (vf) factor = num(*vf, "eps.factor");
            if (vn) n_steps = vn->get<int>();
        }
        cfg.schedule = ContinuationSchedule::make(eps0, factor, n_steps, cfg.grid);
    }

    {
        const json* jp = top.get("picard");
        if (jp) {
            Strict s(*jp, "picard");
            const json* v;
            if ((v = s.get("omega"))) cfg.picard.omega = num(*v, "picard.omega");
            if ((v = s.get("tol"))) cfg.picard.tol = num(*v, "picard.tol");
            if ((v = s.get("max_iters"))) cfg.picard.max_iters = v->get<int>();
            if ((v = s.get("bound_tol"))) cfg.picard.bound_tol = num(*v, "picard.bound_tol");
            if ((v = s.get("halve_omega_on_divergence")))
                cfg.picard.halve_omega_on_divergence = v->get<bool>();
        }
        cfg.picard.validate();
    }

    {
        const json* js = top.get("solver");
        if (js) {
            Strict s(*js, "solver");
            const json* v;
            if ((v = s.get("rel_tol"))) cfg.sub.linear.rel_tol = num(*v, "solver.rel_tol");
            if ((v = s.get("max_iterations"))) cfg.sub.linear.max_iterations = v->get<int>();
            if ((v = s.get("direct_size_limit"))) cfg.sub.linear.direct_size_limit = v->get<int>();
        }
    }

    {
        const json* jm = top.get("mms");
        if (jm) {
            Strict s(*jm, "mms");
            const json* v;
            if ((v = s.get("case"))) cfg.mms_case = v->get<std::string>();
            if ((v = s.get("grids"))) cfg.mms_grids = v->get<std::vector<int>>();
            if ((v = s.get("kind"))) {
                std::string k = v->get<std::string>();
                if (k == "coupled") cfg.mms_kind = StudyKind::Coupled;
                else if (k == "poisson") cfg.mms_kind = StudyKind::Poisson;
                else if (k == "fraction") cfg.mms_kind = StudyKind::Fraction;
                else if (k == "temperature") cfg.mms_kind = StudyKind::Temperature;
                else if (k == "stokes") cfg.mms_kind = StudyKind::Stokes;
                else throw ConfigError("mms.kind: unknown kind '" + k + "'");
            }
            if ((v = s.get("eps_policy"))) {
                std::string p = v->get<std::string>();
                if (p == "fixed") cfg.study.policy = EpsPolicy::Fixed;
                else if (p == "proportional") cfg.study.policy = EpsPolicy::ProportionalToH;
                else throw ConfigError("mms.eps_policy: unknown policy '" + p + "'");
            }
            if ((v = s.get("eps_fixed"))) cfg.study.eps_fixed = num(*v, "mms.eps_fixed");
            if ((v = s.get("eps_per_h"))) cfg.study.eps_per_h = num(*v, "mms.eps_per_h");
            if ((v = s.get("picard_tol"))) cfg.study.picard_tol = num(*v, "mms.picard_tol");
            if ((v = s.get("picard_max_iters"))) cfg.study.picard_max_iters = v->get<int>();
        }
    }

    {
        const json* jo = top.get("output");
        if (jo) {
            Strict s(*jo, "output");
            const json* v;
            if ((v = s.get("dir"))) cfg.out_dir = base_dir / v->get<std::string>();
            if ((v = s.get("vtk"))) cfg.write_vtk = v->get<bool>();
        }
    }

    {
        const json* v = top.get("upwind");
        if (v) cfg.upwind = v->get<bool>();
        v = top.get("threads");
        if (v) cfg.threads = v->get<int>();
    }

    cfg.sub.scheme = cfg.upwind ? AdvectScheme::Upwind : AdvectScheme::Centered;
    cfg.sub.bound_tol = cfg.picard.bound_tol;
    try {
        cfg.params.validate(cfg.grid);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (const char* lvl = std::getenv("NANOFLUX_LOG")) cfg.log_level = std::atoi(lvl);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_config_text(text, path.parent_path());
}

namespace {

void write_fields(const RunConfig& cfg, const SolverState& s) {
    namespace fs = std::filesystem;
    write_cell_field(cfg.out_dir / "fraction.txt", s.phi, "fraction");
    write_cell_field(cfg.out_dir / "temperature.txt", s.T, "temperature");
    write_cell_field(cfg.out_dir / "pressure.txt", s.p, "pressure");
    write_face_field(cfg.out_dir / "velocity", s.u, "velocity");
    write_cell_centered_velocity(cfg.out_dir / "velocity_centers.txt", s.u);
    if (cfg.write_vtk) write_vtk(cfg.out_dir / "fields.vtk", s);
}

int run_solve_like(const RunConfig& cfg, bool gate_invariants, RunSummary& summary) {
    const UniformGrid& g = cfg.grid;
    SolverState init = SolverState::initial(g, cfg.params, cfg.schedule.eps0);
    ContinuationResult cont =
        continuation_solve(init, cfg.params, cfg.schedule, cfg.picard, cfg.sub);

    std::vector<IterationRecord> recs;
    bool all_converged = true;
    nlohmann::ordered_json levels = nlohmann::ordered_json::array();
    for (const auto& lvl : cont.levels) {
        for (const auto& r : lvl.picard.history) {
            if (cfg.log_level >= 2) append_diagnostics(std::cerr, r);
            recs.push_back(r);
        }
        all_converged = all_converged && lvl.picard.converged;
        levels.push_back({{"epsilon", lvl.epsilon},
                          {"converged", lvl.picard.converged},
                          {"iterations", lvl.picard.iterations},
                          {"rel_change", lvl.picard.final_rel_change},
                          {"weak_residual",
                           {{"r_phi", lvl.residual.r_phi},
                            {"r_T", lvl.residual.r_T},
                            {"r_u", lvl.residual.r_u},
                            {"total", lvl.residual.total()}}}});
        summary.total_iterations += lvl.picard.iterations;
    }
    write_diagnostics(cfg.out_dir / "diagnostics.jsonl", recs);
    {
        std::ofstream os(cfg.out_dir / "levels.json");
        os << levels.dump(2) << "\n";
    }

    if (cont.levels.empty()) {
        summary.message = "no continuation levels run";
        return kExitSolver;
    }
    const SolverState& fin = cont.levels.back().picard.state;
    write_fields(cfg, fin);
    summary.final_epsilon = cont.levels.back().epsilon;
    summary.residual = cont.levels.back().residual;

    InvariantOptions iopt;
    iopt.sub = cfg.sub;
    iopt.bound_tol = cfg.picard.bound_tol;
    summary.invariants = invariant_suite(fin, cfg.params, fin.epsilon, iopt);

    if (!cont.completed || !all_converged) {
        summary.message = "continuation did not converge on every level";
        return kExitSolver;
    }
    if (gate_invariants && !summary.invariants.all_pass()) {
        summary.message = "invariant suite failed";
        return kExitInvariant;
    }
    summary.ok = true;
    summary.message = "ok";
    return kExitOk;
}

int run_mms(const RunConfig& cfg, RunSummary& summary) {
    ManufacturedCase mc = cfg.mms_case == "constant" ? constant_case() : trig_case();
    std::vector<int> grids = cfg.mms_grids.empty() ? std::vector<int>{16, 32, 64} : cfg.mms_grids;
    StudyOptions sopt = cfg.study;
    sopt.scheme = cfg.sub.scheme;
    ModelParams coeffs = cfg.params;
    StudyResult res = convergence_study(mc, cfg.mms_kind, grids, coeffs, sopt);

    nlohmann::ordered_json out;
    out["record"] = "convergence_study";
    out["case"] = mc.name;
    out["completed"] = res.completed;
    out["orders"] = {{"phi", res.order_phi}, {"T", res.order_T},
                     {"u", res.order_u}, {"p", res.order_p}};
    out["levels"] = nlohmann::ordered_json::array();
    for (const auto& l : res.levels)
        out["levels"].push_back({{"n", l.n}, {"h", l.h}, {"err_phi", l.err_phi},
                                 {"err_T", l.err_T}, {"err_u", l.err_u}, {"err_p", l.err_p},
                                 {"picard_iters", l.picard_iters}});
    std::ofstream os(cfg.out_dir / "study.json");
    os << out.dump(2) << "\n";

    if (!res.completed) {
        summary.message = "study aborted: a level failed to converge";
        return kExitSolver;
    }
    summary.ok = true;
    summary.message = "ok";
    return kExitOk;
}

}  // namespace

int run(RunConfig cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);

    RunSummary summary;
    summary.mode = cfg.mode == RunMode::Solve ? "solve"
                  : cfg.mode == RunMode::Mms ? "mms"
                  : cfg.mode == RunMode::SweepEps ? "sweep-eps" : "check";

    int code = kExitOk;
    try {
        switch (cfg.mode) {
            case RunMode::Solve: code = run_solve_like(cfg, false, summary); break;
            case RunMode::Check: code = run_solve_like(cfg, true, summary); break;
            case RunMode::SweepEps: code = run_solve_like(cfg, false, summary); break;
            case RunMode::Mms: code = run_mms(cfg, summary); break;
        }
    } catch (const ConfigError& e) {
        summary.message = e.what();
        code = kExitConfig;
    } catch (const std::invalid_argument& e) {
        summary.message = e.what();
        code = kExitConfig;
    } catch (const std::exception& e) {
        summary.message = e.what();
        code = kExitSolver;
    }
    summary.exit_code = code;
    summary.ok = code == kExitOk;

    // the summary is written on every path, including failures
    try {
        write_summary(cfg.out_dir / "summary.json", summary);
    } catch (const std::exception& e) {
        std::cerr << "nanoflux: cannot write summary: " << e.what() << "\n";
    }
    if (cfg.log_level >= 1) {
        std::cerr << "nanoflux " << summary.mode << ": " << summary.message
                  << " (exit " << code << ")\n";
    }
    return code;
}

}  // namespace nanoflux
