// =============================================================================
// mnls: command-line front end for the forward map, jump evolution, inverse map,
// split-step reference solver and the verification pipelines.
// =============================================================================

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mnls/defocusing.hpp"
#include "mnls/errors.hpp"
#include "mnls/evolution.hpp"
#include "mnls/focusing.hpp"
#include "mnls/io.hpp"
#include "mnls/pde.hpp"
#include "mnls/scattering.hpp"
#include "mnls/verification.hpp"

namespace fs = std::filesystem;
using namespace mnls;

namespace {

struct Common {
    std::string config;
    std::string potential;
    std::string out = ".";
    std::optional<int> sigma;
    bool no_csv = false;
    bool svg = false;
};

struct Context {
    RunConfig config;
    std::optional<PotentialSpec> spec;
};

Context load(const Common& c) {
    Context ctx;
    const bool has_config = !c.config.empty();
    if (has_config) ctx.config = load_run_config(c.config);
    if (!c.potential.empty()) {
        PotentialSpec s = parse_potential_spec(c.potential);
        if (has_config && (s.p != ctx.config.p || s.q != ctx.config.q))
            throw InputError("potential is " + std::to_string(s.p) + "x" + std::to_string(s.q) + " but config is " +
                             std::to_string(ctx.config.p) + "x" + std::to_string(ctx.config.q));
        if (!has_config) {
            ctx.config.p = s.p;
            ctx.config.q = s.q;
            ctx.config.sigma = s.sigma;
        }
        s.sigma = ctx.config.sigma;
        ctx.spec = s;
    }
    if (c.sigma) {
        if (*c.sigma != 1 && *c.sigma != -1) throw InputError("--sigma must be +1 or -1");
        ctx.config.sigma = *c.sigma;
        if (ctx.spec) ctx.spec->sigma = *c.sigma;
    }
    ctx.config.validate();
    return ctx;
}

const PotentialSpec& require_spec(const Context& ctx) {
    if (!ctx.spec) throw InputError("--potential is required");
    return *ctx.spec;
}

std::string out_path(const Common& c, const std::string& name) {
    fs::create_directories(c.out);
    return (fs::path(c.out) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot write " + path);
    os << text;
}

void emit_field(const Common& c, const std::string& stem, const PotentialField& f) {
    write_file(out_path(c, stem + ".mnls"), serialize(f));
    if (c.no_csv) return;
    std::ofstream os(out_path(c, stem + ".csv"));
    write_field_csv(os, f);
}

void emit_scattering(const Common& c, const std::string& stem, const ScatteringData& sd) {
    write_file(out_path(c, stem + ".mnls"), serialize(sd));
    if (c.no_csv) return;
    std::ofstream os(out_path(c, stem + ".csv"));
    write_scattering_csv(os, sd);
}

std::vector<double> abs_profile(const PotentialField& f) {
    std::vector<double> out(f.grid.count);
    for (std::size_t j = 0; j < f.grid.count; ++j) out[j] = RowMat(f.samples[j]).norm();
    return out;
}

void emit_overlay(const Common& c, const std::string& name, const std::string& title, const ComparisonReport& r) {
    if (!c.svg) return;
    std::vector<double> x(r.reference.grid.count);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = r.reference.grid.node(j);
    write_text(out_path(c, name),
               svg_line_chart(title, x, {{"reference", abs_profile(r.reference)}, {"computed", abs_profile(r.computed)}}));
}

int finish(const ComparisonReport& r, const Common& c, const std::string& stem) {
    const std::string text = r.report().str();
    std::cout << text;
    write_text(out_path(c, stem + "_report.txt"), text);
    return r.pass() ? 0 : 1;
}

// =============================================================================
// Subcommands
// =============================================================================

int run_forward(const Common& c) {
    const Context ctx = load(c);
    const PotentialField Q = materialize(require_spec(ctx), ctx.config.x_grid);
    const auto sd = forward_scattering(Q, ctx.config.k_grid, ctx.config.solver_tol);
    emit_scattering(c, "scattering", sd);
    const auto sym = symmetry_report(sd);
    Report r;
    r.set("potential", ctx.spec->describe());
    r.set("det_residual", sym.det_residual);
    r.set("symmetry_residual", sym.symmetry_residual);
    r.set("consistency_gap", sd.consistency_gap);
    r.set("min_abs_det_d", sym.min_abs_det_D);
    r.set("symmetry_tol", ctx.config.symmetry_tol);
    const bool pass = sym.det_residual < ctx.config.symmetry_tol && sym.symmetry_residual < ctx.config.symmetry_tol;
    r.set_bool("pass", pass);
    std::cout << r.str();
    return pass ? 0 : 1;
}

int run_evolve(const Common& c, const std::string& input, double t) {
    const std::string bytes = read_file(input);
    Report r;
    r.set("input", input);
    r.set("t", t);
    switch (peek_role(bytes)) {
    case Role::Scattering: emit_scattering(c, "scattering_evolved", evolve_scattering(deserialize_scattering(bytes), t)); break;
    case Role::Jump: write_file(out_path(c, "jump_evolved.mnls"), serialize(evolve_jump(deserialize_jump(bytes), t))); break;
    case Role::FocusingJump:
        write_file(out_path(c, "focusing_jump_evolved.mnls"), serialize(deserialize_focusing_jump(bytes).evolved(t)));
        break;
    default: throw InputError("evolve: input must hold scattering data or a jump");
    }
    std::cout << r.str();
    return 0;
}

int run_inverse(const Common& c, const std::string& input, const std::string& left_input, double rh_tol) {
    const Context ctx = load(c);
    Report r;
    PotentialField rec;
    if (!input.empty()) {
        const std::string bytes = read_file(input);
        const Role role = peek_role(bytes);
        r.set("input", input);
        if (role == Role::Jump || role == Role::Scattering) {
            BealsCoifmanOptions o;
            o.backend = ctx.config.backend;
            o.tol = rh_tol;
            if (role == Role::Scattering) {
                const ScatteringData sd = deserialize_scattering(bytes);
                if (sd.sigma != 1) throw InputError("inverse: focusing scattering data need the contour jump; pass the potential");
                rec = reconstruct_potential(build_jump(sd), ctx.config.x_grid, o);
            } else {
                rec = reconstruct_potential(deserialize_jump(bytes), ctx.config.x_grid, o);
            }
        } else if (role == Role::FocusingJump) {
            const FocusingJump right = deserialize_focusing_jump(bytes);
            FocusingOptions o;
            o.tol = rh_tol;
            if (!left_input.empty()) {
                const FocusingJump left = deserialize_focusing_jump(read_file(left_input));
                rec = focusing_reconstruct(right, &left, ctx.config.x_grid, o);
            } else {
                const Grid1D& g = ctx.config.x_grid;
                std::size_t first = 0;
                while (first < g.count && g.node(first) < 0.0) ++first;
                if (first == g.count) throw InputError("inverse: x-grid has no node x >= 0");
                r.set("note", std::string("no left jump given; reconstructing x >= 0 only"));
                rec = focusing_reconstruct(right, nullptr, Grid1D(g.node(first), g.step, g.count - first), o);
            }
        } else {
            throw InputError("inverse: input must hold scattering data or a jump");
        }
    } else {
        const PotentialField Q = materialize(require_spec(ctx), ctx.config.x_grid);
        r.set("potential", ctx.spec->describe());
        if (Q.sigma == 1) {
            const auto jump = build_jump(forward_scattering(Q, ctx.config.k_grid, ctx.config.solver_tol));
            write_file(out_path(c, "jump.mnls"), serialize(jump));
            BealsCoifmanOptions o;
            o.backend = ctx.config.backend;
            o.tol = rh_tol;
            rec = reconstruct_potential(jump, ctx.config.x_grid, o);
        } else {
            FocusingSetupOptions so;
            so.solver_tol = ctx.config.solver_tol;
            so.cutoff_threshold = ctx.config.cutoff_threshold;
            so.s_infinity.margin = ctx.config.s_infinity_margin;
            const auto right = prepare_focusing(Q, ctx.config.k_grid, so);
            const auto left = prepare_focusing(Q.reflected(), ctx.config.k_grid, so);
            write_file(out_path(c, "focusing_jump_right.mnls"), serialize(right.jump, so.eta));
            write_file(out_path(c, "focusing_jump_left.mnls"), serialize(left.jump, so.eta));
            write_file(out_path(c, "contour.mnls"), serialize(right.jump.contour));
            r.set("x0", right.jump.x0);
            r.set("s_infinity", right.jump.s_infinity);
            FocusingOptions o;
            o.tol = rh_tol;
            rec = focusing_reconstruct(right.jump, &left.jump, ctx.config.x_grid, o);
        }
    }
    emit_field(c, "field", rec);
    r.set("l2_norm", l2_norm(rec));
    std::cout << r.str();
    return 0;
}

int run_roundtrip(const Common& c, double tol, const PipelineOptions& po) {
    const Context ctx = load(c);
    const auto rep = roundtrip(require_spec(ctx), ctx.config, tol, po);
    emit_field(c, "roundtrip_field", rep.computed);
    emit_overlay(c, "roundtrip.svg", "|Q(x)| round trip", rep);
    return finish(rep, c, "roundtrip");
}

int run_pde(const Common& c, double T, double dt, std::vector<double> times) {
    const Context ctx = load(c);
    const PotentialField Q = materialize(require_spec(ctx), ctx.config.x_grid);
    if (times.empty()) times = {0.0, T};
    ConservationLog log;
    const auto snaps = propagate_snapshots(Q, times, dt, &log);
    Report r;
    r.set("potential", ctx.spec->describe());
    r.set("dt", dt);
    r.set("steps", static_cast<long>(log.steps));
    r.set("l2_initial", log.l2_initial);
    r.set("l2_final", log.l2_final);
    r.set("max_l2_drift", log.max_drift);
    r.set_bool("stability_warning", log.stability_warning);
    std::vector<std::pair<std::string, std::vector<double>>> series;
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        emit_field(c, "snapshot_" + std::to_string(i), snaps[i]);
        r.set("snapshot_" + std::to_string(i) + "_t", times[i]);
        series.emplace_back("t=" + std::to_string(times[i]), abs_profile(snaps[i]));
    }
    if (c.svg) {
        std::vector<double> x(Q.grid.count);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = Q.grid.node(j);
        write_text(out_path(c, "pde.svg"), svg_line_chart("|Q(x,t)| split-step", x, series));
    }
    std::cout << r.str();
    return log.stability_warning ? 1 : 0;
}

int run_compare(const Common& c, double T, double dt, double tol, const PipelineOptions& po) {
    const Context ctx = load(c);
    const auto rep = evolution_crosscheck(require_spec(ctx), ctx.config, T, dt, tol, po);
    emit_field(c, "compare_ist", rep.computed);
    emit_field(c, "compare_split_step", rep.reference);
    emit_overlay(c, "compare.svg", "|Q(x,T)| IST versus split-step", rep);
    return finish(rep, c, "compare");
}

int run_probe(const Common& c, const ContinuityOptions& co) {
    const Context ctx = load(c);
    const auto rep = continuity_probe(require_spec(ctx), ctx.config, co);
    if (c.svg) {
        std::vector<std::pair<std::string, std::vector<double>>> series;
        for (std::size_t i = 0; i < co.epsilons.size(); ++i) {
            std::vector<double> y;
            for (std::size_t t = 0; t < co.times.size(); ++t) {
                const std::string key = "flow_ratio_eps" + std::to_string(i) + "_t" + std::to_string(t);
                for (const auto& [k, v] : rep.residuals)
                    if (k == key) y.push_back(v);
            }
            std::ostringstream name;
            name << "eps=" << co.epsilons[i];
            series.emplace_back(name.str(), y);
        }
        write_text(out_path(c, "probe.svg"), svg_line_chart("flow Lipschitz ratio versus T", co.times, series));
    }
    return finish(rep, c, "probe");
}

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "run configuration (YAML)");
    app->add_option("--potential", c.potential, "potential spec string, YAML file or .mnls field");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--sigma", c.sigma, "+1 defocusing, -1 focusing");
    app->add_flag("--no-csv", c.no_csv, "skip CSV outputs");
    app->add_flag("--svg", c.svg, "write SVG line plots");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Direct and inverse scattering for the matrix NLS equation"};
    app.require_subcommand(1);
    Common common;
    double t = 0.0, pde_dt = 1e-3, compare_dt = 1e-4, rt_tol = 5e-3, compare_tol = 1e-2, rh_tol = 1e-10;
    std::string input, left_input;
    std::vector<double> times;
    PipelineOptions po;
    ContinuityOptions co;

    auto* forward = app.add_subcommand("forward", "potential -> scattering data");
    add_common(forward, common);

    auto* evolve = app.add_subcommand("evolve", "evolve stored scattering data or a jump to time t");
    add_common(evolve, common);
    evolve->add_option("--input", input, "scattering or jump file")->required();
    evolve->add_option("--t,--T", t, "time")->required();

    auto* inverse = app.add_subcommand("inverse", "jump file or potential -> reconstructed potential");
    add_common(inverse, common);
    inverse->add_option("--input", input, "jump or focusing jump file (x >= 0 side)");
    inverse->add_option("--left", left_input, "focusing jump of the reflected potential (x < 0 side)");
    inverse->add_option("--rh-tol", rh_tol, "Beals-Coifman solver tolerance");

    auto* rt = app.add_subcommand("roundtrip", "potential -> scattering -> potential error report");
    add_common(rt, common);
    rt->add_option("--tol", rt_tol, "rel-L2 limit");
    rt->add_option("--stride", po.x_stride, "compare on every n-th x node");
    rt->add_option("--rh-tol", po.rh_tol, "Beals-Coifman solver tolerance");
    rt->add_option("--circle-nodes", po.circle_nodes, "nodes on the focusing circle");

    auto* pde = app.add_subcommand("pde", "split-step reference solver");
    add_common(pde, common);
    pde->add_option("--t,--T", t, "final time")->required();
    pde->add_option("--dt", pde_dt, "time step");
    pde->add_option("--times", times, "snapshot times (ascending)")->delimiter(',');

    auto* compare = app.add_subcommand("compare", "IST evolution versus split-step");
    add_common(compare, common);
    compare->add_option("--t,--T", t, "final time")->required();
    compare->add_option("--dt", compare_dt, "split-step time step");
    compare->add_option("--tol", compare_tol, "rel-L2 limit");
    compare->add_option("--stride", po.x_stride, "compare on every n-th x node");
    compare->add_option("--rh-tol", po.rh_tol, "Beals-Coifman solver tolerance");
    compare->add_option("--circle-nodes", po.circle_nodes, "nodes on the focusing circle");

    auto* probe = app.add_subcommand("probe-lipschitz", "Lipschitz ratios of the direct, inverse and flow maps");
    add_common(probe, common);
    probe->add_option("--eps", co.epsilons, "perturbation sizes, largest first")->delimiter(',');
    probe->add_option("--times", co.times, "flow times, starting at 0")->delimiter(',');
    probe->add_option("--dt", co.dt, "split-step time step");
    probe->add_option("--stability-tol", co.stability_tol, "ratio drift limit between the smallest eps");
    probe->add_option("--stride", co.pipeline.x_stride, "inverse map on every n-th x node");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*forward) return run_forward(common);
        if (*evolve) return run_evolve(common, input, t);
        if (*inverse) return run_inverse(common, input, left_input, rh_tol);
        if (*rt) return run_roundtrip(common, rt_tol, po);
        if (*pde) return run_pde(common, t, pde_dt, times);
        if (*compare) return run_compare(common, t, compare_dt, compare_tol, po);
        if (*probe) return run_probe(common, co);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
