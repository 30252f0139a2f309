#include "mnls/verification.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "mnls/defocusing.hpp"
#include "mnls/evolution.hpp"
#include "mnls/focusing.hpp"
#include "mnls/pde.hpp"
#include "mnls/scattering.hpp"

namespace mnls {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

MatrixSeries difference(const MatrixSeries& a, const MatrixSeries& b) {
    MatrixSeries d(a.rows(), a.cols(), a.size());
    for (std::size_t j = 0; j < a.size(); ++j) d[j] = a[j] - b[j];
    return d;
}

PotentialField subsample(const PotentialField& f, std::size_t stride) {
    const Grid1D g = strided(f.grid, stride);
    MatrixSeries s(f.p, f.q, g.count);
    for (std::size_t j = 0; j < g.count; ++j) s[j] = f.samples[j * stride];
    return PotentialField(g, f.p, f.q, f.sigma, std::move(s), f.profile);
}

BealsCoifmanOptions bc_options(const RunConfig& c, const PipelineOptions& o) {
    BealsCoifmanOptions b;
    b.backend = c.backend;
    b.tol = o.rh_tol;
    return b;
}

FocusingSetupOptions setup_options(const RunConfig& c, const PipelineOptions& o) {
    FocusingSetupOptions s;
    s.solver_tol = c.solver_tol;
    s.cutoff_threshold = c.cutoff_threshold;
    s.s_infinity.margin = c.s_infinity_margin;
    s.circle_nodes = o.circle_nodes;
    return s;
}

FocusingOptions focusing_options(const PipelineOptions& o) {
    FocusingOptions f;
    f.tol = o.rh_tol;
    return f;
}

double max_diff(const MatrixSeries& a, const MatrixSeries& b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, (RowMat(a[j]) - RowMat(b[j])).cwiseAbs().maxCoeff());
    return m;
}

} // namespace

Grid1D strided(const Grid1D& grid, std::size_t stride) {
    if (stride == 0 || grid.count % stride != 0) throw InputError("strided: stride must divide the node count");
    return Grid1D(grid.start, grid.step * static_cast<double>(stride), grid.count / stride);
}

FieldErrors field_errors(const PotentialField& computed, const PotentialField& reference) {
    if (!(computed.grid == reference.grid)) throw InputError("field_errors: grids differ");
    const auto d = discrete_norms(difference(computed.samples, reference.samples), reference.grid);
    const auto r = discrete_norms(reference.samples, reference.grid);
    auto rel = [](double a, double b) { return b > 0.0 ? a / b : a; };
    return {rel(d.l2, r.l2), rel(d.h1, r.h1), rel(d.l21, r.l21)};
}

bool ComparisonReport::pass() const {
    for (const auto& c : checks)
        if (!c.pass()) return false;
    return true;
}

const Check& ComparisonReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw InputError("report has no check '" + name + "'");
}

Report ComparisonReport::report() const {
    Report r;
    r.set("scenario", scenario);
    r.set("norm_before", norm_before);
    r.set("norm_after", norm_after);
    for (const auto& c : checks) {
        r.set(c.name, c.value);
        r.set(c.name + "_tol", c.limit);
        r.set_bool(c.name + "_pass", c.pass());
    }
    for (const auto& [k, v] : residuals) r.set(k, v);
    for (const auto& [k, v] : timings) r.set("time_" + k + "_s", v);
    r.set_bool("pass", pass());
    return r;
}

// =============================================================================
// Round trip
// =============================================================================

ComparisonReport roundtrip(const PotentialSpec& spec, const RunConfig& config, double tol,
                           const PipelineOptions& options) {
    config.validate();
    ComparisonReport rep;
    rep.scenario = "roundtrip " + spec.describe();
    const PotentialField Q = materialize(spec, config.x_grid);
    const Grid1D xg = strided(config.x_grid, options.x_stride);
    auto t0 = Clock::now();
    PotentialField rec;
    if (Q.sigma == 1) {
        const auto sd = forward_scattering(Q, config.k_grid, config.solver_tol);
        const auto jump = build_jump(sd);
        rep.timings.emplace_back("forward", seconds_since(t0));
        t0 = Clock::now();
        rec = reconstruct_potential(jump, xg, bc_options(config, options));
        rep.timings.emplace_back("inverse", seconds_since(t0));
        rep.residuals.emplace_back("consistency_gap", sd.consistency_gap);
        rep.residuals.emplace_back("min_eig_v_plus_vdag", jump.min_eig_v_plus_vdag());
    } else {
        rec = focusing_solve_and_reconstruct(Q, config.k_grid, xg, setup_options(config, options),
                                             focusing_options(options));
        rep.timings.emplace_back("forward_inverse", seconds_since(t0));
    }
    rep.reference = subsample(Q, options.x_stride);
    rep.computed = rec;
    const auto e = field_errors(rec, rep.reference);
    rep.norm_before = discrete_norms(rep.reference.samples, xg).l2;
    rep.norm_after = discrete_norms(rec.samples, xg).l2;
    rep.checks.push_back({"rel_l2", e.rel_l2, tol});
    rep.residuals.emplace_back("rel_h1", e.rel_h1);
    rep.residuals.emplace_back("rel_l21", e.rel_l21);
    return rep;
}

// =============================================================================
// Evolution cross-check
// =============================================================================

ComparisonReport evolution_crosscheck(const PotentialSpec& spec, const RunConfig& config, double T, double dt,
                                      double tol, const PipelineOptions& options) {
    config.validate();
    ComparisonReport rep;
    rep.scenario = "evolution " + spec.describe();
    const PotentialField Q = materialize(spec, config.x_grid);
    const Grid1D xg = strided(config.x_grid, options.x_stride);

    auto t0 = Clock::now();
    PotentialField ist;
    double reversal = 0.0;
    if (Q.sigma == 1) {
        const auto jump = build_jump(forward_scattering(Q, config.k_grid, config.solver_tol));
        const auto back = evolve_jump(evolve_jump(jump, T), -T);
        reversal = std::max({max_diff(back.R, jump.R), max_diff(back.v, jump.v), max_diff(back.v_plus, jump.v_plus),
                             max_diff(back.v_minus, jump.v_minus)});
        ist = reconstruct_potential(evolve_jump(jump, T), xg, bc_options(config, options));
    } else {
        const auto so = setup_options(config, options);
        const auto right = prepare_focusing(Q, config.k_grid, so);
        const auto left = prepare_focusing(Q.reflected(), config.k_grid, so);
        const auto back = right.jump.evolved(T, so.eta).evolved(-T, so.eta);
        reversal = std::max({max_diff(back.R, right.jump.R), max_diff(back.R0, right.jump.R0),
                             max_diff(back.X, right.jump.X), max_diff(back.Y, right.jump.Y)});
        const auto r = right.jump.evolved(T, so.eta);
        const auto l = left.jump.evolved(T, so.eta);
        ist = focusing_reconstruct(r, &l, xg, focusing_options(options));
    }
    rep.timings.emplace_back("ist", seconds_since(t0));

    t0 = Clock::now();
    ConservationLog log;
    const PotentialField pde = subsample(propagate(Q, T, dt, &log), options.x_stride);
    rep.timings.emplace_back("split_step", seconds_since(t0));

    rep.reference = pde;
    rep.computed = ist;
    const auto e = field_errors(ist, pde);
    rep.norm_before = discrete_norms(subsample(Q, options.x_stride).samples, xg).l2;
    rep.norm_after = discrete_norms(ist.samples, xg).l2;
    rep.checks.push_back({"rel_l2", e.rel_l2, tol});
    rep.checks.push_back({"time_reversal", reversal, 1e-12});
    rep.residuals.emplace_back("rel_h1", e.rel_h1);
    rep.residuals.emplace_back("split_step_l2_drift", log.max_drift);
    return rep;
}

// =============================================================================
// Continuity probe
// =============================================================================

PotentialField perturbation(const PotentialField& base) {
    RowMat P(base.p, base.q);
    for (int r = 0; r < base.p; ++r)
        for (int c = 0; c < base.q; ++c) P(r, c) = cplx(1.0, 0.5) * static_cast<double>(1 + r + 2 * c);
    P /= P.norm();
    MatrixSeries s(base.p, base.q, base.grid.count);
    for (std::size_t j = 0; j < base.grid.count; ++j) {
        const double x = base.grid.node(j);
        s[j] = x * std::exp(-0.5 * x * x) * P;
    }
    Profile prof;
    if (base.profile)
        prof = [P](double x) { return RowMat(x * std::exp(-0.5 * x * x) * P); };
    return PotentialField(base.grid, base.p, base.q, base.sigma, std::move(s), prof);
}

ComparisonReport continuity_probe(const PotentialSpec& base, const RunConfig& config,
                                  const ContinuityOptions& options) {
    config.validate();
    if (options.epsilons.size() < 2) throw InputError("continuity_probe: need at least two epsilons");
    if (options.times.empty() || options.times.front() != 0.0)
        throw InputError("continuity_probe: flow times must start at 0");
    ComparisonReport rep;
    rep.scenario = "continuity " + base.describe();
    const PotentialField Q1 = materialize(base, config.x_grid);
    const PotentialField phi = perturbation(Q1);
    const Grid1D xg = strided(config.x_grid, options.pipeline.x_stride);
    const bool defocusing = Q1.sigma == 1;

    auto t0 = Clock::now();
    const auto sd1 = forward_scattering(Q1, config.k_grid, config.solver_tol);
    const auto R1 = reflection_coefficient(sd1).R;
    PotentialField rec1;
    if (defocusing) rec1 = reconstruct_potential(build_jump(sd1), xg, bc_options(config, options.pipeline));
    const auto flow1 = propagate_snapshots(Q1, options.times, options.dt);

    const std::size_t ne = options.epsilons.size();
    const std::size_t nt = options.times.size();
    std::vector<double> direct(ne), inverse(ne, 0.0);
    std::vector<std::vector<double>> flow(ne, std::vector<double>(nt));
    for (std::size_t i = 0; i < ne; ++i) {
        const double eps = options.epsilons[i];
        MatrixSeries s = Q1.samples;
        for (std::size_t j = 0; j < s.size(); ++j) s[j] += eps * RowMat(phi.samples[j]);
        Profile prof;
        if (Q1.profile)
            prof = [f = Q1.profile, g = phi.profile, eps](double x) { return RowMat(f(x) + eps * g(x)); };
        const PotentialField Q2(Q1.grid, Q1.p, Q1.q, Q1.sigma, std::move(s), prof);
        const double dq = discrete_norms(difference(Q2.samples, Q1.samples), Q1.grid).h11;

        const auto sd2 = forward_scattering(Q2, config.k_grid, config.solver_tol);
        const auto R2 = reflection_coefficient(sd2).R;
        const double dr = discrete_norms(difference(R2, R1), config.k_grid).h11;
        direct[i] = dr / dq;
        if (defocusing) {
            const auto rec2 = reconstruct_potential(build_jump(sd2), xg, bc_options(config, options.pipeline));
            inverse[i] = discrete_norms(difference(rec2.samples, rec1.samples), xg).h11 / dr;
        }
        const auto flow2 = propagate_snapshots(Q2, options.times, options.dt);
        for (std::size_t t = 0; t < nt; ++t)
            flow[i][t] = discrete_norms(difference(flow2[t].samples, flow1[t].samples), Q1.grid).h11 / dq;
        rep.residuals.emplace_back("direct_ratio_eps" + std::to_string(i), direct[i]);
        if (defocusing) rep.residuals.emplace_back("inverse_ratio_eps" + std::to_string(i), inverse[i]);
        for (std::size_t t = 0; t < nt; ++t)
            rep.residuals.emplace_back("flow_ratio_eps" + std::to_string(i) + "_t" + std::to_string(t), flow[i][t]);
    }
    rep.timings.emplace_back("probe", seconds_since(t0));

    auto drift = [&](const std::vector<double>& r) {
        const double a = r[ne - 1];
        const double b = r[ne - 2];
        if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0) return std::numeric_limits<double>::infinity();
        return std::abs(a - b) / a;
    };
    rep.checks.push_back({"direct_ratio_drift", drift(direct), options.stability_tol});
    if (defocusing) rep.checks.push_back({"inverse_ratio_drift", drift(inverse), options.stability_tol});
    double flow_drift = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
        std::vector<double> col(ne);
        for (std::size_t i = 0; i < ne; ++i) col[i] = flow[i][t];
        flow_drift = std::max(flow_drift, drift(col));
    }
    rep.checks.push_back({"flow_ratio_drift", flow_drift, options.stability_tol});

    // log ratio(T) = log ratio(0) + C T, least squares on the smallest epsilon
    const auto& r = flow[ne - 1];
    double stt = 0.0, sty = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
        const double y = std::log(r[t] / r[0]);
        stt += options.times[t] * options.times[t];
        sty += options.times[t] * y;
    }
    const double C = stt > 0.0 ? sty / stt : 0.0;
    double fit = 0.0;
    for (std::size_t t = 0; t < nt; ++t)
        fit = std::max(fit, std::abs(std::log(r[t] / r[0]) - C * options.times[t]));
    if (!std::isfinite(fit)) fit = std::numeric_limits<double>::infinity();
    rep.residuals.emplace_back("gronwall_rate", C);
    rep.checks.push_back({"gronwall_fit_residual", fit, 0.1});
    rep.norm_before = discrete_norms(Q1.samples, Q1.grid).h11;
    rep.norm_after = discrete_norms(flow1.back().samples, Q1.grid).h11;
    rep.reference = Q1;
    rep.computed = flow1.back();
    return rep;
}

} // namespace mnls
