#include "mnls/evolution.hpp"

#include <algorithm>
#include <cmath>

namespace mnls {

MatrixSeries evolve_series(const MatrixSeries& m, const Grid1D& k_grid, int p, double t) {
    MatrixSeries out = m;
    for (std::size_t j = 0; j < k_grid.count; ++j) {
        const double k = k_grid.node(j);
        ad_sigma3_exp_inplace(2.0 * t * k * k, p, out[j]);
    }
    return out;
}

namespace {
MatrixSeries scale_phase(const MatrixSeries& b, const Grid1D& k_grid, double rate) {
    MatrixSeries out = b;
    for (std::size_t j = 0; j < k_grid.count; ++j) {
        const double k = k_grid.node(j);
        out[j] *= std::exp(kI * rate * k * k);
    }
    return out;
}
} // namespace

MatrixSeries evolve_upper(const MatrixSeries& b, const Grid1D& k_grid, double t) {
    return scale_phase(b, k_grid, -4.0 * t);
}

MatrixSeries evolve_lower(const MatrixSeries& c, const Grid1D& k_grid, double t) {
    return scale_phase(c, k_grid, 4.0 * t);
}

ScatteringData evolve_scattering(const ScatteringData& sd, double t) {
    ScatteringData out = sd;
    out.B = evolve_upper(sd.B, sd.k_grid, t);
    out.C = evolve_lower(sd.C, sd.k_grid, t);
    return out;
}

JumpFactorization evolve_jump(const JumpFactorization& jump, double t) {
    JumpFactorization out = jump;
    out.R = evolve_upper(jump.R, jump.k_grid, t);
    out.v = evolve_series(jump.v, jump.k_grid, jump.p, t);
    out.v_plus = evolve_series(jump.v_plus, jump.k_grid, jump.p, t);
    out.v_minus = evolve_series(jump.v_minus, jump.k_grid, jump.p, t);
    return out;
}

TimeContinuity time_continuity_probe(const JumpFactorization& jump, double t1, double t2, double gamma_cut) {
    const auto a = evolve_jump(jump, t1);
    const auto b = evolve_jump(jump, t2);
    const int n = jump.p + jump.q;
    const auto nk = jump.k_grid.count;
    MatrixSeries bulk(n, n, nk);
    MatrixSeries tail(n, n, nk);
    MatrixSeries diag(n, n, nk);
    for (std::size_t j = 0; j < nk; ++j) {
        const double k = jump.k_grid.node(j);
        RowMat d = RowMat(a.v_plus[j]) - RowMat(b.v_plus[j]);
        d += RowMat(a.v_minus[j]) - RowMat(b.v_minus[j]);
        RowMat dd = RowMat::Zero(n, n);
        dd.topLeftCorner(jump.p, jump.p) = d.topLeftCorner(jump.p, jump.p);
        dd.bottomRightCorner(jump.q, jump.q) = d.bottomRightCorner(jump.q, jump.q);
        diag[j] = dd;
        if (std::abs(k) <= gamma_cut) bulk[j] = d;
        else tail[j] = d;
    }
    TimeContinuity out;
    out.bulk = discrete_norms(bulk, jump.k_grid).h11;
    out.tail = discrete_norms(tail, jump.k_grid).h11;
    out.diagonal_l21 = discrete_norms(diag, jump.k_grid).l21;
    const double T = std::max(std::abs(t1), std::abs(t2));
    const double g2 = gamma_cut * gamma_cut;
    const double scale = (g2 + g2 * T + 1.0) * std::abs(t1 - t2);
    out.bulk_constant = scale > 0.0 ? out.bulk / scale : 0.0;
    return out;
}

} // namespace mnls
