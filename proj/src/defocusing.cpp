#include "mnls/defocusing.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mnls/evolution.hpp"
#include "mnls/gmres.hpp"
#include "mnls/parallel.hpp"

namespace mnls {

RowMat lower_unit(const RowMat& a) {
    const auto q = a.rows();
    const auto p = a.cols();
    RowMat m = RowMat::Identity(p + q, p + q);
    m.bottomLeftCorner(q, p) = a;
    return m;
}

RowMat upper_unit(const RowMat& a) {
    const auto p = a.rows();
    const auto q = a.cols();
    RowMat m = RowMat::Identity(p + q, p + q);
    m.topRightCorner(p, q) = a;
    return m;
}

// =============================================================================
// JumpFactorization
// =============================================================================

RowMat JumpFactorization::w_plus(std::size_t j) const {
    return RowMat(v_plus[j]) - RowMat::Identity(p + q, p + q);
}

RowMat JumpFactorization::w_minus(std::size_t j) const {
    return RowMat::Identity(p + q, p + q) - RowMat(v_minus[j]);
}

double JumpFactorization::factorization_residual() const {
    double r = 0.0;
    for (std::size_t j = 0; j < k_grid.count; ++j) {
        const RowMat vm = v_minus[j];
        r = std::max(r, (vm.inverse() * RowMat(v_plus[j]) - RowMat(v[j])).norm());
    }
    return r;
}

double JumpFactorization::min_eig_v_plus_vdag() const {
    double lo = INFINITY;
    for (std::size_t j = 0; j < k_grid.count; ++j) {
        const RowMat vj = v[j];
        const Eigen::MatrixXcd hsum = vj + vj.adjoint();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hsum, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
}

JumpFactorization jump_from_reflection(const Grid1D& k_grid, const MatrixSeries& R, int sigma) {
    if (R.size() != k_grid.count) throw InputError("jump_from_reflection: R does not match the k-grid");
    JumpFactorization J;
    J.k_grid = k_grid;
    J.p = R.rows();
    J.q = R.cols();
    J.sigma = sigma;
    J.R = R;
    const int n = J.p + J.q;
    J.v = MatrixSeries(n, n, k_grid.count);
    J.v_plus = MatrixSeries(n, n, k_grid.count);
    J.v_minus = MatrixSeries(n, n, k_grid.count);
    for (std::size_t j = 0; j < k_grid.count; ++j) {
        const RowMat r = R[j];
        const RowMat vp = lower_unit(static_cast<double>(sigma) * r.adjoint());
        const RowMat vm = upper_unit(r);
        J.v_plus[j] = vp;
        J.v_minus[j] = vm;
        J.v[j] = upper_unit(-r) * vp;
    }
    return J;
}

JumpFactorization build_jump(const ScatteringData& sd) {
    if (sd.sigma != 1) throw InputError("build_jump: defocusing data required (sigma = +1)");
    auto J = jump_from_reflection(sd.k_grid, reflection_coefficient(sd).R, 1);
    const double lo = J.min_eig_v_plus_vdag();
    if (!(lo > 0.0)) {
        std::ostringstream os;
        os << "v + v^dagger is not positive definite (min eigenvalue " << lo << "); reflection data corrupted";
        throw DataError(os.str());
    }
    return J;
}

// =============================================================================
// BealsCoifmanOperator
// =============================================================================

BealsCoifmanOperator::BealsCoifmanOperator(const JumpFactorization& jump, double x)
    : n_(jump.p + jump.q), nk_(jump.k_grid.count), cauchy_(jump.k_grid.count), wsum_(n_, n_, nk_),
      wminus_(n_, n_, nk_) {
    for (std::size_t j = 0; j < nk_; ++j) {
        const double k = jump.k_grid.node(j);
        RowMat wp = jump.w_plus(j);
        RowMat wm = jump.w_minus(j);
        ad_sigma3_exp_inplace(x * k, jump.p, wp);
        ad_sigma3_exp_inplace(x * k, jump.p, wm);
        wsum_[j] = wp + wm;
        wminus_[j] = wm;
    }
}

void BealsCoifmanOperator::apply_cw(const Eigen::VectorXcd& nu, Eigen::VectorXcd& y) const {
    const auto nk = static_cast<Eigen::Index>(nk_);
    y.setZero(size());
    Eigen::VectorXcd f(nk);
    for (int b = 0; b < n_; ++b) {
        for (Eigen::Index j = 0; j < nk; ++j) {
            cplx acc = 0.0;
            cplx accm = 0.0;
            const auto ws = wsum_[static_cast<std::size_t>(j)];
            const auto wm = wminus_[static_cast<std::size_t>(j)];
            for (int a = 0; a < n_; ++a) {
                const cplx va = nu[a * nk + j];
                acc += va * ws(a, b);
                accm += va * wm(a, b);
            }
            f[j] = acc;
            y[b * nk + j] = accm;
        }
        cauchy_.apply(f.data(), f.data(), Side::Minus);
        y.segment(b * nk, nk) += f;
    }
}

void BealsCoifmanOperator::apply(const Eigen::VectorXcd& nu, Eigen::VectorXcd& y) const {
    apply_cw(nu, y);
    y = nu - y;
}

void BealsCoifmanOperator::apply_adjoint(const Eigen::VectorXcd& y, Eigen::VectorXcd& out) const {
    // The line C- matrix is Hermitian, so (C_w)* y_a = sum_b conj(W_ab) C- y_b + conj(w-_ab) y_b.
    const auto nk = static_cast<Eigen::Index>(nk_);
    std::vector<Eigen::VectorXcd> cy(static_cast<std::size_t>(n_));
    for (int b = 0; b < n_; ++b) {
        Eigen::VectorXcd seg = y.segment(b * nk, nk);
        cy[static_cast<std::size_t>(b)] = cauchy_.apply(seg, Side::Minus);
    }
    out = y;
    for (Eigen::Index j = 0; j < nk; ++j) {
        const auto ws = wsum_[static_cast<std::size_t>(j)];
        const auto wm = wminus_[static_cast<std::size_t>(j)];
        for (int a = 0; a < n_; ++a) {
            cplx acc = 0.0;
            for (int b = 0; b < n_; ++b)
                acc += std::conj(ws(a, b)) * cy[static_cast<std::size_t>(b)][j] + std::conj(wm(a, b)) * y[b * nk + j];
            out[a * nk + j] -= acc;
        }
    }
}

Eigen::MatrixXcd BealsCoifmanOperator::dense() const {
    const auto nk = static_cast<Eigen::Index>(nk_);
    // Line C+ is Toeplitz: 1/2 on the diagonal, i/(pi d) for odd offsets d = l - j.
    Eigen::MatrixXcd K(nk, nk);
    for (Eigen::Index l = 0; l < nk; ++l) {
        for (Eigen::Index j = 0; j < nk; ++j) {
            const Eigen::Index d = l - j;
            cplx v = 0.0;
            if (d == 0) v = -0.5;
            else if (d % 2 != 0) v = kI / (kPi * static_cast<double>(d));
            K(l, j) = v;
        }
    }
    const Eigen::Index N = size();
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(N, N);
    for (int a = 0; a < n_; ++a) {
        for (int b = 0; b < n_; ++b) {
            auto blk = A.block(b * nk, a * nk, nk, nk);
            for (Eigen::Index j = 0; j < nk; ++j) {
                const cplx w = wsum_[static_cast<std::size_t>(j)](a, b);
                if (w != 0.0) blk.col(j) -= K.col(j) * w;
                blk(j, j) -= wminus_[static_cast<std::size_t>(j)](a, b);
            }
        }
    }
    return A;
}

// =============================================================================
// Solves and reconstruction
// =============================================================================

namespace {

struct RowSolver {
    const BealsCoifmanOperator& op;
    const BealsCoifmanOptions& options;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu;
    ApplyFn apply;

    RowSolver(const BealsCoifmanOperator& op, const BealsCoifmanOptions& options) : op(op), options(options) {
        if (options.backend == Backend::Dense) {
            lu.compute(op.dense());
            const double rc = lu.rcond();
            if (!(rc > 1e-14)) {
                std::ostringstream os;
                os << "dense Beals-Coifman system is singular (rcond " << rc << ")";
                throw SolverError(os.str());
            }
        }
        apply = [&op](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { op.apply(x, y); };
    }

    /// Returns the solution and its relative residual.
    std::pair<Eigen::VectorXcd, double> solve(const Eigen::VectorXcd& b, const Eigen::VectorXcd& guess, long& iters) {
        if (options.backend == Backend::Dense) {
            Eigen::VectorXcd x = lu.solve(b);
            Eigen::VectorXcd ax(x.size());
            op.apply(x, ax);
            return {x, (b - ax).norm() / b.norm()};
        }
        auto res = gmres_solve(apply, op.size(), b, guess, options.tol, options.restart, options.max_iterations);
        iters += res.iterations;
        if (!res.converged) {
            std::ostringstream os;
            os << "GMRES stagnated at relative residual " << res.residual << " (tolerance " << options.tol << ")";
            throw SolverError(os.str(), res.residual);
        }
        return {res.x, res.residual};
    }
};

Eigen::VectorXcd row_of(const MatrixSeries& nu, int r) {
    const int n = nu.cols();
    const auto nk = static_cast<Eigen::Index>(nu.size());
    Eigen::VectorXcd v(n * nk);
    for (int a = 0; a < n; ++a)
        for (Eigen::Index j = 0; j < nk; ++j) v[a * nk + j] = nu[static_cast<std::size_t>(j)](r, a);
    return v;
}

} // namespace

BealsCoifmanSolution beals_coifman_solve(const JumpFactorization& jump, double x, const BealsCoifmanOptions& options,
                                         std::vector<int> rows, const BealsCoifmanSolution* warm) {
    const int n = jump.p + jump.q;
    if (rows.empty())
        for (int r = 0; r < n; ++r) rows.push_back(r);
    BealsCoifmanOperator op(jump, x);
    RowSolver solver(op, options);
    const auto nk = static_cast<Eigen::Index>(jump.k_grid.count);

    BealsCoifmanSolution sol;
    sol.x = x;
    sol.nu = MatrixSeries(n, n, jump.k_grid.count);
    for (std::size_t j = 0; j < jump.k_grid.count; ++j) sol.nu[j].setIdentity();
    for (int r : rows) {
        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(op.size());
        b.segment(r * nk, nk).setOnes();
        Eigen::VectorXcd guess = warm ? row_of(warm->nu, r) : b;
        auto [xr, res] = solver.solve(b, guess, sol.iterations);
        sol.residual = std::max(sol.residual, res);
        for (int a = 0; a < n; ++a)
            for (Eigen::Index j = 0; j < nk; ++j) sol.nu[static_cast<std::size_t>(j)](r, a) = xr[a * nk + j];
    }
    return sol;
}

namespace {
RowMat integral_nu_w(const JumpFactorization& jump, const BealsCoifmanSolution& sol) {
    const int n = jump.p + jump.q;
    RowMat acc = RowMat::Zero(n, n);
    for (std::size_t j = 0; j < jump.k_grid.count; ++j) {
        const double k = jump.k_grid.node(j);
        RowMat w = RowMat(jump.v_plus[j]) - RowMat(jump.v_minus[j]);
        ad_sigma3_exp_inplace(sol.x * k, jump.p, w);
        acc += RowMat(sol.nu[j]) * w;
    }
    return acc * jump.k_grid.step;
}
} // namespace

RowMat potential_from_nu(const JumpFactorization& jump, const BealsCoifmanSolution& sol) {
    return (-1.0 / kPi) * integral_nu_w(jump, sol).topRightCorner(jump.p, jump.q);
}

PotentialField reconstruct_potential(const JumpFactorization& jump, const Grid1D& x_grid,
                                     const BealsCoifmanOptions& options) {
    std::vector<int> rows;
    for (int r = 0; r < jump.p; ++r) rows.push_back(r);
    MatrixSeries out(jump.p, jump.q, x_grid.count);
    // Fixed-size chunks keep warm starts (and therefore results) independent of thread count.
    constexpr std::size_t kChunk = 32;
    const std::size_t chunks = (x_grid.count + kChunk - 1) / kChunk;
    parallel_for(chunks, [&](std::size_t c) {
        BealsCoifmanSolution prev;
        bool have = false;
        for (std::size_t j = c * kChunk; j < std::min(x_grid.count, (c + 1) * kChunk); ++j) {
            const double x = x_grid.node(j);
            try {
                auto sol = beals_coifman_solve(jump, x, options, rows, have ? &prev : nullptr);
                out[j] = potential_from_nu(jump, sol);
                prev = std::move(sol);
                have = true;
            } catch (const SolverError& e) {
                std::ostringstream os;
                os << e.what() << " at x = " << x;
                throw SolverError(os.str(), e.residual);
            }
        }
    });
    return PotentialField(x_grid, jump.p, jump.q, jump.sigma, std::move(out));
}

RowMat rh_solution_at(const JumpFactorization& jump, const BealsCoifmanSolution& sol, cplx z) {
    const int n = jump.p + jump.q;
    const Eigen::RowVectorXcd w = line_cauchy_weights(jump.k_grid, z);
    RowMat M = RowMat::Identity(n, n);
    for (std::size_t j = 0; j < jump.k_grid.count; ++j) {
        const double k = jump.k_grid.node(j);
        RowMat d = RowMat(jump.v_plus[j]) - RowMat(jump.v_minus[j]);
        ad_sigma3_exp_inplace(sol.x * k, jump.p, d);
        M += w[static_cast<Eigen::Index>(j)] * (RowMat(sol.nu[j]) * d);
    }
    return M;
}

// =============================================================================
// Lax pair
// =============================================================================

LaxResidual verify_lax(const JumpFactorization& jump, double x, double t, double h, cplx z,
                       const BealsCoifmanOptions& options) {
    const int p = jump.p;
    const int n = jump.p + jump.q;
    const RowMat s3 = sigma3(jump.p, jump.q);
    struct Sample {
        RowMat M;
        RowMat U;
        RowMat M1;
    };
    auto sample = [&](double xx, double tt) {
        const auto J = evolve_jump(jump, tt);
        const auto sol = beals_coifman_solve(J, xx, options);
        const RowMat I = integral_nu_w(J, sol);
        RowMat U = RowMat::Zero(n, n);
        U.topRightCorner(p, n - p) = (-1.0 / kPi) * I.topRightCorner(p, n - p);
        U.bottomLeftCorner(n - p, p) = (1.0 / kPi) * I.bottomLeftCorner(n - p, p);
        const RowMat M1 = (-1.0 / (2.0 * kPi * kI)) * I;
        return Sample{rh_solution_at(J, sol, z), U, M1};
    };
    auto ad = [&](const RowMat& m) { return RowMat(s3 * m - m * s3); };
    const Sample c = sample(x, t);
    const Sample xp = sample(x + h, t);
    const Sample xm = sample(x - h, t);
    const Sample tp = sample(x, t + h);
    const Sample tm = sample(x, t - h);

    LaxResidual out;
    const RowMat Mx = (xp.M - xm.M) / (2.0 * h);
    out.x_residual = (Mx + kI * z * ad(c.M) - c.U * c.M).norm();
    const RowMat Ux = (xp.U - xm.U) / (2.0 * h);
    const RowMat P2 = kI * s3 * Ux - kI * s3 * c.U * c.U;
    const RowMat P = 2.0 * z * c.U + P2;
    const RowMat Mt = (tp.M - tm.M) / (2.0 * h);
    out.t_residual = (Mt + 2.0 * kI * z * z * ad(c.M) - P * c.M).norm();
    const RowMat M1x = (xp.M1 - xm.M1) / (2.0 * h);
    out.p2_moment_residual = (P2 + 2.0 * M1x).norm();
    return out;
}

// =============================================================================
// Left-normalized diagnostic
// =============================================================================

LeftNormalizedReport left_normalized_diagnostic(const PotentialField& potential, const ScatteringData& sd,
                                                const JumpFactorization& jump, std::size_t x_node,
                                                const std::vector<cplx>& probes, const BealsCoifmanOptions& options) {
    if (sd.sigma != 1) throw InputError("left_normalized_diagnostic: defocusing data required");
    const int p = sd.p;
    const int q = sd.q;
    const int n = p + q;
    LeftNormalizedReport rep;

    // delta± on the axis and v_tilde = delta-^-1 v delta+.
    for (std::size_t j = 0; j < sd.k_grid.count; ++j) {
        const RowMat A = sd.A[j];
        const RowMat D = sd.D[j];
        RowMat dp = RowMat::Zero(n, n);
        RowMat dm = RowMat::Zero(n, n);
        dp.topLeftCorner(p, p) = A;
        dp.bottomRightCorner(q, q) = D.inverse().adjoint();
        dm.topLeftCorner(p, p) = A.inverse().adjoint();
        dm.bottomRightCorner(q, q) = D;
        rep.delta_offdiag = std::max({rep.delta_offdiag, dp.topRightCorner(p, q).norm(), dm.bottomLeftCorner(q, p).norm()});
        const RowMat vt = dm.inverse() * RowMat(jump.v[j]) * dp;
        rep.vtilde_det_residual = std::max(rep.vtilde_det_residual, std::abs(vt.determinant() - 1.0));
    }

    const double x = potential.grid.node(x_node);
    const auto sol = beals_coifman_solve(jump, x, options);
    JostIntegrator integ(potential);
    for (const cplx z : probes) {
        if (z.imag() <= 0.0) throw InputError("left_normalized_diagnostic: probes must lie in the upper half-plane");
        const RowMat M = rh_solution_at(jump, sol, z);
        const auto cols = upper_columns(integ, z, x_node);
        const RowMat Dc = lower_D(integ, std::conj(z));
        RowMat Mt(n, n);
        Mt.leftCols(p) = cols.m1_minus;
        Mt.rightCols(q) = cols.m2_plus * Dc.inverse().adjoint();
        RowMat delta = RowMat::Zero(n, n);
        delta.topLeftCorner(p, p) = cols.A;
        delta.bottomRightCorner(q, q) = Dc.inverse().adjoint();
        rep.offaxis_residual = std::max(rep.offaxis_residual, (Mt - M * delta).norm());
    }
    return rep;
}

DecayCheck cauchy_decay_check(const MatrixSeries& R, const Grid1D& k_grid, double x) {
    LineCauchy c(k_grid.count);
    double lhs2 = 0.0;
    Eigen::VectorXcd f(static_cast<Eigen::Index>(k_grid.count));
    for (int r = 0; r < R.rows(); ++r) {
        for (int s = 0; s < R.cols(); ++s) {
            for (std::size_t j = 0; j < k_grid.count; ++j)
                f[static_cast<Eigen::Index>(j)] = R[j](r, s) * std::exp(-2.0 * kI * x * k_grid.node(j));
            const Eigen::VectorXcd g = c.apply(f, Side::Plus);
            lhs2 += g.squaredNorm();
        }
    }
    DecayCheck out;
    out.lhs = std::sqrt(lhs2 * k_grid.step);
    out.bound = discrete_norms(R, k_grid).h1 / std::sqrt(1.0 + x * x);
    return out;
}

} // namespace mnls
