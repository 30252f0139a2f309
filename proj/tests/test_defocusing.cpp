#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "mnls/defocusing.hpp"
#include "mnls/gmres.hpp"
#include "mnls/io.hpp"
#include "support.hpp"

using namespace mnls;

namespace {

RowMat direction21() {
    RowMat d(2, 1);
    d << 0.6, cplx(0.0, 0.8);
    return d;
}

JumpFactorization small_jump(const Grid1D& kg, double amp) {
    return jump_from_reflection(kg, test::series_from(kg, 2, 1, test::gaussian(amp, direction21(), 0.2)));
}

/// Row r of the identity in the operator's component-major layout.
Eigen::VectorXcd identity_row(int n, std::size_t nk, int r) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n * nk));
    e.segment(static_cast<Eigen::Index>(r * nk), static_cast<Eigen::Index>(nk)).setOnes();
    return e;
}

} // namespace

// =============================================================================
// Jump factorization
// =============================================================================

TEST_CASE("jump from reflection data") {
    const Grid1D kg = Grid1D::window(-4.0, 4.0, 16);
    SUBCASE("zero reflection gives identity jumps") {
        const auto j = jump_from_reflection(kg, MatrixSeries(2, 1, kg.count));
        for (std::size_t i = 0; i < kg.count; ++i) {
            CHECK(RowMat(j.v[i]) == RowMat::Identity(3, 3));
            CHECK(RowMat(j.v_plus[i]) == RowMat::Identity(3, 3));
            CHECK(RowMat(j.v_minus[i]) == RowMat::Identity(3, 3));
        }
    }
    SUBCASE("scalar R = 0.5") {
        MatrixSeries R(1, 1, kg.count);
        for (std::size_t i = 0; i < kg.count; ++i) R[i](0, 0) = 0.5;
        const auto j = jump_from_reflection(kg, R);
        RowMat expected(2, 2);
        expected << 0.75, -0.5, 0.5, 1.0;
        CHECK((RowMat(j.v[3]) - expected).norm() < 1e-15);
    }
    SUBCASE("structure and positivity on Gaussian data") {
        const auto j = small_jump(Grid1D::window(-8.0, 8.0, 128), 0.6);
        CHECK(j.factorization_residual() < 1e-12);
        double upper = 0.0, lower = 0.0, eig_err = 0.0;
        for (std::size_t i = 0; i < j.k_grid.count; ++i) {
            const RowMat wp = j.w_plus(i), wm = j.w_minus(i);
            upper += wp.topRightCorner(2, 1).norm() + wp.topLeftCorner(2, 2).norm() + wp.bottomRightCorner(1, 1).norm();
            lower += wm.bottomLeftCorner(1, 2).norm() + wm.topLeftCorner(2, 2).norm() + wm.bottomRightCorner(1, 1).norm();
            // v + v† = diag(2(I - R R†), 2I): smallest eigenvalue 2(1 - |R|_2^2).
            const RowMat v = j.v[i];
            const Eigen::MatrixXcd h = v + v.adjoint();
            const double lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h).eigenvalues().minCoeff();
            const double r = Eigen::JacobiSVD<Eigen::MatrixXcd>(Eigen::MatrixXcd(RowMat(j.R[i]))).singularValues()(0);
            eig_err = std::max(eig_err, std::abs(lam - 2.0 * (1.0 - r * r)));
        }
        CHECK(upper == 0.0);
        CHECK(lower == 0.0);
        CHECK(eig_err < 1e-13);
        CHECK(j.min_eig_v_plus_vdag() > 0.0);
    }
}

// =============================================================================
// Beals-Coifman equation
// =============================================================================

TEST_CASE("Beals-Coifman solve against the Neumann series") {
    const Grid1D kg = Grid1D::window(-6.0, 6.0, 64);
    const auto jump = small_jump(kg, 0.05);
    const double x = 0.7;
    const BealsCoifmanOperator op(jump, x);
    const auto sol = beals_coifman_solve(jump, x, {Backend::Dense, 1e-13});
    const int n = 3;
    const Eigen::MatrixXcd K = Eigen::MatrixXcd::Identity(op.size(), op.size()) - op.dense();
    const double kn = Eigen::JacobiSVD<Eigen::MatrixXcd>(K).singularValues()(0);
    REQUIRE(kn < 0.5);
    for (int r = 0; r < n; ++r) {
        const Eigen::VectorXcd e = identity_row(n, kg.count, r);
        Eigen::VectorXcd term = e, sum = e, cwi;
        op.apply_cw(e, cwi);
        for (int it = 0; it < 200 && term.norm() > 1e-16 * sum.norm(); ++it) {
            Eigen::VectorXcd next;
            op.apply_cw(term, next);
            term = next;
            sum += term;
        }
        Eigen::VectorXcd nu(op.size());
        for (int c = 0; c < n; ++c)
            for (std::size_t j = 0; j < kg.count; ++j)
                nu[static_cast<Eigen::Index>(c * kg.count + j)] = sol.nu[j](r, c);
        CHECK((nu - sum).norm() < 1e-11 * sum.norm());
        CHECK((nu - e - cwi).norm() <= kn * kn / (1.0 - kn) * e.norm());
    }
    const auto zero = jump_from_reflection(kg, MatrixSeries(2, 1, kg.count));
    const auto s0 = beals_coifman_solve(zero, 1.0);
    for (std::size_t j = 0; j < kg.count; ++j) CHECK(RowMat(s0.nu[j]) == RowMat::Identity(3, 3));
}

TEST_CASE("resolvent bound is uniform in x") {
    const Grid1D kg = Grid1D::window(-6.0, 6.0, 64);
    const auto jump = small_jump(kg, 0.8);
    double worst = 0.0;
    for (double x : {0.0, 5.0, 10.0, 20.0}) {
        const BealsCoifmanOperator op(jump, x);
        const double r = resolvent_norm_estimate([&](const Eigen::VectorXcd& a, Eigen::VectorXcd& b) { op.apply(a, b); },
                                                 [&](const Eigen::VectorXcd& a, Eigen::VectorXcd& b) { op.apply_adjoint(a, b); },
                                                 op.size(), 1e-10);
        CHECK(std::isfinite(r));
        CHECK(r >= 1.0 - 1e-6);
        worst = std::max(worst, r);
    }
    CHECK(worst < 10.0);
}

// =============================================================================
// Reconstruction
// =============================================================================

TEST_CASE("reconstruction: zero data, Born regime and a round trip") {
    const Grid1D kg = Grid1D::window(-8.0, 8.0, 256);
    const Grid1D xg = Grid1D::window(-4.0, 4.0, 16);
    SUBCASE("zero reflection") {
        const auto q = reconstruct_potential(jump_from_reflection(kg, MatrixSeries(2, 1, kg.count)), xg);
        CHECK(q.samples.max_norm() == 0.0);
    }
    SUBCASE("Born regime") {
        // R = eps sqrt(pi) e^{-k^2} E has Fourier partner Q = (1/pi) int R e^{-2ixk} dk = eps e^{-x^2} E.
        const double eps = 1e-3;
        const RowMat E = direction21();
        const auto R = test::series_from(kg, 2, 1, [&](double k) { return RowMat(eps * std::sqrt(kPi) * std::exp(-k * k) * E); });
        const auto q = reconstruct_potential(jump_from_reflection(kg, R), xg, {Backend::Iterative, 1e-13});
        double err = 0.0;
        for (std::size_t j = 0; j < xg.count; ++j)
            err = std::max(err, (RowMat(q.samples[j]) - eps * std::exp(-xg.node(j) * xg.node(j)) * E).norm());
        CHECK(err < 2.0 * eps * eps * eps);
    }
    SUBCASE("Gaussian round trip, dense and iterative backends") {
        const Grid1D g = Grid1D::window(-20.0, 20.0, 512);
        const auto f = test::field_from(g, 2, 1, 1, test::gaussian(0.5, direction21()));
        const auto jump = build_jump(forward_scattering(f, kg));
        const auto qi = reconstruct_potential(jump, xg, {Backend::Iterative, 1e-12});
        const auto qd = reconstruct_potential(jump, xg, {Backend::Dense, 1e-12});
        const auto ref = test::series_from(xg, 2, 1, test::gaussian(0.5, direction21()));
        CHECK(test::rel_l2(qi.samples, ref) < 1e-8);
        CHECK(test::max_diff(qi.samples, qd.samples) < 1e-10);
        CHECK(qi.sigma == 1);
    }
}

TEST_CASE("build_jump rejects data without a positive definite jump") {
    const Grid1D kg = Grid1D::window(-4.0, 4.0, 16);
    ScatteringData sd(kg, 1, 1, 1);
    for (std::size_t j = 0; j < kg.count; ++j) {
        RowMat S(2, 2);
        S << 1.0, 2.0, 0.0, 1.0;
        sd.set_S(j, S);
    }
    CHECK_THROWS_AS((void)build_jump(sd), DataError);
}

// =============================================================================
// Lax pair and dual normalization
// =============================================================================

TEST_CASE("Lax pair residuals are second order in the difference step") {
    const Grid1D kg = Grid1D::window(-8.0, 8.0, 256);
    const auto jump = small_jump(kg, 0.5);
    const cplx z(0.4, 0.9);
    const BealsCoifmanOptions o{Backend::Iterative, 1e-13};
    const auto a = verify_lax(jump, 0.3, 0.2, 0.02, z, o);
    const auto b = verify_lax(jump, 0.3, 0.2, 0.01, z, o);
    CHECK(a.x_residual / b.x_residual == doctest::Approx(4.0).epsilon(0.1));
    CHECK(a.t_residual / b.t_residual == doctest::Approx(4.0).epsilon(0.1));
    CHECK(b.p2_moment_residual < 1e-3);

    const auto zero = jump_from_reflection(kg, MatrixSeries(2, 1, kg.count));
    const auto r0 = verify_lax(zero, 0.3, 0.2, 0.01, z, o);
    CHECK(r0.x_residual < 1e-14);
    CHECK(r0.t_residual < 1e-14);
}

TEST_CASE("left-normalized diagnostic") {
    RunConfig c;
    c.k_grid = Grid1D::window(-8.0, 8.0, 256);
    const std::vector<cplx> probes{{0.5, 0.7}, {-1.0, 0.4}, {0.3, 1.8}};
    SUBCASE("zero potential") {
        const PotentialField zero(c.x_grid, 2, 1, 1, MatrixSeries(2, 1, c.x_grid.count));
        const auto sd = forward_scattering(zero, c.k_grid);
        const auto rep = left_normalized_diagnostic(zero, sd, build_jump(sd), c.x_grid.nearest(0.0), probes);
        CHECK(rep.offaxis_residual < 1e-12);
        CHECK(rep.vtilde_det_residual < 1e-12);
        CHECK(rep.delta_offdiag == 0.0);
    }
    SUBCASE("box potential") {
        auto spec = parse_potential_spec("box:amp=0.6,p=2,q=1,dir=0.6;0.8i");
        spec.width = 50.0 * c.x_grid.step;
        const auto f = materialize(spec, c.x_grid);
        const double tol = 1e-3;
        const auto sd = forward_scattering(f, c.k_grid, tol);
        const BealsCoifmanOptions o{Backend::Iterative, 1e-12};
        const auto rep = left_normalized_diagnostic(f, sd, build_jump(sd), c.x_grid.nearest(0.5), probes, o);
        CHECK(rep.offaxis_residual < 10.0 * tol);
        CHECK(rep.delta_offdiag == 0.0);
    }
}

// =============================================================================
// Cauchy decay of the oscillating reflection coefficient
// =============================================================================

TEST_CASE("decay bound |C+(R e^{-2ixk})| <= |R|_H1 / sqrt(1 + x^2)") {
    const Grid1D kg = Grid1D::window(-16.0, 16.0, 1024);
    const auto R = test::series_from(kg, 2, 1, test::gaussian(0.8, direction21(), 0.5));
    for (double x : {0.0, 1.0, 2.0, 4.0, 8.0}) {
        const auto d = cauchy_decay_check(R, kg, x);
        CAPTURE(x);
        CHECK(d.lhs <= d.bound);
    }
}
