#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mnls/io.hpp"
#include "mnls/pde.hpp"
#include "support.hpp"

using namespace mnls;

namespace {

/// Rank-one E = u v† with unit u, v, so that E E† E = E.
RowMat soliton_direction() {
    Eigen::Vector2cd u(1.0, kI), v(1.0, 1.0);
    u /= u.norm();
    v /= v.norm();
    return u * v.adjoint();
}

PotentialField soliton(const Grid1D& g, double A, double t) {
    const RowMat E = soliton_direction();
    return test::field_from(g, 2, 2, -1, [=](double x) { return RowMat(A / std::cosh(A * x) * std::exp(kI * A * A * t) * E); });
}

double max_error(const PotentialField& a, const PotentialField& b) { return test::max_diff(a.samples, b.samples); }

RowMat rk4_nonlinear(RowMat Q, double T, int sigma, int steps) {
    auto f = [sigma](const RowMat& q) { return RowMat(-2.0 * kI * static_cast<double>(sigma) * q * q.adjoint() * q); };
    const double h = T / steps;
    for (int s = 0; s < steps; ++s) {
        const RowMat k1 = f(Q);
        const RowMat k2 = f(Q + 0.5 * h * k1);
        const RowMat k3 = f(Q + 0.5 * h * k2);
        const RowMat k4 = f(Q + h * k3);
        Q += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return Q;
}

} // namespace

// =============================================================================
// Substeps
// =============================================================================

TEST_CASE("nonlinear substep") {
    CHECK(nonlinear_step(RowMat::Zero(2, 3), 0.4, 1).norm() == 0.0);
    RowMat Q(2, 3);
    Q << cplx(0.3, -0.4), cplx(0.5, 0.1), cplx(-0.2, 0.0), cplx(0.0, 0.7), cplx(0.1, 0.1), cplx(0.6, -0.3);
    CHECK((nonlinear_step(Q, 0.0, -1) - Q).norm() < 1e-15);

    RowMat one = RowMat::Constant(1, 1, 1.0);
    CHECK(std::abs(nonlinear_step(one, kPi, -1)(0, 0) - 1.0) < 1e-14);

    for (int sigma : {1, -1}) {
        const RowMat exact = nonlinear_step(Q, 0.3, sigma);
        CHECK((exact - rk4_nonlinear(Q, 0.3, sigma, 2000)).norm() < 1e-12);
        CHECK((exact * exact.adjoint() - Q * Q.adjoint()).norm() < 1e-14);
    }
}

TEST_CASE("linear substep") {
    const Grid1D g = Grid1D::window(-10.0, 10.0, 256);
    const double w = 2.0 * kPi * 7.0 / g.length();
    const auto mode = test::field_from(g, 1, 2, 1, [w](double x) { return RowMat::Constant(1, 2, std::exp(kI * w * x)); });
    const double dt = 0.05;
    const auto out = linear_step(mode, dt);
    double err = 0.0;
    for (std::size_t j = 0; j < g.count; ++j)
        err = std::max(err, (RowMat(out.samples[j]) - RowMat(mode.samples[j]) * std::exp(-kI * w * w * dt)).norm());
    CHECK(err < 1e-12);
    CHECK(max_error(linear_step(mode, 0.0), mode) < 1e-14);
}

TEST_CASE("free Gaussian spreads as the closed form") {
    // i psi_t + psi_xx = 0, psi(x, 0) = e^{-x^2/a}: psi(x, t) = (1 + 4it/a)^{-1/2} e^{-x^2/(a + 4it)}.
    const Grid1D g = Grid1D::window(-40.0, 40.0, 1024);
    const double a = 2.0, t = 1.5;
    const auto f0 = test::field_from(g, 1, 1, 1, [a](double x) { return RowMat::Constant(1, 1, std::exp(-x * x / a)); });
    const auto ft = linear_step(f0, t);
    double err = 0.0;
    for (std::size_t j = 0; j < g.count; ++j) {
        const double x = g.node(j);
        const cplx exact = std::exp(-x * x / (a + 4.0 * kI * t)) / std::sqrt(1.0 + 4.0 * kI * t / a);
        err = std::max(err, std::abs(ft.samples[j](0, 0) - exact));
    }
    CHECK(err < 1e-12);
}

// =============================================================================
// Strang splitting
// =============================================================================

TEST_CASE("matrix soliton: accuracy, order and conservation") {
    const Grid1D g = Grid1D::window(-32.0, 32.0, 1024);
    const auto q0 = soliton(g, 1.0, 0.0);
    const auto exact = soliton(g, 1.0, 1.0);
    CHECK(max_error(propagate(q0, 0.0, 1e-3), q0) == 0.0);

    ConservationLog log;
    const double e1 = max_error(propagate(q0, 1.0, 1e-3, &log), exact);
    const double e2 = max_error(propagate(q0, 1.0, 5e-4), exact);
    CHECK(e1 < 1e-6);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.125));
    CHECK(log.steps == 1000);
    CHECK(log.max_drift < 1e-8);
    CHECK_FALSE(log.stability_warning);
}

TEST_CASE("L2 conservation for both signs") {
    const Grid1D g = Grid1D::window(-20.0, 20.0, 512);
    RowMat dir(2, 1);
    dir << 0.6, cplx(0.0, 0.8);
    for (int sigma : {1, -1}) {
        const auto f = test::field_from(g, 2, 1, sigma, test::gaussian(1.2, dir));
        ConservationLog log;
        (void)propagate(f, 1.0, 1e-3, &log);
        CHECK(log.max_drift < 1e-8);
        CHECK(std::abs(log.l2_final - log.l2_initial) < 1e-8 * log.l2_initial);
    }
}

TEST_CASE("symmetric 2x2 data stay symmetric") {
    RunConfig c;
    c.p = c.q = 2;
    for (int sigma : {1, -1}) {
        auto spec = parse_potential_spec("gp-symmetric:q1=0.1,q0=0.3,qm1=0.1");
        spec.sigma = sigma;
        spec.amplitude = 1.0;
        const auto f = materialize(spec, c.x_grid);
        const auto out = propagate(f, 0.5, 1e-3);
        double asym = 0.0;
        for (std::size_t j = 0; j < out.grid.count; ++j) {
            const RowMat m = out.samples[j];
            asym = std::max(asym, (m - RowMat(m.transpose())).norm());
        }
        CHECK(asym < 1e-10);
    }
}

TEST_CASE("snapshots and argument checks") {
    const Grid1D g = Grid1D::window(-32.0, 32.0, 1024);
    const auto q0 = soliton(g, 1.0, 0.0);
    const auto snaps = propagate_snapshots(q0, {0.0, 0.25, 0.5}, 1e-3);
    REQUIRE(snaps.size() == 3);
    CHECK(max_error(snaps[0], q0) == 0.0);
    CHECK(max_error(snaps[2], propagate(q0, 0.5, 1e-3)) < 1e-12);
    CHECK_THROWS_AS((void)propagate(q0, 0.5, 0.3), InputError);
    CHECK_THROWS_AS((void)propagate(q0, 0.5, 0.0), InputError);
    CHECK_THROWS_AS((void)propagate_snapshots(q0, {0.5, 0.25}, 1e-3), InputError);
    const auto back = propagate(propagate(q0, 0.2, 1e-3), -0.2, 1e-3);
    CHECK(max_error(back, q0) < 1e-12);
}
