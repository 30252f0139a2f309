#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_odeiv2.h>
#include <gsl/gsl_sf_gamma.h>

#include "mnls/io.hpp"
#include "mnls/scattering.hpp"
#include "support.hpp"

using namespace mnls;

namespace {

/// e^M by eigendecomposition (independent of the Pade-based exponential used by the solver).
RowMat expm_eig(const RowMat& M) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M);
    const Eigen::MatrixXcd& V = es.eigenvectors();
    return RowMat(V * es.eigenvalues().array().exp().matrix().asDiagonal() * V.inverse());
}

RowMat free_phase(int p, int q, double k, double x) {
    const RowMat s3 = sigma3(p, q);
    RowMat d = RowMat::Zero(p + q, p + q);
    for (int i = 0; i < p + q; ++i) d(i, i) = std::exp(-kI * k * x * s3(i, i).real());
    return d;
}

cplx lngamma(cplx z) {
    gsl_sf_result r, a;
    gsl_sf_lngamma_complex_e(z.real(), z.imag(), &r, &a);
    return {r.val, a.val};
}

/// Scalar A sech(x): A(k) = G(1/2 - ik)^2 / (G(1/2 - ik + a) G(1/2 - ik - a)) with a = A (focusing)
/// or iA (defocusing); B(k) = sin(pi A) / cosh(pi k) resp. sinh(pi A) / cosh(pi k).
cplx sech_a(double amp, int sigma, double k) {
    const cplx z(0.5, -k);
    const cplx a = sigma == -1 ? cplx(amp, 0.0) : cplx(0.0, amp);
    return std::exp(2.0 * lngamma(z) - lngamma(z + a) - lngamma(z - a));
}

double sech_b(double amp, int sigma, double k) {
    return (sigma == -1 ? std::sin(kPi * amp) : std::sinh(kPi * amp)) / std::cosh(kPi * k);
}

} // namespace

// =============================================================================
// Jost functions
// =============================================================================

TEST_CASE("zero potential: m = I and S = I") {
    const Grid1D g = Grid1D::window(-4.0, 4.0, 64);
    const Grid1D kg = Grid1D::window(-3.0, 3.0, 16);
    const PotentialField zero(g, 2, 1, 1, MatrixSeries(2, 1, g.count));
    const auto J = solve_jost(zero, kg, {8, true});
    for (std::size_t s = 0; s < J.stored.size(); ++s)
        for (std::size_t j = 0; j < kg.count; ++j) {
            CHECK((RowMat(J.m_minus[s][j]) - RowMat::Identity(3, 3)).norm() < 1e-12);
            CHECK((RowMat(J.m_plus[s][j]) - RowMat::Identity(3, 3)).norm() < 1e-12);
        }
    const auto sd = scattering_matrix(J, zero);
    for (std::size_t j = 0; j < kg.count; ++j) CHECK((sd.S(j).entries() - RowMat::Identity(3, 3)).norm() < 1e-12);
}

TEST_CASE("Jost invariants on a Gaussian: unit determinant and boundary values") {
    const Grid1D g = Grid1D::window(-12.0, 12.0, 512);
    const Grid1D kg = Grid1D::window(-8.0, 8.0, 64);
    RowMat dir(2, 2);
    dir << 0.6, cplx(0.0, 0.8), 0.0, 1.0;
    for (int sigma : {1, -1}) {
        const auto f = test::field_from(g, 2, 2, sigma, test::gaussian(0.7, dir));
        const auto J = solve_jost(f, kg, {32, true});
        double det_err = 0.0;
        for (std::size_t s = 0; s < J.stored.size(); ++s)
            for (std::size_t j = 0; j < kg.count; ++j) {
                det_err = std::max(det_err, std::abs(RowMat(J.m_minus[s][j]).determinant() - 1.0));
                det_err = std::max(det_err, std::abs(RowMat(J.m_plus[s][j]).determinant() - 1.0));
            }
        CHECK(det_err < 1e-6);
        const std::size_t last = J.stored.size() - 1;
        for (std::size_t j = 0; j < kg.count; ++j) {
            CHECK((RowMat(J.m_minus[0][j]) - RowMat::Identity(4, 4)).norm() < 1e-8);
            CHECK((RowMat(J.m_plus[last][j]) - RowMat::Identity(4, 4)).norm() < 1e-8);
        }
    }
}

namespace {

struct SechOde {
    double amp;
    int sigma;
    double k;
};

int sech_rhs(double x, const double y[], double dydx[], void* params) {
    const auto* s = static_cast<SechOde*>(params);
    const cplx Q = s->amp / std::cosh(x);
    for (int c = 0; c < 2; ++c) {
        const cplx a(y[4 * c], y[4 * c + 1]);
        const cplx b(y[4 * c + 2], y[4 * c + 3]);
        const cplx da = -kI * s->k * a + Q * b;
        const cplx db = kI * s->k * b + static_cast<double>(s->sigma) * std::conj(Q) * a;
        dydx[4 * c] = da.real();
        dydx[4 * c + 1] = da.imag();
        dydx[4 * c + 2] = db.real();
        dydx[4 * c + 3] = db.imag();
    }
    return GSL_SUCCESS;
}

} // namespace

TEST_CASE("2 sech: m- columns against an adaptive ODE integrator") {
    const Grid1D g = Grid1D::window(-32.0, 32.0, 2048);
    const Grid1D kg = Grid1D::window(-4.0, 4.0, 8);
    const auto f = test::field_from(g, 1, 1, -1, [](double x) { return RowMat::Constant(1, 1, 2.0 / std::cosh(x)); });
    const auto J = solve_jost(f, kg, {128, false});
    const std::size_t node = g.nearest(0.0);
    const std::size_t slot = J.slot(node);
    double err = 0.0;
    for (std::size_t ik = 0; ik < kg.count; ++ik) {
        SechOde par{2.0, -1, kg.node(ik)};
        gsl_odeiv2_system sys{sech_rhs, nullptr, 8, &par};
        gsl_odeiv2_driver* d = gsl_odeiv2_driver_alloc_y_new(&sys, gsl_odeiv2_step_rk8pd, 1e-3, 1e-13, 1e-13);
        // psi-(x_min) = e^{-i k sigma3 x_min}
        const double x0 = g.node(0);
        double y[8] = {};
        const cplx e1 = std::exp(-kI * par.k * x0), e2 = std::exp(kI * par.k * x0);
        y[0] = e1.real();
        y[1] = e1.imag();
        y[6] = e2.real();
        y[7] = e2.imag();
        double x = x0;
        REQUIRE(gsl_odeiv2_driver_apply(d, &x, g.node(node), y) == GSL_SUCCESS);
        gsl_odeiv2_driver_free(d);
        RowMat psi(2, 2);
        psi << cplx(y[0], y[1]), cplx(y[4], y[5]), cplx(y[2], y[3]), cplx(y[6], y[7]);
        const RowMat m = psi * free_phase(1, 1, par.k, g.node(node)).inverse();
        err = std::max(err, (m - RowMat(J.m_minus[slot][ik])).norm());
    }
    CHECK(err < 1e-6);
}

// =============================================================================
// Scattering matrix
// =============================================================================

TEST_CASE("box potential against the matrix exponential oracle") {
    // Edges on grid nodes. The integral-form cross-check is a trapezoid rule, second order
    // across the jumps, so it is run with a matching tolerance.
    RunConfig c;
    const double w = 50.0 * c.x_grid.step;
    for (int sigma : {1, -1}) {
        auto spec = parse_potential_spec("box:amp=0.8,p=2,q=1,dir=0.6;0.8i");
        spec.width = w;
        spec.sigma = sigma;
        const auto f = materialize(spec, c.x_grid);
        CHECK_THROWS_AS((void)forward_scattering(f, c.k_grid, 1e-8), ConsistencyError);
        const auto sd = forward_scattering(f, c.k_grid, 1e-3);
        const RowMat U = assemble_U(RowMat(0.8 * spec.matrix()), sigma).entries();
        const RowMat s3 = sigma3(2, 1);
        double err = 0.0;
        for (std::size_t j = 0; j < c.k_grid.count; ++j) {
            const double k = c.k_grid.node(j);
            const RowMat S = free_phase(2, 1, k, -w) * expm_eig(2.0 * w * (-kI * k * s3 + U)) * free_phase(2, 1, k, -w);
            err = std::max(err, (sd.S(j).entries() - S).norm() / S.norm());
        }
        CHECK(err < 1e-8);
        const auto R = reflection_coefficient(sd).R;
        double rerr = 0.0;
        for (std::size_t j = 0; j < c.k_grid.count; ++j) {
            const double k = c.k_grid.node(j);
            const RowMat S = free_phase(2, 1, k, -w) * expm_eig(2.0 * w * (-kI * k * s3 + U)) * free_phase(2, 1, k, -w);
            const RowMat r = S.topRightCorner(2, 1) * S.bottomRightCorner(1, 1).inverse();
            rerr = std::max(rerr, (RowMat(R[j]) - r).norm());
        }
        CHECK(rerr < 1e-8);
    }
}

TEST_CASE("scalar sech against the Gamma-function coefficients") {
    const Grid1D g = Grid1D::window(-32.0, 32.0, 2048);
    const Grid1D kg = Grid1D::window(-15.0, 15.0, 1024);
    for (auto [amp, sigma] : {std::pair{2.0, -1}, std::pair{0.7, -1}, std::pair{0.7, 1}}) {
        CAPTURE(amp);
        CAPTURE(sigma);
        const auto f = test::field_from(g, 1, 1, sigma, [amp](double x) { return RowMat::Constant(1, 1, amp / std::cosh(x)); });
        const auto sd = forward_scattering(f, kg);
        double ea = 0.0, eb = 0.0;
        for (std::size_t j = 0; j < kg.count; ++j) {
            const double k = kg.node(j);
            ea = std::max(ea, std::abs(sd.A[j](0, 0) - sech_a(amp, sigma, k)));
            eb = std::max(eb, std::abs(sd.B[j](0, 0) - sech_b(amp, sigma, k)));
        }
        CHECK(ea < 1e-6);
        CHECK(eb < 1e-6);
    }
}

TEST_CASE("first Born approximation for a small Gaussian") {
    const Grid1D g = Grid1D::window(-20.0, 20.0, 1024);
    const Grid1D kg = Grid1D::window(-6.0, 6.0, 64);
    RowMat dir(2, 1);
    dir << 0.6, cplx(0.0, 0.8);
    for (double eps : {1e-2, 1e-3}) {
        const auto f = test::field_from(g, 2, 1, 1, test::gaussian(eps, dir));
        const auto sd = forward_scattering(f, kg);
        // B(k) = eps int e^{-y^2} e^{2iyk} dy E = eps sqrt(pi) e^{-k^2} E
        double err = 0.0;
        for (std::size_t j = 0; j < kg.count; ++j) {
            const double k = kg.node(j);
            err = std::max(err, (RowMat(sd.B[j]) - eps * std::sqrt(kPi) * std::exp(-k * k) * dir).norm());
        }
        CHECK(err < 2.0 * eps * eps * eps);
    }
}

TEST_CASE("symmetries, reflection identities and error signalling") {
    const Grid1D g = Grid1D::window(-20.0, 20.0, 1024);
    const Grid1D kg = Grid1D::window(-15.0, 15.0, 256);
    RowMat dir(2, 1);
    dir << 0.6, cplx(0.0, 0.8);
    for (int sigma : {1, -1}) {
        const auto f = test::field_from(g, 2, 1, sigma, test::gaussian(0.5, dir));
        const auto sd = forward_scattering(f, kg);
        const auto sym = symmetry_report(sd);
        CHECK(sym.det_residual < 1e-8);
        CHECK(sym.symmetry_residual < 1e-8);
        if (sigma == 1) {
            CHECK(sym.modulus_residual < 1e-8);
            const auto R = reflection_coefficient(sd).R;
            double err = 0.0;
            for (std::size_t j = 0; j < kg.count; ++j) {
                const RowMat Ai = RowMat(sd.A[j]).inverse();
                const RowMat lhs = RowMat::Identity(2, 2) - RowMat(R[j]) * RowMat(R[j]).adjoint();
                err = std::max(err, (lhs - RowMat(Ai.adjoint() * Ai)).norm());
            }
            CHECK(err < 1e-8);
        }
    }
    const PotentialField zero(g, 2, 1, 1, MatrixSeries(2, 1, g.count));
    const auto R0 = reflection_coefficient(forward_scattering(zero, kg)).R;
    CHECK(R0.max_norm() == 0.0);

    const Grid1D coarse = Grid1D::window(-20.0, 20.0, 128);
    const auto fc = test::field_from(coarse, 2, 1, 1, test::gaussian(0.5, dir));
    CHECK_THROWS_AS((void)forward_scattering(fc, kg), ResolutionError);
}

// =============================================================================
// Lipschitz probe
// =============================================================================

TEST_CASE("Lipschitz probe of the direct map") {
    const Grid1D g = Grid1D::window(-16.0, 16.0, 512);
    const Grid1D kg = Grid1D::window(-8.0, 8.0, 128);
    const RowMat dir = test::rank_one(2, 1);
    const auto base = test::field_from(g, 2, 1, 1, test::gaussian(1e-4, dir));
    CHECK(lipschitz_probe({{base, base}}, kg).max_ratio == 0.0);

    // Born regime: R = F[Q] with F the Fourier map Q -> int Q e^{2iyk} dy.
    const auto born = test::series_from(kg, 2, 1, [&](double k) { return RowMat(std::sqrt(kPi) * std::exp(-k * k) * dir); });
    const auto gauss = test::series_from(g, 2, 1, [&](double x) { return RowMat(std::exp(-x * x) * dir); });
    const double kernel = discrete_norms(born, kg).h11 / discrete_norms(gauss, g).h11;

    std::vector<double> ratios;
    for (double eps : {1e-3, 1e-4}) {
        const auto a = test::field_from(g, 2, 1, 1, test::gaussian(eps, dir));
        const auto b = test::field_from(g, 2, 1, 1, test::gaussian(2.0 * eps, dir));
        ratios.push_back(lipschitz_probe({{a, b}}, kg).max_ratio);
    }
    CHECK(ratios[0] == doctest::Approx(kernel).epsilon(1e-2));
    CHECK(ratios[1] == doctest::Approx(kernel).epsilon(1e-3));
    CHECK(std::abs(ratios[0] - ratios[1]) < 1e-2 * ratios[1]);
}
