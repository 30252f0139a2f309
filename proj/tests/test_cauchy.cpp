#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_dawson.h>

#include <random>

#include "mnls/cauchy.hpp"
#include "mnls/fft.hpp"
#include "mnls/gmres.hpp"

using namespace mnls;

namespace {

Eigen::VectorXcd random_vector(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> d;
    Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
    for (auto& z : v) z = cplx(d(rng), d(rng));
    return v;
}

/// Band-limited test vector: random modes with |m| < n/4.
Eigen::VectorXcd band_limited(std::size_t n, unsigned seed) {
    std::vector<cplx> spec(n, 0.0);
    const auto r = random_vector(n, seed);
    for (std::size_t m = 0; m < n; ++m)
        if (std::abs(fft_index(m, n)) < static_cast<long>(n / 4)) spec[m] = r[static_cast<Eigen::Index>(m)];
    const auto v = ifft(spec);
    return Eigen::Map<const Eigen::VectorXcd>(v.data(), static_cast<Eigen::Index>(n));
}

} // namespace

TEST_CASE("fft matches the direct DFT and inverts") {
    const std::size_t n = 12;
    const auto v = random_vector(n, 1);
    std::vector<cplx> in(v.data(), v.data() + n);
    const auto out = fft_forward(in);
    double err = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += in[j] * std::exp(-2.0 * kPi * kI * static_cast<double>(m * j) / static_cast<double>(n));
        err = std::max(err, std::abs(acc - out[m]));
    }
    CHECK(err < 1e-12);
    const auto back = ifft(out);
    for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(back[j] - in[j]) < 1e-14);
    CHECK(fft_index(0, 8) == 0);
    CHECK(fft_index(3, 8) == 3);
    CHECK(fft_index(4, 8) == -4);
    CHECK(fft_index(7, 8) == -1);
}

// =============================================================================
// Periodic projectors
// =============================================================================

TEST_CASE("periodic projector: positive spectrum, Plemelj and idempotence") {
    const std::size_t n = 256;
    SUBCASE("positive spectrum is kept by C+ and removed by C-") {
        std::vector<cplx> f(n);
        for (std::size_t j = 0; j < n; ++j)
            f[j] = std::exp(2.0 * kPi * kI * 5.0 * static_cast<double>(j) / static_cast<double>(n)) +
                   0.5 * std::exp(2.0 * kPi * kI * 17.0 * static_cast<double>(j) / static_cast<double>(n));
        std::vector<cplx> plus(n), minus(n);
        cauchy_periodic(f.data(), plus.data(), n, Side::Plus);
        cauchy_periodic(f.data(), minus.data(), n, Side::Minus);
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(std::abs(plus[j] - f[j]) < 1e-13);
            CHECK(std::abs(minus[j]) < 1e-13);
        }
    }
    SUBCASE("identities on band-limited samples") {
        const auto f = band_limited(n, 7);
        const auto p = cauchy_projection(f, Side::Plus);
        const auto m = cauchy_projection(f, Side::Minus);
        CHECK((p - m - f).norm() < 1e-10);
        CHECK((cauchy_projection(p, Side::Plus) - p).norm() < 1e-10);
        CHECK((cauchy_projection(m, Side::Minus) + m).norm() < 1e-10);
        CHECK(cauchy_projection(p, Side::Minus).norm() < 1e-10);
    }
}

// =============================================================================
// Line transform
// =============================================================================

TEST_CASE("line Cauchy transform: Plemelj and the Gaussian closed form") {
    const Grid1D g = Grid1D::window(-20.0, 20.0, 1024);
    const LineCauchy c(g.count);
    const auto r = random_vector(g.count, 3);
    CHECK((c.apply(r, Side::Plus) - c.apply(r, Side::Minus) - r).norm() < 1e-10 * r.norm());

    // C+ e^{-k^2} = e^{-k^2}/2 + (i/sqrt(pi)) F(k), F the Dawson integral.
    Eigen::VectorXcd f(static_cast<Eigen::Index>(g.count));
    for (std::size_t j = 0; j < g.count; ++j) f[static_cast<Eigen::Index>(j)] = std::exp(-g.node(j) * g.node(j));
    const auto plus = c.apply(f, Side::Plus);
    double err = 0.0;
    for (std::size_t j = 0; j < g.count; ++j) {
        const double k = g.node(j);
        if (std::abs(k) > 10.0) continue;
        const cplx exact = 0.5 * std::exp(-k * k) + kI * gsl_sf_dawson(k) / std::sqrt(kPi);
        err = std::max(err, std::abs(plus[static_cast<Eigen::Index>(j)] - exact));
    }
    CHECK(err < 1e-10);
}

TEST_CASE("off-axis Cauchy weights against adaptive quadrature") {
    const Grid1D g = Grid1D::window(-20.0, 20.0, 1024);
    const cplx z(0.3, 0.5);
    const auto w = line_cauchy_weights(g, z);
    cplx approx = 0.0;
    for (std::size_t j = 0; j < g.count; ++j) approx += w[static_cast<Eigen::Index>(j)] * std::exp(-g.node(j) * g.node(j));

    struct Params {
        cplx z;
        bool imag;
    };
    auto integrand = [](double s, void* vp) {
        const auto* p = static_cast<Params*>(vp);
        const cplx v = std::exp(-s * s) / (s - p->z);
        return p->imag ? v.imag() : v.real();
    };
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
    double re = 0.0, im = 0.0, err = 0.0;
    Params pr{z, false}, pi{z, true};
    gsl_function fr{integrand, &pr}, fi{integrand, &pi};
    gsl_integration_qagi(&fr, 1e-14, 1e-13, 2000, ws, &re, &err);
    gsl_integration_qagi(&fi, 1e-14, 1e-13, 2000, ws, &im, &err);
    gsl_integration_workspace_free(ws);
    const cplx exact = cplx(re, im) / (2.0 * kPi * kI);
    CHECK(std::abs(approx - exact) < 1e-10);
}

// =============================================================================
// GMRES
// =============================================================================

TEST_CASE("gmres solves a well-conditioned system") {
    const Eigen::Index n = 60;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n, n);
    std::mt19937 rng(11);
    std::normal_distribution<double> d;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) A(i, j) += 0.3 * cplx(d(rng), d(rng)) / std::sqrt(double(n));
    const Eigen::VectorXcd b = random_vector(static_cast<std::size_t>(n), 5);
    const auto res = gmres_solve([&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) { y = A * x; }, n, b, {}, 1e-12);
    CHECK(res.converged);
    CHECK(res.residual < 1e-11);
    CHECK((res.x - A.partialPivLu().solve(b)).norm() < 1e-9 * b.norm());
}
