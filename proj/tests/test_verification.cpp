#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mnls/verification.hpp"
#include "support.hpp"

using namespace mnls;

namespace {

RunConfig small_config(int sigma) {
    RunConfig c;
    c.p = 2;
    c.q = 1;
    c.sigma = sigma;
    c.x_grid = Grid1D::window(-8.0, 8.0, 256);
    c.k_grid = Grid1D::window(-8.0, 8.0, 256);
    return c;
}

PotentialSpec small_spec(int sigma, double amp = 0.3) {
    auto s = parse_potential_spec("gaussian:p=2,q=1,dir=0.6;0.8i");
    s.sigma = sigma;
    s.amplitude = amp;
    return s;
}

} // namespace

TEST_CASE("strided grids and field errors") {
    const Grid1D g = Grid1D::window(-8.0, 8.0, 256);
    const Grid1D s = strided(g, 8);
    CHECK(s.count == 32);
    CHECK(s.start == g.start);
    CHECK(s.step == 8.0 * g.step);
    CHECK_THROWS_AS((void)strided(g, 3), InputError);

    const auto f = test::field_from(g, 2, 1, 1, test::gaussian(1.0, test::rank_one(2, 1)));
    const auto e0 = field_errors(f, f);
    CHECK(e0.rel_l2 == 0.0);
    CHECK(e0.rel_h1 == 0.0);
    auto scaled = f;
    for (std::size_t j = 0; j < g.count; ++j) scaled.samples[j] *= 1.01;
    const auto e1 = field_errors(scaled, f);
    CHECK(e1.rel_l2 == doctest::Approx(0.01));
    CHECK(e1.rel_h1 == doctest::Approx(0.01));
    CHECK(e1.rel_l21 == doctest::Approx(0.01));
}

TEST_CASE("perturbation direction") {
    const auto base = test::field_from(Grid1D::window(-8.0, 8.0, 256), 2, 3, 1,
                                       test::gaussian(1.0, test::rank_one(2, 3)));
    const auto phi = perturbation(base);
    CHECK(phi.p == 2);
    CHECK(phi.q == 3);
    CHECK(phi.at(1.0).norm() == doctest::Approx(std::exp(-0.5)));
    CHECK(phi.at(-2.0).norm() == doctest::Approx(2.0 * std::exp(-2.0)));
    CHECK(phi.at(0.0).norm() < 1e-15);
}

TEST_CASE("round trips on a small grid") {
    for (int sigma : {1, -1}) {
        CAPTURE(sigma);
        PipelineOptions opt;
        opt.x_stride = 4;
        opt.circle_nodes = 128;
        const auto rep = roundtrip(small_spec(sigma), small_config(sigma), 5e-3, opt);
        CHECK(rep.pass());
        CHECK(rep.check("rel_l2").value < 1e-3);
        CHECK(rep.computed.grid.count == 64);
        const auto text = rep.report().str();
        CHECK(text.find("rel_l2_tol") != std::string::npos);
        CHECK(text.find("pass: true") != std::string::npos);
    }
    auto zero = small_spec(1, 0.0);
    const auto rep = roundtrip(zero, small_config(1), 5e-3);
    CHECK(rep.computed.samples.max_norm() < 1e-14);
}

TEST_CASE("evolution crosscheck at T = 0 and T > 0") {
    for (int sigma : {1, -1}) {
        CAPTURE(sigma);
        PipelineOptions opt;
        opt.x_stride = 4;
        opt.circle_nodes = 128;
        const auto r0 = evolution_crosscheck(small_spec(sigma), small_config(sigma), 0.0, 1e-3, 1e-2, opt);
        CHECK(r0.pass());
        CHECK(r0.check("time_reversal").value < 1e-12);
        const auto r1 = evolution_crosscheck(small_spec(sigma), small_config(sigma), 0.25, 1e-3, 1e-2, opt);
        CHECK(r1.pass());
        CHECK(r1.check("rel_l2").value < 2e-3);
    }
}

TEST_CASE("continuity probe on a small grid") {
    ContinuityOptions opt;
    opt.epsilons = {1e-2, 1e-3};
    opt.times = {0.0, 0.25};
    opt.pipeline.x_stride = 4;
    const auto rep = continuity_probe(small_spec(1), small_config(1), opt);
    CHECK(rep.pass());
    bool saw_direct = false, saw_flow = false;
    for (const auto& [name, value] : rep.residuals) {
        saw_direct |= name.rfind("direct_ratio", 0) == 0;
        saw_flow |= name.rfind("flow_ratio", 0) == 0;
        CHECK(std::isfinite(value));
        CHECK(value > 0.0);
    }
    CHECK(saw_direct);
    CHECK(saw_flow);
}
