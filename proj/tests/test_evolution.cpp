#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mnls/evolution.hpp"
#include "support.hpp"

using namespace mnls;

namespace {

JumpFactorization gaussian_jump(const Grid1D& kg) {
    RowMat dir(2, 1);
    dir << 0.6, cplx(0.0, 0.8);
    return jump_from_reflection(kg, test::series_from(kg, 2, 1, test::gaussian(0.4, dir, 0.3)));
}

} // namespace

TEST_CASE("jump evolution: identity, phases, magnitudes and group law") {
    const Grid1D kg = Grid1D::window(-8.0, 8.0, 256);
    const auto jump = gaussian_jump(kg);
    const auto same = evolve_jump(jump, 0.0);
    CHECK(test::max_diff(same.v, jump.v) == 0.0);

    const double t = 0.37;
    const auto e = evolve_jump(jump, t);
    double phase_err = 0.0, diag_err = 0.0, mag_err = 0.0;
    for (std::size_t j = 0; j < kg.count; ++j) {
        const double k = kg.node(j);
        phase_err = std::max(phase_err, (RowMat(e.R[j]) - RowMat(jump.R[j]) * std::exp(-4.0 * kI * t * k * k)).norm());
        const RowMat a = e.v[j], b = jump.v[j];
        diag_err = std::max(diag_err, (a.topLeftCorner(2, 2) - b.topLeftCorner(2, 2)).norm() +
                                          (a.bottomRightCorner(1, 1) - b.bottomRightCorner(1, 1)).norm());
        mag_err = std::max(mag_err, (a.cwiseAbs() - b.cwiseAbs()).norm());
        mag_err = std::max(mag_err, std::abs((RowMat(e.v_plus[j]) - RowMat::Identity(3, 3)).norm() -
                                             (RowMat(jump.v_plus[j]) - RowMat::Identity(3, 3)).norm()));
    }
    CHECK(phase_err < 1e-15);
    CHECK(diag_err == 0.0);
    CHECK(mag_err < 1e-15);

    const auto back = evolve_jump(e, -t);
    CHECK(test::max_diff(back.R, jump.R) < 1e-15);
    CHECK(test::max_diff(back.v, jump.v) < 1e-15);
    CHECK(test::max_diff(back.v_minus, jump.v_minus) < 1e-15);

    const auto lazy = EvolvedJump(jump).advanced(0.1).advanced(0.27).materialize();
    CHECK(test::max_diff(lazy.v, e.v) < 1e-15);
}

TEST_CASE("scattering data evolution") {
    const Grid1D kg = Grid1D::window(-4.0, 4.0, 32);
    ScatteringData sd(kg, 1, 2, 1);
    for (std::size_t j = 0; j < kg.count; ++j) {
        RowMat S = RowMat::Zero(3, 3);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) S(r, c) = cplx(1.0 + r, 0.5 * c + 0.1 * static_cast<double>(j));
        sd.set_S(j, S);
    }
    const double t = 0.8;
    const auto e = evolve_scattering(sd, t);
    for (std::size_t j = 0; j < kg.count; ++j) {
        const double k = kg.node(j);
        CHECK((RowMat(e.A[j]) - RowMat(sd.A[j])).norm() == 0.0);
        CHECK((RowMat(e.D[j]) - RowMat(sd.D[j])).norm() == 0.0);
        CHECK((RowMat(e.B[j]) - RowMat(sd.B[j]) * std::exp(-4.0 * kI * t * k * k)).norm() < 1e-14);
        CHECK((RowMat(e.C[j]) - RowMat(sd.C[j]) * std::exp(4.0 * kI * t * k * k)).norm() < 1e-14);
    }
}

TEST_CASE("time continuity of the evolved jump") {
    const Grid1D kg = Grid1D::window(-8.0, 8.0, 256);
    const auto jump = gaussian_jump(kg);
    const auto same = time_continuity_probe(jump, 0.2, 0.2, 2.0);
    CHECK(same.bulk == 0.0);
    CHECK(same.tail == 0.0);

    std::vector<double> constants;
    for (double dt : {1e-2, 5e-3, 2.5e-3}) {
        const auto r = time_continuity_probe(jump, 0.2, 0.2 + dt, 2.0);
        CHECK(r.diagonal_l21 == 0.0);
        CHECK(std::isfinite(r.bulk_constant));
        constants.push_back(r.bulk_constant);
    }
    // Residual linear in |t1 - t2|: the fitted constant settles.
    CHECK(std::abs(constants[2] - constants[1]) < 0.05 * constants[2]);
}
