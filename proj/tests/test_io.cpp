#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "mnls/io.hpp"
#include "support.hpp"

using namespace mnls;

namespace {

bool same_bits(const MatrixSeries& a, const MatrixSeries& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.size() != b.size()) return false;
    for (std::size_t j = 0; j < a.size(); ++j)
        if ((RowMat(a[j]).array() != RowMat(b[j]).array()).any()) return false;
    return true;
}

PotentialField small_gaussian(int sigma, std::size_t count = 64) {
    RowMat dir(2, 1);
    dir << 1.0, kI;
    return test::field_from(Grid1D::window(-8.0, 8.0, count), 2, 1, sigma, test::gaussian(0.3, dir / std::sqrt(2.0)));
}

} // namespace

// =============================================================================
// Presets
// =============================================================================

TEST_CASE("presets") {
    const Grid1D g = Grid1D::window(-32.0, 32.0, 2048);

    auto zero = parse_potential_spec("gaussian:amp=0,p=2,q=3");
    const auto fz = materialize(zero, g);
    CHECK(fz.samples.max_norm() == 0.0);
    CHECK(fz.p == 2);
    CHECK(fz.q == 3);

    const auto sech = parse_potential_spec("sech:amp=2,width=0.5,center=1,p=1,q=1,sigma=-1");
    const auto fs = materialize(sech, g);
    CHECK(fs.sigma == -1);
    double err = 0.0;
    for (std::size_t j = 0; j < g.count; ++j)
        err = std::max(err, std::abs(fs.samples[j](0, 0) - 2.0 / std::cosh((g.node(j) - 1.0) / 0.5)));
    CHECK(err < 1e-15);
    CHECK(std::abs(fs.at(1.0)(0, 0) - 2.0) < 1e-15);

    const auto gp = parse_potential_spec("gp-symmetric:q1=0.2+0.1i,q0=0.3,qm1=-0.1i");
    const auto fg = materialize(gp, Grid1D::window(-20.0, 20.0, 256));
    for (std::size_t j = 0; j < fg.grid.count; ++j) {
        const RowMat m = fg.samples[j];
        CHECK((m - RowMat(m.transpose())).norm() == 0.0);
    }

    RowMat dir = RowMat::Zero(2, 2);
    dir(0, 0) = 1.0;
    dir(1, 1) = cplx(0.0, -1.0);
    auto spec = parse_potential_spec("gaussian:p=2,q=2,dir=1;0;0;-1i,amp=0.7");
    CHECK((spec.matrix() - dir).norm() == 0.0);
    CHECK(parse_potential_spec("gaussian:p=2,q=2").matrix().norm() == doctest::Approx(1.0));
}

TEST_CASE("window and parse errors") {
    CHECK_THROWS_AS((void)materialize(parse_potential_spec("gaussian:width=4"), Grid1D::window(-8.0, 8.0, 64)),
                    WindowError);
    CHECK_THROWS_AS((void)materialize(parse_potential_spec("box:width=9"), Grid1D::window(-8.0, 8.0, 64)),
                    WindowError);
    CHECK_THROWS_AS((void)parse_potential_spec("triangle:amp=1"), InputError);
    CHECK_THROWS_AS((void)parse_potential_spec("gaussian:color=red"), InputError);
    CHECK_THROWS_AS((void)parse_potential_spec("gaussian:sigma=2"), InputError);
    CHECK_THROWS_AS((void)parse_potential_spec("gaussian:p=2,q=2,dir=1;2"), InputError);
    CHECK(parse_potential_spec("gp-symmetric:p=1,q=3").p == 2);
}

TEST_CASE("complex literals and describe round trip") {
    CHECK(parse_complex("1.5") == cplx(1.5, 0.0));
    CHECK(parse_complex("-2i") == cplx(0.0, -2.0));
    CHECK(parse_complex("i") == cplx(0.0, 1.0));
    CHECK(parse_complex("0.3+0.1i") == cplx(0.3, 0.1));
    CHECK(parse_complex("1e-3-2e-1i") == cplx(1e-3, -0.2));
    CHECK(parse_complex("(0.3,0.1)") == cplx(0.3, 0.1));
    CHECK(parse_complex("1+0i") == cplx(1.0, 0.0));
    CHECK_THROWS_AS((void)parse_complex("abc"), InputError);
    CHECK_THROWS_AS((void)parse_complex(""), InputError);

    for (const char* text : {"gaussian:p=2,q=1,amp=0.5,dir=1;1i,width=2,center=-1",
                             "sech:p=1,q=1,sigma=-1,amp=2", "gp-symmetric:q1=0.2+0.1i,q0=0.3,qm1=-0.1i",
                             "box:p=2,q=2,amp=0.8,width=2"}) {
        const auto a = parse_potential_spec(text);
        const auto b = parse_potential_spec(a.describe());
        CHECK(b.describe() == a.describe());
        CHECK((b.matrix() - a.matrix()).norm() == 0.0);
        CHECK(b.amplitude == a.amplitude);
        CHECK(b.width == a.width);
    }
}

// =============================================================================
// Run configuration
// =============================================================================

TEST_CASE("run configuration") {
    const auto c = parse_run_config("p: 2\nq: 1\nsigma: -1\nx_min: -10\nx_max: 10\nx_count: 512\n"
                                    "k_min: -8\nk_max: 8\nk_count: 256\nbackend: dense\n");
    CHECK(c.p == 2);
    CHECK(c.sigma == -1);
    CHECK(c.x_grid == Grid1D::window(-10.0, 10.0, 512));
    CHECK(c.backend == Backend::Dense);
    const auto again = parse_run_config(dump_run_config(c));
    CHECK(again.x_grid == c.x_grid);
    CHECK(again.k_grid == c.k_grid);
    CHECK(again.backend == c.backend);
    CHECK(again.solver_tol == c.solver_tol);

    CHECK_THROWS_AS((void)parse_run_config("p: 2\nfrobnicate: 1\n"), InputError);
    CHECK_THROWS_AS((void)parse_run_config("backend: sparse\n"), InputError);
    CHECK_THROWS_AS((void)parse_run_config("x_count: 1\n"), InputError);
    CHECK_THROWS_AS((void)parse_run_config("[1, 2]"), InputError);
    CHECK_THROWS_AS((void)load_run_config("/nonexistent/config.yaml"), InputError);

    for (const char* name : {"defocusing_gaussian", "focusing_sech", "focusing_small_gaussian", "gp_symmetric",
                             "soliton"}) {
        CAPTURE(name);
        CHECK_NOTHROW(load_run_config(std::string(MNLS_SOURCE_DIR "/scenarios/") + name + ".yaml").validate());
    }
}

// =============================================================================
// Binary format
// =============================================================================

TEST_CASE("field and scattering round trip bitwise") {
    const auto f = small_gaussian(1);
    const std::string bytes = serialize(f);
    CHECK(peek_role(bytes) == Role::Field);
    const auto g = deserialize_field(bytes);
    CHECK(g.grid == f.grid);
    CHECK(g.sigma == f.sigma);
    CHECK(same_bits(g.samples, f.samples));

    const auto sd = forward_scattering(small_gaussian(1, 512), Grid1D::window(-3.0, 3.0, 64));
    const auto sd2 = deserialize_scattering(serialize(sd));
    CHECK(peek_role(serialize(sd)) == Role::Scattering);
    CHECK(sd2.k_grid == sd.k_grid);
    CHECK(same_bits(sd2.A, sd.A));
    CHECK(same_bits(sd2.B, sd.B));
    CHECK(same_bits(sd2.C, sd.C));
    CHECK(same_bits(sd2.D, sd.D));

    const auto jump = build_jump(sd);
    const auto j2 = deserialize_jump(serialize(jump));
    CHECK(same_bits(j2.R, jump.R));
    CHECK(same_bits(j2.v, jump.v));
    CHECK(same_bits(j2.v_plus, jump.v_plus));
    CHECK(same_bits(j2.v_minus, jump.v_minus));
}

TEST_CASE("contour and focusing jump round trip bitwise") {
    const auto f = small_gaussian(-1, 512);
    FocusingSetupOptions opt;
    opt.circle_nodes = 32;
    const auto setup = prepare_focusing(f, Grid1D::window(-3.0, 3.0, 64), opt);
    const auto& fj = setup.jump;

    const auto c2 = deserialize_contour(serialize(fj.contour));
    REQUIRE(c2.segments.size() == fj.contour.segments.size());
    CHECK(c2.s_infinity == fj.contour.s_infinity);
    CHECK(c2.intersections == fj.contour.intersections);
    CHECK(c2.incidence == fj.contour.incidence);
    CHECK(c2.node_count() == fj.contour.node_count());

    const std::string bytes = serialize(fj);
    CHECK(peek_role(bytes) == Role::FocusingJump);
    const auto g = deserialize_focusing_jump(bytes);
    CHECK(g.s_infinity == fj.s_infinity);
    CHECK(g.x0 == fj.x0);
    CHECK(g.circle == fj.circle);
    CHECK(same_bits(g.R, fj.R));
    CHECK(same_bits(g.R0, fj.R0));
    CHECK(same_bits(g.X, fj.X));
    CHECK(same_bits(g.Y, fj.Y));
    CHECK(same_bits(g.line_V, fj.line_V));
    CHECK(same_bits(g.circle_V, fj.circle_V));
    CHECK(serialize(g) == bytes);
}

TEST_CASE("stored fixture and corrupt data") {
    const std::string bytes = read_file(MNLS_SOURCE_DIR "/data/gaussian_2x1_n64.mnls");
    const auto f = deserialize_field(bytes);
    CHECK(f.p == 2);
    CHECK(f.q == 1);
    CHECK(f.grid.count == 64);
    CHECK(discrete_norms(f.samples, f.grid).l2 == doctest::Approx(0.7916167435).epsilon(1e-9));

    CHECK_THROWS_AS((void)deserialize_field(bytes.substr(0, bytes.size() - 3)), FormatError);
    CHECK_THROWS_AS((void)deserialize_field(bytes + "x"), FormatError);
    CHECK_THROWS_AS((void)deserialize_jump(bytes), FormatError);
    std::string bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS((void)peek_role(bad), FormatError);
    CHECK_THROWS_AS((void)peek_role("MN"), FormatError);

    auto spec = parse_potential_spec(MNLS_SOURCE_DIR "/data/gaussian_2x1_n64.mnls");
    CHECK(spec.kind == PotentialKind::File);
    CHECK(same_bits(materialize(spec, f.grid).samples, f.samples));
    CHECK_THROWS_AS((void)materialize(spec, Grid1D::window(-8.0, 8.0, 128)), InputError);
}

// =============================================================================
// Text outputs
// =============================================================================

TEST_CASE("reports, csv and svg") {
    Report r;
    r.set("name", std::string("gaussian"));
    r.set("error", 1.5e-3);
    r.set("steps", 1000L);
    r.set_bool("pass", true);
    const std::string s = r.str();
    CHECK(s.find("name: gaussian") != std::string::npos);
    CHECK(s.find("steps: 1000") != std::string::npos);
    CHECK(s.find("pass: true") != std::string::npos);
    CHECK(s.find("name") < s.find("error"));
    CHECK(r.items().size() == 4);

    std::ostringstream csv;
    write_field_csv(csv, small_gaussian(1));
    std::string header;
    std::getline(std::istringstream(csv.str()) >> std::ws, header);
    CHECK(std::count(header.begin(), header.end(), ',') == 4);
    const std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 65);

    const std::string svg = svg_line_chart("t", {0.0, 1.0, 2.0}, {{"a", {1.0, 2.0, 3.0}}});
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
}
