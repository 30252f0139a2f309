// =============================================================================
// Python bindings: fields and scattering data cross as complex numpy arrays of
// shape (count, rows, cols); grids are (start, step, count) triples.
// =============================================================================

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mnls/defocusing.hpp"
#include "mnls/evolution.hpp"
#include "mnls/io.hpp"
#include "mnls/pde.hpp"
#include "mnls/scattering.hpp"
#include "mnls/verification.hpp"

namespace py = pybind11;
using namespace mnls;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

CArray to_array(const MatrixSeries& s) {
    CArray a({static_cast<py::ssize_t>(s.size()), static_cast<py::ssize_t>(s.rows()), static_cast<py::ssize_t>(s.cols())});
    auto v = a.mutable_unchecked<3>();
    for (std::size_t j = 0; j < s.size(); ++j)
        for (int r = 0; r < s.rows(); ++r)
            for (int c = 0; c < s.cols(); ++c) v(static_cast<py::ssize_t>(j), r, c) = s[j](r, c);
    return a;
}

MatrixSeries from_array(const CArray& a) {
    if (a.ndim() != 3) throw InputError("expected an array of shape (count, rows, cols)");
    auto v = a.unchecked<3>();
    MatrixSeries s(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)), static_cast<std::size_t>(a.shape(0)));
    for (py::ssize_t j = 0; j < a.shape(0); ++j)
        for (py::ssize_t r = 0; r < a.shape(1); ++r)
            for (py::ssize_t c = 0; c < a.shape(2); ++c) s[static_cast<std::size_t>(j)](r, c) = v(j, r, c);
    return s;
}

Grid1D grid_of(const std::tuple<double, double, std::size_t>& g) {
    return Grid1D(std::get<0>(g), std::get<1>(g), std::get<2>(g));
}

py::tuple grid_tuple(const Grid1D& g) { return py::make_tuple(g.start, g.step, g.count); }

PotentialField field_of(const CArray& q, const std::tuple<double, double, std::size_t>& grid, int sigma) {
    MatrixSeries s = from_array(q);
    const Grid1D g = grid_of(grid);
    if (s.size() != g.count) throw InputError("sample count differs from the grid count");
    return PotentialField(g, s.rows(), s.cols(), sigma, std::move(s));
}

py::dict scattering_dict(const ScatteringData& sd) {
    py::dict d;
    d["k_grid"] = grid_tuple(sd.k_grid);
    d["sigma"] = sd.sigma;
    d["A"] = to_array(sd.A);
    d["B"] = to_array(sd.B);
    d["C"] = to_array(sd.C);
    d["D"] = to_array(sd.D);
    d["consistency_gap"] = sd.consistency_gap;
    return d;
}

py::dict report_dict(const ComparisonReport& rep) {
    py::dict d;
    const Report r = rep.report();
    for (const auto& [k, v] : r.items()) d[py::str(k)] = v;
    for (const auto& c : rep.checks) d[py::str(c.name)] = c.value;
    d["pass"] = rep.pass();
    d["computed"] = to_array(rep.computed.samples);
    d["reference"] = to_array(rep.reference.samples);
    d["x_grid"] = grid_tuple(rep.computed.grid);
    return d;
}

} // namespace

PYBIND11_MODULE(_mnls, m) {
    m.doc() = "Direct and inverse scattering for the matrix NLS equation";

    static py::exception<Error> error(m, "MnlsError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Input) py::set_error(PyExc_ValueError, e.what());
            else py::set_error(error, e.what());
        }
    });

    m.def("window", [](double lo, double hi, std::size_t n) { return grid_tuple(Grid1D::window(lo, hi, n)); },
          py::arg("lo"), py::arg("hi"), py::arg("count"), "Grid triple (start, step, count) covering [lo, hi).");

    m.def("parse_complex", &parse_complex, py::arg("text"));

    m.def(
        "materialize",
        [](const std::string& spec, const std::tuple<double, double, std::size_t>& grid) {
            const auto f = materialize(parse_potential_spec(spec), grid_of(grid));
            return py::make_tuple(to_array(f.samples), f.sigma);
        },
        py::arg("spec"), py::arg("x_grid"), "Samples a preset; returns (Q, sigma).");

    m.def(
        "forward",
        [](const CArray& q, const std::tuple<double, double, std::size_t>& x_grid, int sigma,
           const std::tuple<double, double, std::size_t>& k_grid, double solver_tol) {
            return scattering_dict(forward_scattering(field_of(q, x_grid, sigma), grid_of(k_grid), solver_tol));
        },
        py::arg("q"), py::arg("x_grid"), py::arg("sigma"), py::arg("k_grid"), py::arg("solver_tol") = 1e-8,
        "Scattering blocks A, B, C, D on the k-grid.");

    m.def(
        "reflection",
        [](const CArray& q, const std::tuple<double, double, std::size_t>& x_grid, int sigma,
           const std::tuple<double, double, std::size_t>& k_grid, double solver_tol) {
            const auto sd = forward_scattering(field_of(q, x_grid, sigma), grid_of(k_grid), solver_tol);
            return to_array(reflection_coefficient(sd).R);
        },
        py::arg("q"), py::arg("x_grid"), py::arg("sigma"), py::arg("k_grid"), py::arg("solver_tol") = 1e-8,
        "R = B D^-1 on the k-grid.");

    m.def(
        "reconstruct",
        [](const CArray& r, const std::tuple<double, double, std::size_t>& k_grid,
           const std::tuple<double, double, std::size_t>& x_grid, double t, double tol) {
            auto jump = jump_from_reflection(grid_of(k_grid), from_array(r), 1);
            if (t != 0.0) jump = evolve_jump(jump, t);
            BealsCoifmanOptions o;
            o.tol = tol;
            return to_array(reconstruct_potential(jump, grid_of(x_grid), o).samples);
        },
        py::arg("r"), py::arg("k_grid"), py::arg("x_grid"), py::arg("t") = 0.0, py::arg("tol") = 1e-10,
        "Defocusing inverse map from reflection data, optionally evolved to time t.");

    m.def(
        "propagate",
        [](const CArray& q, const std::tuple<double, double, std::size_t>& x_grid, int sigma, double T, double dt) {
            ConservationLog log;
            const auto out = propagate(field_of(q, x_grid, sigma), T, dt, &log);
            return py::make_tuple(to_array(out.samples), log.max_drift);
        },
        py::arg("q"), py::arg("x_grid"), py::arg("sigma"), py::arg("T"), py::arg("dt"),
        "Split-step solution at time T; returns (Q, max relative L2 drift).");

    m.def(
        "roundtrip",
        [](const std::string& spec, const std::string& config, double tol, std::size_t stride, double rh_tol) {
            PipelineOptions o;
            o.x_stride = stride;
            o.rh_tol = rh_tol;
            RunConfig c = load_run_config(config);
            auto s = parse_potential_spec(spec);
            s.p = c.p;
            s.q = c.q;
            c.sigma = s.sigma;
            return report_dict(roundtrip(s, c, tol, o));
        },
        py::arg("spec"), py::arg("config"), py::arg("tol") = 5e-3, py::arg("stride") = 1, py::arg("rh_tol") = 1e-10,
        "Forward, jump and inverse map; report with the reconstruction error.");

    m.def(
        "read_field",
        [](const std::string& path) {
            const auto f = deserialize_field(read_file(path));
            return py::make_tuple(to_array(f.samples), grid_tuple(f.grid), f.sigma);
        },
        py::arg("path"), "Reads a binary field file; returns (Q, x_grid, sigma).");

    m.def(
        "write_field",
        [](const std::string& path, const CArray& q, const std::tuple<double, double, std::size_t>& x_grid, int sigma) {
            write_file(path, serialize(field_of(q, x_grid, sigma)));
        },
        py::arg("path"), py::arg("q"), py::arg("x_grid"), py::arg("sigma"));
}
