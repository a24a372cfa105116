#include "nlcomp/cli.hpp"
#include "nlcomp/error.hpp"
#include "nlcomp/fundsol.hpp"
#include "nlcomp/grid.hpp"
#include "nlcomp/kernels.hpp"
#include "nlcomp/operator.hpp"
#include "nlcomp/principles.hpp"
#include "nlcomp/solver.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace nlc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(std::span<const double> v) {
    Array out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<double> from_array(const Array& a) { return {a.data(), a.data() + a.size()}; }

Point to_point(const std::vector<double>& x) {
    if (x.empty() || x.size() > 2) throw Error(ErrorCode::Config, "points have one or two coordinates");
    return {x[0], x.size() == 2 ? x[1] : 0.0};
}

/// Levels stacked as (levels, grid points).
Array levels_array(const SpaceTimeField& u) {
    const auto rows = static_cast<py::ssize_t>(u.num_levels());
    const auto cols = static_cast<py::ssize_t>(u.grid().size());
    Array out({rows, cols});
    double* dst = out.mutable_data();
    for (std::size_t k = 0; k < u.num_levels(); ++k) {
        auto lv = u.level_values(k);
        std::copy(lv.begin(), lv.end(), dst + k * lv.size());
    }
    return out;
}

Array coordinates(const Grid& g) {
    Array out({static_cast<py::ssize_t>(g.size()), static_cast<py::ssize_t>(g.dim())});
    double* dst = out.mutable_data();
    for (std::size_t p = 0; p < g.size(); ++p) {
        const Point x = g.point(p);
        for (int i = 0; i < g.dim(); ++i) dst[p * g.dim() + i] = x[i];
    }
    return out;
}

ConvBackend backend_from(const std::string& name) {
    if (name == "fast") return ConvBackend::Fast;
    if (name == "direct") return ConvBackend::Direct;
    throw Error(ErrorCode::Config, "backend must be fast or direct");
}

Scheme scheme_from(const std::string& name) {
    if (name == "backward-euler") return Scheme::BackwardEuler;
    if (name == "crank-nicolson") return Scheme::CrankNicolson;
    throw Error(ErrorCode::Config, "scheme must be backward-euler or crank-nicolson");
}

OperatorSpec make_operator(double diffusion, int dim, const std::string& reaction, const ParamMap& params,
                           const KernelSpec& kernel) {
    if (reaction == "linear") return {heat_coefficients(diffusion, dim), make_linear(params), kernel};
    return {heat_coefficients(diffusion, dim), make_reaction(reaction, params), kernel};
}

py::dict witness(const Witness& w) {
    py::dict d;
    d["x"] = std::vector<double>{w.x[0], w.x[1]};
    d["t"] = w.t;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Nonlocal parabolic comparison toolkit";

    static py::exception<Error> error(m, "NlcompError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object exc = py::handle(error.ptr())(e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error.ptr(), exc.ptr());
        }
    });

    py::class_<KernelSpec>(m, "Kernel")
        .def_static("gaussian", &KernelSpec::gaussian, py::arg("sigma"), py::arg("dim") = 1)
        .def_static("box", &KernelSpec::box, py::arg("halfwidth"), py::arg("height"), py::arg("dim") = 1)
        .def_static("triangle", &KernelSpec::triangle, py::arg("halfwidth"), py::arg("dim") = 1)
        .def_static("exponential", &KernelSpec::exponential, py::arg("rate"), py::arg("dim") = 1)
        .def_static("cauchy", &KernelSpec::cauchy, py::arg("scale"), py::arg("dim") = 1)
        .def_static("zero", &KernelSpec::zero, py::arg("dim") = 1)
        .def_static("from_file", &KernelSpec::from_file, py::arg("path"), py::arg("dim") = 1)
        .def("__call__", [](const KernelSpec& k, const std::vector<double>& x) { return eval_kernel(k, to_point(x)); })
        .def("describe", &KernelSpec::describe)
        .def("__repr__", &KernelSpec::describe);

    m.def(
        "kernel_norms",
        [](const KernelSpec& k) {
            const MomentReport r = kernel_norms(k);
            py::dict d;
            d["l1_norm"] = r.l1_norm;
            d["second_moment"] = r.second_moment ? py::cast(*r.second_moment) : py::none();
            d["support_halfwidth"] = r.support_halfwidth ? py::cast(*r.support_halfwidth) : py::none();
            d["is_even"] = r.is_even;
            d["normalized"] = r.normalized;
            d["min_sample"] = r.min_sample;
            return d;
        },
        py::arg("kernel"), "Mass and second moment; second_moment is None when divergent.");

    py::class_<Grid>(m, "Grid")
        .def(py::init([](int dim, double halfwidth, int points, std::vector<double> far) {
                 if (far.size() != 0 && far.size() != static_cast<std::size_t>(2 * dim)) {
                     throw Error(ErrorCode::Config, "far field needs one value per face");
                 }
                 FarField ff;
                 if (!far.empty()) ff = {far[0], far[1], dim == 2 ? far[2] : 0.0, dim == 2 ? far[3] : 0.0};
                 return Grid(dim, halfwidth, points, ff);
             }),
             py::arg("dim"), py::arg("halfwidth"), py::arg("points"), py::arg("far_field") = std::vector<double>{})
        .def_property_readonly("dim", &Grid::dim)
        .def_property_readonly("halfwidth", &Grid::halfwidth)
        .def_property_readonly("points", &Grid::points)
        .def_property_readonly("spacing", &Grid::spacing)
        .def_property_readonly("size", &Grid::size)
        .def("coordinates", &coordinates, "Grid points as a (size, dim) array.");

    m.def(
        "convolve",
        [](const KernelSpec& k, const Grid& g, const Array& u, const std::string& backend) {
            const Convolver conv(k, g);
            const auto v = from_array(u);
            return to_array(conv.apply(std::span<const double>(v), backend_from(backend)));
        },
        py::arg("kernel"), py::arg("grid"), py::arg("values"), py::arg("backend") = "fast",
        "Ju on the grid with the far field extending u outside the window.");

    m.def(
        "jquotient_bound",
        [](const KernelSpec& k, const Grid& g) {
            const JQuotientCheck c = jquotient_bound_check(k, g);
            py::dict d;
            d["bound"] = c.bound;
            d["measured_max"] = c.measured_max;
            d["argmax"] = c.argmax;
            d["pass"] = c.pass;
            return d;
        },
        py::arg("kernel"), py::arg("grid"));

    m.def(
        "solve",
        [](const Grid& g, const Array& u0, const KernelSpec& k, double diffusion, const std::string& reaction,
           const ParamMap& params, double dt, double T, const std::string& scheme) {
            const OperatorSpec op = make_operator(diffusion, g.dim(), reaction, params, k);
            SolverConfig cfg{dt, T};
            cfg.scheme = scheme_from(scheme);
            const auto values = from_array(u0);
            if (values.size() != g.size()) throw Error(ErrorCode::DimMismatch, "initial data does not match the grid");
            const SpaceTimeField u = solve_ibvp(op, Field(g, values, 0.0), cfg);
            return py::make_tuple(to_array(u.times()), levels_array(u));
        },
        py::arg("grid"), py::arg("u0"), py::arg("kernel"), py::arg("diffusion") = 1.0, py::arg("reaction") = "none",
        py::arg("params") = ParamMap{}, py::arg("dt") = 1e-2, py::arg("T") = 1.0, py::arg("scheme") = "backward-euler",
        "Returns (times, levels) with levels shaped (len(times), grid.size).");

    m.def(
        "gamma",
        [](double diffusion, std::vector<double> drift, double reaction, const std::vector<double>& x, double t,
           const std::vector<double>& xi, double tau) {
            const ConstCoeffParams p{diffusion, to_point(drift), reaction, static_cast<int>(x.size())};
            return gamma_eval(p, to_point(x), t, to_point(xi), tau);
        },
        py::arg("diffusion"), py::arg("drift"), py::arg("reaction"), py::arg("x"), py::arg("t"), py::arg("xi"),
        py::arg("tau"), "Constant-coefficient fundamental solution.");

    m.def(
        "gaussian_bounds",
        [](double diffusion, std::vector<double> drift, double reaction, int dim, double horizon, std::size_t samples,
           std::uint64_t seed) {
            const ConstCoeffParams p{diffusion, to_point(drift), reaction, dim};
            const GammaBoundFit fit = gaussian_bound_check(p, derive_bound_constants(p, horizon), samples, seed);
            py::dict d;
            d["kappa"] = fit.kappa;
            d["lambda"] = fit.lambda;
            d["max_ratio_value"] = fit.max_ratio_value;
            d["max_ratio_gradient"] = fit.max_ratio_gradient;
            d["samples"] = fit.samples;
            d["pass"] = fit.pass;
            return d;
        },
        py::arg("diffusion"), py::arg("drift"), py::arg("reaction") = 0.0, py::arg("dim") = 1, py::arg("horizon") = 1.0,
        py::arg("samples") = 10000, py::arg("seed") = 20240601);

    m.def(
        "discrete_gronwall",
        [](const std::vector<double>& times, const std::vector<double>& psi, double C, double tol) {
            const GronwallVerdict v = discrete_gronwall(times, psi, C, tol);
            py::dict d;
            d["status"] = to_string(v.status);
            d["first_violation"] = v.first_violation ? py::cast(*v.first_violation) : py::none();
            d["max_premise_excess"] = v.max_premise_excess;
            d["max_conclusion_ratio"] = v.max_conclusion_ratio;
            return d;
        },
        py::arg("times"), py::arg("psi"), py::arg("C"), py::arg("tol") = 1e-10);

    m.def(
        "reproduce_counterexample",
        [](int points, double dt, std::vector<double> refinement) {
            CounterexampleConfig cfg;
            cfg.points = points;
            cfg.dt = dt;
            cfg.refinement_dts = std::move(refinement);
            const CounterexampleReport r = reproduce_counterexample(cfg);
            py::dict d;
            d["ju0_at_origin"] = r.ju0_at_origin;
            d["predictor"] = r.predictor;
            std::vector<std::pair<double, double>> rows;
            for (const auto& row : r.refinement) rows.emplace_back(row.dt, row.value);
            d["forward_differences"] = rows;
            d["max_u"] = r.max_u;
            d["max_at"] = witness(r.max_at);
            d["t_star"] = r.t_star ? py::cast(*r.t_star) : py::none();
            d["reproduced"] = r.reproduced();
            return d;
        },
        py::arg("points") = 2048, py::arg("dt") = 1e-3, py::arg("refinement") = std::vector<double>{});

    m.def(
        "invariant_region",
        [](int points, double dt, double T) {
            InvariantRegionConfig cfg;
            cfg.points = points;
            cfg.dt = dt;
            cfg.T = T;
            const InvariantRegionReport r = invariant_region_check(cfg);
            py::dict d;
            d["min"] = std::min(r.clipped_min, r.source_min);
            d["max"] = std::max(r.clipped_max, r.source_max);
            d["max_difference"] = r.max_difference;
            d["pass"] = r.pass();
            return d;
        },
        py::arg("points") = 1024, py::arg("dt") = 1e-2, py::arg("T") = 2.0);

    m.def(
        "run_scenario",
        [](const std::filesystem::path& path, std::optional<std::filesystem::path> out,
           const std::vector<std::string>& overrides) {
            std::ostringstream log;
            const int code = run_scenario(path, out, overrides, log);
            return py::make_tuple(code, log.str());
        },
        py::arg("path"), py::arg("out") = py::none(), py::arg("overrides") = std::vector<std::string>{},
        "Runs a scenario file; returns (exit code, log text).");

    m.def(
        "canonical_scenario",
        [](const std::string& text) { return serialize_scenario(parse_scenario_text(text)); }, py::arg("text"),
        "Canonical form of scenario text.");
}
