// Python bindings: thin wrappers around the C++ core. Fields and estimates
// cross the boundary as numpy arrays shaped like their grids; curve tables
// come back as dicts of columns.
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <string>
#include <vector>

#include "pmt/concentration.hpp"
#include "pmt/errors.hpp"
#include "pmt/estimator.hpp"
#include "pmt/experiments.hpp"
#include "pmt/grid.hpp"
#include "pmt/io.hpp"
#include "pmt/parallel.hpp"
#include "pmt/simulate.hpp"
#include "pmt/spectral.hpp"
#include "pmt/tapers.hpp"

namespace py = pybind11;
using namespace pmt;

namespace {

py::array_t<double> shaped(const std::vector<double>& values, const Extents& dims) {
    std::vector<py::ssize_t> shape(dims.begin(), dims.end());
    py::array_t<double> out(shape);
    std::memcpy(out.mutable_data(), values.data(), values.size() * sizeof(double));
    return out;
}

FieldSample field_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    FieldSample f;
    f.dims.assign(a.ndim(), 0);
    for (py::ssize_t i = 0; i < a.ndim(); ++i) f.dims[static_cast<std::size_t>(i)] = a.shape(i);
    f.values.assign(a.data(), a.data() + a.size());
    return f;
}

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

py::dict curve_to_dict(const ExperimentCurve& curve) {
    py::dict d;
    d["abscissa"] = curve.abscissa;
    d["statistic"] = curve.statistic;
    d["columns"] = curve.columns;
    const py::ssize_t rows = static_cast<py::ssize_t>(curve.rows.size());
    const py::ssize_t cols = rows ? static_cast<py::ssize_t>(curve.rows[0].size()) : 0;
    py::array_t<double> table({rows, cols});
    auto view = table.mutable_unchecked<2>();
    for (py::ssize_t i = 0; i < rows; ++i)
        for (py::ssize_t j = 0; j < cols; ++j)
            view(i, j) = curve.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    d["rows"] = table;
    d["meta"] = json_to_py(curve.meta);
    return d;
}

DomainMask mask_from_array(const py::array& occupancy) {
    const auto a = py::array_t<bool, py::array::c_style | py::array::forcecast>::ensure(occupancy);
    if (!a) throw contract_error("occupancy must be a boolean-convertible array");
    Extents dims(static_cast<std::size_t>(a.ndim()), 0);
    for (py::ssize_t i = 0; i < a.ndim(); ++i) dims[static_cast<std::size_t>(i)] = a.shape(i);
    std::vector<std::uint8_t> occ(static_cast<std::size_t>(a.size()));
    for (py::ssize_t i = 0; i < a.size(); ++i) occ[static_cast<std::size_t>(i)] = a.data()[i] ? 1 : 0;
    return DomainMask::from_occupancy(dims, std::move(occ));
}

} // namespace

PYBIND11_MODULE(_pmt, m) {
    m.doc() = "multitaper spectral density estimation on irregular lattice subsets";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const io_error& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        } catch (const numeric_error& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        } catch (const error& e) {
            PyErr_SetString(PyExc_ValueError, e.what()); // contract / domain / resource
        }
    });

    py::class_<DomainMask>(m, "DomainMask")
        .def_readonly("dims", &DomainMask::dims)
        .def_readonly("n_omega", &DomainMask::n_omega)
        .def_readonly("n_boundary", &DomainMask::n_boundary)
        .def_readonly("sites", &DomainMask::sites)
        .def_property_readonly("occupancy",
                               [](const DomainMask& mask) {
                                   std::vector<double> v(mask.occupancy.begin(), mask.occupancy.end());
                                   return shaped(v, mask.dims);
                               })
        .def("__repr__", [](const DomainMask& mask) {
            return "<DomainMask n_omega=" + std::to_string(mask.n_omega) +
                   " n_boundary=" + std::to_string(mask.n_boundary) + ">";
        });

    py::class_<Rect>(m, "Rect")
        .def_readonly("offset", &Rect::offset)
        .def_readonly("dims", &Rect::dims);

    py::class_<CornerSubgrids>(m, "CornerSubgrids")
        .def_readonly("mask", &CornerSubgrids::mask)
        .def_readonly("rects", &CornerSubgrids::rects);

    py::class_<BandwidthSpec>(m, "BandwidthSpec")
        .def_readonly("K", &BandwidthSpec::K)
        .def_readonly("W", &BandwidthSpec::W)
        .def_readonly("n_omega", &BandwidthSpec::n_omega)
        .def_readonly("d", &BandwidthSpec::d);

    py::class_<TaperSet>(m, "TaperSet")
        .def_property_readonly("vectors", [](const TaperSet& t) { return t.vectors; })
        .def_readonly("lambdas", &TaperSet::lambdas)
        .def_readonly("W", &TaperSet::W)
        .def_readonly("T", &TaperSet::T)
        .def_readonly("seed", &TaperSet::seed)
        .def_readonly("mask", &TaperSet::mask)
        .def_property_readonly("kind", [](const TaperSet& t) { return taper_kind_name(t.kind); })
        .def_property_readonly("K", [](const TaperSet& t) { return t.K(); });

    py::class_<SpectralGrid>(m, "SpectralGrid")
        .def_readonly("freq_dims", &SpectralGrid::freq_dims)
        .def_property_readonly("values",
                               [](const SpectralGrid& g) { return shaped(g.values, g.freq_dims); })
        .def("xi", &SpectralGrid::xi, py::arg("axis"), py::arg("k"))
        .def_property_readonly("meta", [](const SpectralGrid& g) {
            return g.meta.is_null() ? py::object(py::dict()) : json_to_py(g.meta);
        });

    // masks
    m.def("disk_mask", &disk_mask, py::arg("N"), py::arg("R"));
    m.def("disk_complement_mask", &disk_complement_mask, py::arg("N"), py::arg("R"));
    m.def("corner_subgrids_mask", &corner_subgrids_mask, py::arg("N"), py::arg("R"));
    m.def("mask_from_occupancy", &mask_from_array, py::arg("occupancy"));

    // bandwidth and the concentration operator
    m.def("bandwidth_from_K", &make_bandwidth_from_K, py::arg("K"), py::arg("mask"));
    m.def("bandwidth_from_W", &make_bandwidth_from_W, py::arg("W"), py::arg("mask"));
    m.def("dense_operator", &dense_operator, py::arg("mask"), py::arg("bw"),
          py::arg("cap") = 20000);
    m.def(
        "apply_concentration",
        [](const DomainMask& mask, const BandwidthSpec& bw,
           const std::vector<std::vector<double>>& block) {
            return apply_concentration(mask, bw, block);
        },
        py::arg("mask"), py::arg("bw"), py::arg("block"));
    m.def(
        "trace_diagnostics",
        [](const DomainMask& mask, const BandwidthSpec& bw) {
            const TraceDiagnostics t = trace_diagnostics(mask, bw);
            return py::make_tuple(t.trace_T, t.trace_T2, t.defect);
        },
        py::arg("mask"), py::arg("bw"), "returns (trace_T, trace_T2, defect)");

    // tapers
    m.def(
        "proxy_tapers",
        [](const DomainMask& mask, std::int64_t K, int T, std::uint64_t seed) {
            return proxy_tapers(mask, K, T, seed);
        },
        py::arg("mask"), py::arg("K"), py::arg("T") = 2, py::arg("seed") = 0);
    m.def(
        "proxy_tapers_bw",
        [](const DomainMask& mask, const BandwidthSpec& bw, int T, std::uint64_t seed) {
            return proxy_tapers(mask, bw, T, seed);
        },
        py::arg("mask"), py::arg("bw"), py::arg("T") = 2, py::arg("seed") = 0);
    m.def("slepian_1d", &slepian_1d, py::arg("N"), py::arg("W"), py::arg("K"));
    m.def("tensor_tapers", &tensor_tapers, py::arg("rect_dims"), py::arg("W"), py::arg("K"));
    m.def("rotate_tapers", &rotate_tapers, py::arg("tapers"), py::arg("ortho"));
    m.def("accumulated_spectral_window", &accumulated_spectral_window, py::arg("tapers"),
          py::arg("freq_dims"));
    m.def("spectral_window_l1_error", &spectral_window_l1_error, py::arg("tapers"), py::arg("bw"),
          py::arg("freq_dims"));

    // estimators: fields are numpy arrays on the full grid the mask lives in
    m.def(
        "tapered_periodogram",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& field,
           const DomainMask& mask, const Eigen::VectorXd& taper, const Extents& freq_dims) {
            return tapered_periodogram(field_from_array(field), mask, taper, freq_dims);
        },
        py::arg("field"), py::arg("mask"), py::arg("taper"), py::arg("freq_dims"));
    m.def(
        "multitaper_estimate",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& field,
           const TaperSet& tapers, const Extents& freq_dims) {
            return multitaper_estimate(field_from_array(field), tapers, freq_dims);
        },
        py::arg("field"), py::arg("tapers"), py::arg("freq_dims"));
    m.def(
        "mper_estimate",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& field,
           const DomainMask& mask, const Extents& freq_dims) {
            return mper_estimate(field_from_array(field), mask, freq_dims);
        },
        py::arg("field"), py::arg("mask"), py::arg("freq_dims"));
    m.def(
        "cmt_estimate",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& field,
           const CornerSubgrids& corners, double W, std::optional<std::int64_t> K_per_rect,
           const Extents& freq_dims) {
            return cmt_estimate(field_from_array(field), corners, W, K_per_rect, freq_dims);
        },
        py::arg("field"), py::arg("corners"), py::arg("W"), py::arg("K_per_rect") = py::none(),
        py::arg("freq_dims"));

    // synthesis
    m.def("triple_disk_density", &triple_disk_density, py::arg("freq_dims"));
    m.def(
        "constant_density",
        [](double sigma2, const Extents& dims) { return DensitySpec::constant(sigma2).materialize(dims); },
        py::arg("sigma2"), py::arg("dims"));
    m.def(
        "sample_field",
        [](const SpectralGrid& density, std::uint64_t seed) {
            const FieldSample f = sample_field(density, seed);
            return shaped(f.values, f.dims);
        },
        py::arg("density"), py::arg("seed"));
    m.def(
        "synthetic_projection",
        [](const Extents& dims, std::uint64_t seed) {
            const FieldSample f = synthetic_projection(dims, seed);
            return shaped(f.values, f.dims);
        },
        py::arg("dims"), py::arg("seed"));

    // experiments
    m.def(
        "fit_loglog_slope",
        [](const std::vector<double>& xs, const std::vector<double>& ys) {
            const SlopeFit f = fit_loglog_slope(xs, ys);
            return py::make_tuple(f.slope, f.se);
        },
        py::arg("xs"), py::arg("ys"), "returns (slope, stderr)");
    m.def(
        "run_specwin_sweep",
        [](std::int64_t N, double W, std::vector<double> radii, int T, std::uint64_t seed,
           std::int64_t oversample) {
            return curve_to_dict(run_specwin_sweep(N, W, std::move(radii), T, seed, oversample));
        },
        py::arg("N"), py::arg("W"), py::arg("radii"), py::arg("T") = 2, py::arg("seed") = 1,
        py::arg("oversample") = 4);
    m.def(
        "run_mse_sweep",
        [](std::int64_t N, std::vector<double> radii, std::int64_t M, std::uint64_t seed) {
            return curve_to_dict(run_mse_sweep(N, std::move(radii), M, seed));
        },
        py::arg("N"), py::arg("radii"), py::arg("M"), py::arg("seed") = 1);
    m.def(
        "run_subgrid_comparison",
        [](int T, std::uint64_t seed, std::int64_t N, double W) {
            const SubgridReport rep = run_subgrid_comparison(T, seed, N, W);
            py::dict d;
            d["nrmse_tensor"] = rep.nrmse_tensor;
            d["nrmse_proxy"] = rep.nrmse_proxy;
            d["nrmse_disk_complement"] = rep.nrmse_disk_complement;
            d["deviation"] = rep.deviation;
            d["meta"] = json_to_py(rep.meta);
            return d;
        },
        py::arg("T") = 2, py::arg("seed") = 1, py::arg("N") = 128, py::arg("W") = 1.0 / 16.0);
    m.def(
        "run_cryoem_synthetic",
        [](std::vector<double> radii, std::int64_t M, std::uint64_t seed, std::int64_t N) {
            const CryoemCurves c = run_cryoem_synthetic(std::move(radii), M, seed, N);
            py::dict d;
            d["bias2"] = curve_to_dict(c.bias2);
            d["variance"] = curve_to_dict(c.variance);
            d["mse"] = curve_to_dict(c.mse);
            return d;
        },
        py::arg("radii"), py::arg("M"), py::arg("seed") = 1, py::arg("N") = 128);

    // grid container
    m.def(
        "write_grid",
        [](const std::string& path,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
            Extents dims(static_cast<std::size_t>(a.ndim()), 0);
            for (py::ssize_t i = 0; i < a.ndim(); ++i) dims[static_cast<std::size_t>(i)] = a.shape(i);
            io::write_grid(path, dims, std::vector<double>(a.data(), a.data() + a.size()));
        },
        py::arg("path"), py::arg("values"));
    m.def(
        "read_grid",
        [](const std::string& path) {
            const io::Grid g = io::read_grid(path);
            return shaped(g.values, g.dims);
        },
        py::arg("path"));
    m.def("set_thread_cap", &set_thread_cap, py::arg("n"));
}
