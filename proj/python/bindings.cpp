#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lorlut/cp_als.hpp"
#include "lorlut/io.hpp"
#include "lorlut/metrics.hpp"
#include "lorlut/optim.hpp"
#include "lorlut/version.hpp"

namespace py = pybind11;
using namespace lorlut;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (H, W, 3) float array <-> ImageBuffer
ImageBuffer to_image(const Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) throw DimensionError("image must have shape (height, width, 3)");
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    std::vector<Rgb> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    const double* d = a.data();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = Rgb{d[3 * i], d[3 * i + 1], d[3 * i + 2]};
    return ImageBuffer(w, h, std::move(px));
}

Array from_image(const ImageBuffer& img) {
    Array out({static_cast<py::ssize_t>(img.height()), static_cast<py::ssize_t>(img.width()), py::ssize_t{3}});
    double* d = out.mutable_data();
    std::size_t i = 0;
    for (const Rgb& p : img.pixels()) {
        d[i++] = p.r;
        d[i++] = p.g;
        d[i++] = p.b;
    }
    return out;
}

// (G, G, G, 3) array indexed [r, g, b, channel]
Lut3D to_lut(const Array& a) {
    if (a.ndim() != 4 || a.shape(3) != 3 || a.shape(0) != a.shape(1) || a.shape(0) != a.shape(2)) {
        throw DimensionError("LUT array must have shape (G, G, G, 3)");
    }
    const auto g = static_cast<int>(a.shape(0));
    auto v = a.unchecked<4>();
    Lut3D lut(g, Rgb{});
    for (int k = 0; k < g; ++k) {
        for (int j = 0; j < g; ++j) {
            for (int i = 0; i < g; ++i) lut.at(i, j, k) = Rgb{v(i, j, k, 0), v(i, j, k, 1), v(i, j, k, 2)};
        }
    }
    return lut;
}

Array from_lut(const Lut3D& lut) {
    const py::ssize_t g = lut.grid_size();
    Array out({g, g, g, py::ssize_t{3}});
    auto v = out.mutable_unchecked<4>();
    for (int k = 0; k < g; ++k) {
        for (int j = 0; j < g; ++j) {
            for (int i = 0; i < g; ++i) {
                const Rgb& e = lut.at(i, j, k);
                v(i, j, k, 0) = e.r;
                v(i, j, k, 1) = e.g;
                v(i, j, k, 2) = e.b;
            }
        }
    }
    return out;
}

InterpKind interp_kind(const std::string& name) {
    if (name == "trilinear") return InterpKind::trilinear;
    if (name == "tetrahedral") return InterpKind::tetrahedral;
    throw RangeError("interp must be 'trilinear' or 'tetrahedral'");
}

ComponentScales scales_arg(const std::optional<std::vector<double>>& s, int rank) {
    return s ? ComponentScales{*s} : ComponentScales::ones(rank);
}

py::dict report_dict(const FitReport& r) {
    py::dict d;
    d["steps"] = r.steps;
    d["final_loss"] = r.final_loss;
    d["psnr"] = r.psnr;
    d["ssim"] = r.ssim ? py::object(py::float_(*r.ssim)) : py::object(py::none());
    d["mean_delta_e00"] = r.mean_delta_e;
    d["seconds"] = r.seconds;
    py::list trace;
    for (const TraceEntry& t : r.trace) trace.append(py::make_tuple(t.step, t.loss.total, t.best_total));
    d["trace"] = trace;
    return d;
}

}  // namespace

PYBIND11_MODULE(_lorlut, m) {
    m.doc() = "Low-rank 3D LUT engine";
    m.attr("__version__") = std::string(kVersion);

    // leaked on purpose: exception types must outlive interpreter teardown
    static auto* base_error = new py::exception<Error>(m, "LorlutError", PyExc_ValueError);
    static auto* dim_error = new py::exception<DimensionError>(m, "DimensionError", base_error->ptr());
    static auto* range_error = new py::exception<RangeError>(m, "RangeError", base_error->ptr());
    static auto* format_error = new py::exception<FormatError>(m, "FormatError", base_error->ptr());
    static auto* numeric_error = new py::exception<NumericError>(m, "NumericError", base_error->ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const DimensionError& e) {
            py::set_error(*dim_error, e.what());
        } catch (const RangeError& e) {
            py::set_error(*range_error, e.what());
        } catch (const FormatError& e) {
            py::set_error(*format_error, e.what());
        } catch (const NumericError& e) {
            py::set_error(*numeric_error, e.what());
        } catch (const Error& e) {
            py::set_error(*base_error, e.what());
        }
    });

    py::class_<CpComponent>(m, "Component")
        .def(py::init([](std::vector<double> u, std::vector<double> v, std::vector<double> w, std::array<double, 3> c) {
                 return CpComponent{std::move(u), std::move(v), std::move(w), c};
             }),
             py::arg("u"), py::arg("v"), py::arg("w"), py::arg("c"))
        .def_readwrite("u", &CpComponent::u)
        .def_readwrite("v", &CpComponent::v)
        .def_readwrite("w", &CpComponent::w)
        .def_readwrite("c", &CpComponent::c);

    py::class_<LorLutModel>(m, "Model")
        .def(py::init(&identity_model), py::arg("grid_size") = 33, "Identity model (K = 0, R = 0)")
        .def_readonly("grid_size", &LorLutModel::grid_size)
        .def_property_readonly("rank", &LorLutModel::rank)
        .def_property_readonly("basis_count", &LorLutModel::basis_count)
        .def_readwrite("alphas", &LorLutModel::alphas)
        .def_property(
            "bases",
            [](const LorLutModel& mm) {
                py::list out;
                for (const Lut3D& b : mm.bases) out.append(from_lut(b));
                return out;
            },
            [](LorLutModel& mm, const std::vector<Array>& arrays) {
                std::vector<Lut3D> bases;
                for (const Array& a : arrays) bases.push_back(to_lut(a));
                mm.bases = std::move(bases);
            })
        .def_property(
            "components", [](const LorLutModel& mm) { return mm.factors.components(); },
            [](LorLutModel& mm, std::vector<CpComponent> comps) {
                mm.factors = CpFactors(mm.grid_size, std::move(comps));
            })
        .def("validate", &LorLutModel::validate)
        .def("__repr__", [](const LorLutModel& mm) {
            return "<lorlut.Model G=" + std::to_string(mm.grid_size) + " K=" + std::to_string(mm.basis_count()) +
                   " R=" + std::to_string(mm.rank()) + ">";
        });

    m.def("identity_lut", [](int g) { return from_lut(identity_lut(g)); }, py::arg("grid_size"));
    m.def(
        "sample",
        [](const Array& lut, std::array<double, 3> rgb, const std::string& interp) {
            const Rgb out = sample(to_lut(lut), Rgb{rgb[0], rgb[1], rgb[2]}, interp_kind(interp));
            return std::array<double, 3>{out.r, out.g, out.b};
        },
        py::arg("lut"), py::arg("rgb"), py::arg("interp") = "trilinear");
    m.def(
        "apply",
        [](const Array& lut, const Array& image, const std::string& interp, bool clamp) {
            const Lut3D l = to_lut(lut);
            const ImageBuffer img = to_image(image);
            const InterpKind kind = interp_kind(interp);
            ImageBuffer out;
            {
                py::gil_scoped_release release;
                out = apply_to_image(l, img, kind, clamp);
            }
            return from_image(out);
        },
        py::arg("lut"), py::arg("image"), py::arg("interp") = "trilinear", py::arg("clamp") = true);

    m.def(
        "reconstruct_residual",
        [](const LorLutModel& mm, const std::optional<std::vector<double>>& s) {
            return from_lut(reconstruct_residual(mm.factors, scales_arg(s, mm.rank())));
        },
        py::arg("model"), py::arg("scales") = py::none());
    m.def(
        "compose_lut",
        [](const LorLutModel& mm, const std::optional<std::vector<double>>& s) {
            return from_lut(compose_lut(mm, scales_arg(s, mm.rank())));
        },
        py::arg("model"), py::arg("scales") = py::none());

    m.def("residual_param_count", &residual_param_count, py::arg("grid_size"), py::arg("rank"));
    m.def("dense_param_count", &dense_param_count, py::arg("grid_size"));
    m.def(
        "total_param_count", [](int g, int k, int r) { return total_param_count(g, k, r).total; },
        py::arg("grid_size"), py::arg("basis_count"), py::arg("rank"));
    m.def("tv_loss", [](const Array& lut) { return tv_loss(to_lut(lut)); }, py::arg("lut"));

    m.def(
        "psnr", [](const Array& a, const Array& b) { return psnr(to_image(a), to_image(b)); }, py::arg("a"),
        py::arg("b"));
    m.def(
        "ssim", [](const Array& a, const Array& b) { return ssim(to_image(a), to_image(b)); }, py::arg("a"),
        py::arg("b"));
    m.def(
        "srgb_to_lab",
        [](std::array<double, 3> rgb) {
            const Lab l = srgb_to_lab(Rgb{rgb[0], rgb[1], rgb[2]});
            return std::array<double, 3>{l.L, l.a, l.b};
        },
        py::arg("rgb"));
    m.def(
        "delta_e00",
        [](std::array<double, 3> x, std::array<double, 3> y) {
            return delta_e00(Lab{x[0], x[1], x[2]}, Lab{y[0], y[1], y[2]});
        },
        py::arg("lab1"), py::arg("lab2"));

    m.def(
        "fit",
        [](const Array& input, const Array& target, int rank, int bases, int grid, int steps, std::uint64_t seed,
           double lr, double lambda_tv, double lambda_l2, double lambda_de) {
            FitConfig cfg;
            cfg.rank = rank;
            cfg.basis_count = bases;
            cfg.grid_size = grid;
            cfg.steps = steps;
            cfg.seed = seed;
            cfg.base_lr = lr;
            cfg.weights.smoothness = lambda_tv;
            cfg.weights.residual = lambda_l2;
            cfg.weights.delta_e = lambda_de;
            const ImageBuffer in = to_image(input);
            const ImageBuffer tg = to_image(target);
            FitResult r;
            {
                py::gil_scoped_release release;
                r = fit_image_pair(in, tg, cfg);
            }
            return py::make_tuple(r.model, report_dict(r.report));
        },
        py::arg("input"), py::arg("target"), py::arg("rank") = 8, py::arg("bases") = 0, py::arg("grid") = 33,
        py::arg("steps") = 2000, py::arg("seed") = 0, py::arg("lr") = 5e-3, py::arg("lambda_tv") = 0.001,
        py::arg("lambda_l2") = 0.001, py::arg("lambda_de") = 0.0);

    m.def(
        "compress",
        [](const Array& lut, int rank, int max_iters, double tol) {
            CpAlsOptions opts;
            opts.max_iters = max_iters;
            opts.tol = tol;
            const Lut3D l = to_lut(lut);
            CpAlsResult res;
            {
                py::gil_scoped_release release;
                res = cp_als_compress(residual_against_identity(l), rank, opts);
            }
            LorLutModel mm = identity_model(l.grid_size());
            mm.factors = res.factors;
            py::dict info;
            info["relative_error"] = res.relative_error;
            info["iterations"] = res.iterations;
            info["starts"] = res.starts;
            info["history"] = res.history;
            info["ill_conditioned"] = res.ill_conditioned;
            return py::make_tuple(mm, info);
        },
        py::arg("lut"), py::arg("rank"), py::arg("max_iters") = 200, py::arg("tol") = 1e-10,
        "Rank-R model whose residual approximates lut - identity");

    m.def("write_model", [](const LorLutModel& mm) { return write_model(mm); }, py::arg("model"));
    m.def("read_model", [](const std::string& text) { return read_model(text); }, py::arg("text"));
    m.def(
        "write_cube", [](const Array& lut, const std::string& title) { return write_cube(to_lut(lut), title); },
        py::arg("lut"), py::arg("title") = "lorlut");
    m.def("read_cube", [](const std::string& text) { return from_lut(read_cube(text)); }, py::arg("text"));
    m.def("load_image", [](const std::string& path) { return from_image(load_image(path)); }, py::arg("path"));
    m.def(
        "save_image", [](const std::string& path, const Array& img) { save_image(path, to_image(img)); },
        py::arg("path"), py::arg("image"));
}
