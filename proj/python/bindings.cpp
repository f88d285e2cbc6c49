#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cdms/baselines.hpp"
#include "cdms/config.hpp"
#include "cdms/errors.hpp"
#include "cdms/fbg_model.hpp"
#include "cdms/kinematics.hpp"
#include "cdms/neural_net.hpp"
#include "cdms/pipeline.hpp"
#include "cdms/uncertainty.hpp"

namespace py = pybind11;
using namespace cdms;

namespace {

CurvatureProfile to_profile(const std::vector<double>& kappa) {
    if (kappa.size() != kSegments) {
        throw ShapeError("expected " + std::to_string(kSegments) + " curvatures, got " + std::to_string(kappa.size()));
    }
    CurvatureProfile p;
    std::copy(kappa.begin(), kappa.end(), p.kappa.begin());
    return p;
}

std::vector<double> from_profile(const CurvatureProfile& p) { return {p.kappa.begin(), p.kappa.end()}; }

Eigen::MatrixXd markers_matrix(const MarkerSet& m) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(kMarkers), 2);
    for (std::size_t i = 0; i < kMarkers; ++i) {
        out(static_cast<Eigen::Index>(i), 0) = m[i].x;
        out(static_cast<Eigen::Index>(i), 1) = m[i].y;
    }
    return out;
}

WavelengthFrame to_frame(const std::vector<double>& shifts) {
    if (shifts.size() != kFeatures) {
        throw ShapeError("expected 8 wavelength shifts, got " + std::to_string(shifts.size()));
    }
    WavelengthFrame f;
    std::copy(shifts.begin(), shifts.end(), f.shifts.begin());
    return f;
}

RunConfig config_from_text(const std::string& text) {
    if (text.empty()) return default_run_config();
    auto config = config_from_json(nlohmann::json::parse(text));
    config.validate();
    return config;
}

Placement parse_placement(const std::string& name) {
    const auto p = placement_from_string(name);
    if (!p) throw ArgumentError("unknown placement '" + name + "'");
    return *p;
}

}  // namespace

PYBIND11_MODULE(_cdms, m) {
    m.doc() = "FBG-based shape sensing for a continuum dexterous manipulator";

    py::register_exception<Error>(m, "CdmsError");

    m.attr("N_SEGMENTS") = kSegments;
    m.attr("N_MARKERS") = kMarkers;
    m.attr("N_FEATURES") = kFeatures;

    m.def(
        "free_bend_curvature", [](double delta) { return from_profile(free_bend_curvature(delta, CdmConfig{})); },
        py::arg("delta"), "Uniform curvature profile (30 values, 1/mm) for a cable displacement in mm.");
    m.def(
        "tip_angle", [](const std::vector<double>& kappa) { return tip_angle(to_profile(kappa), CdmConfig{}); },
        py::arg("kappa"), "Tip angle (rad) of a curvature profile.");
    m.def(
        "shape", [](const std::vector<double>& kappa) {
            return markers_matrix(shape_from_curvatures(to_profile(kappa), CdmConfig{}).markers);
        },
        py::arg("kappa"), "Marker positions (30 x 2, mm) of a curvature profile.");
    m.def(
        "constrained_bend",
        [](double delta, const std::string& placement) {
            const auto sol = constrained_bend(delta, default_obstacle(parse_placement(placement)), CdmConfig{});
            return py::make_tuple(from_profile(sol.profile), sol.penetration, sol.iterations);
        },
        py::arg("delta"), py::arg("placement"),
        "Curvatures of the CDM bent against the default obstacle at `placement`; returns (kappa, penetration, "
        "iterations).");

    m.def(
        "wavelength_shift",
        [](double strain, double delta_t, std::size_t node) {
            return wavelength_shift(strain, delta_t, FiberSpec{}, node);
        },
        py::arg("strain"), py::arg("delta_t") = 0.0, py::arg("node") = 0, "Bragg shift (nm) of the default fiber.");
    m.def(
        "strain_from_shift",
        [](double shift, std::size_t node) { return strain_from_shift(shift, FiberSpec{}, node); }, py::arg("shift"),
        py::arg("node") = 0);
    m.def(
        "common_mode_correct",
        [](const std::vector<double>& raw) {
            const auto f = to_frame(raw);
            const auto out = common_mode_correct(f.shifts);
            return std::vector<double>(out.shifts.begin(), out.shifts.end());
        },
        py::arg("raw"));
    m.def(
        "sensor_features",
        [](const std::vector<double>& kappa, double delta_t) {
            const CdmConfig c;
            const auto out = common_mode_correct(
                raw_shifts(to_profile(kappa), fiber_pair(FiberSpec{}, c.fiber_offset), c, delta_t));
            return std::vector<double>(out.shifts.begin(), out.shifts.end());
        },
        py::arg("kappa"), py::arg("delta_t") = 0.0, "Noise-free mode-corrected wavelength shifts of a profile.");

    m.def(
        "gradient_check",
        [](const std::vector<std::size_t>& dims, std::uint64_t seed, int batches) {
            return gradient_check(dims, seed, batches);
        },
        py::arg("dims") = std::vector<std::size_t>{8, 5, 4, 6}, py::arg("seed") = 1, py::arg("batches") = 10);

    m.def(
        "adam_update",
        [](std::vector<double> params, const std::vector<double>& grads, std::vector<double> m1,
           std::vector<double> v1, std::uint64_t step) {
            adam_update(params, grads, m1, v1, step, AdamHyper{});
            return py::make_tuple(params, m1, v1);
        },
        py::arg("params"), py::arg("grads"), py::arg("m"), py::arg("v"), py::arg("step"),
        "One ADAM step with default hyper-parameters; returns (params, m, v).");

    m.def(
        "spearman",
        [](const std::vector<double>& a, const std::vector<double>& b) { return spearman(a, b); }, py::arg("a"),
        py::arg("b"));

    m.def(
        "default_config", [] { return to_json(default_run_config()).dump(2); },
        "Default run configuration as JSON text.");

    m.def(
        "gen",
        [](const std::filesystem::path& dir, const std::string& config) {
            const auto s = run_gen(config_from_text(config), dir);
            return py::dict(py::arg("train_rows") = s.train_rows, py::arg("test_id_rows") = s.test_id_rows,
                            py::arg("test_ood_rows") = s.test_ood_rows, py::arg("skipped") = s.skipped,
                            py::arg("attempted") = s.attempted, py::arg("max_penetration") = s.max_penetration);
        },
        py::arg("dir"), py::arg("config") = "", "Generate the dataset CSVs into `dir`.");
    m.def(
        "train",
        [](const std::filesystem::path& dir, const std::string& config) {
            const auto s = run_train(config_from_text(config), dir);
            py::list curve;
            for (const auto& e : s.curve) curve.append(py::make_tuple(e.epoch, e.train_mse, e.val_mse));
            return py::dict(py::arg("curve") = curve, py::arg("linear_residual") = s.linear_residual,
                            py::arg("poly2_residual") = s.poly2_residual);
        },
        py::arg("dir"), py::arg("config") = "", "Train the DNN and baselines on `dir`/train.csv.");
    m.def(
        "eval",
        [](const std::filesystem::path& dir, const std::string& config) {
            return to_json_text(run_eval(config_from_text(config), dir).report);
        },
        py::arg("dir"), py::arg("config") = "", "Evaluate all checkpoints; returns the report as JSON text.");
    m.def(
        "infer",
        [](const std::filesystem::path& model, const std::filesystem::path& input, const std::filesystem::path& output,
           int k, double omega, std::uint64_t seed) { return run_infer(model, input, output, {k, omega, seed}); },
        py::arg("model"), py::arg("input"), py::arg("output"), py::arg("k") = 100, py::arg("omega") = 3.0,
        py::arg("seed") = 37);

    py::class_<MlpModel>(m, "Mlp")
        .def_static(
            "load", [](const std::filesystem::path& p) { return load_mlp(p); }, py::arg("path"))
        .def_static(
            "create",
            [](const std::vector<std::size_t>& dims, double dropout, std::uint64_t seed) {
                return MlpModel::create(dims, dropout, seed);
            },
            py::arg("dims"), py::arg("dropout") = 0.3, py::arg("seed") = 0)
        .def_property_readonly("dims", &MlpModel::dims)
        .def_readonly("dropout_rate", &MlpModel::dropout_rate)
        .def("save", [](const MlpModel& self, const std::filesystem::path& p) { save(self, p); })
        .def(
            "mc_predict",
            [](const MlpModel& self, const std::vector<double>& shifts, int k, std::uint64_t seed, double omega) {
                const auto pred = mc_predict(self, to_frame(shifts), k, seed, omega);
                return py::make_tuple(pred.mean, pred.std, confidence_interval(pred, omega));
            },
            py::arg("shifts"), py::arg("k") = 100, py::arg("seed") = 37, py::arg("omega") = 3.0,
            "Monte Carlo dropout on raw wavelength shifts; returns (mean, std, interval), each of length 60.");
}
