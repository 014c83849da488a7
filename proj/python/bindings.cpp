#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "dgbr/balancing.hpp"
#include "dgbr/core.hpp"
#include "dgbr/error.hpp"
#include "dgbr/evalharness.hpp"
#include "dgbr/model.hpp"
#include "dgbr/synthgen.hpp"
#include "dgbr/theory.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// Python dicts cross the boundary as JSON text.
std::string dumps(const py::dict& d) {
  return py::module_::import("json").attr("dumps")(d).cast<std::string>();
}

py::object loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

dgbr::HyperParams hyper_of(const py::dict& d) { return dgbr::hyper_from_json(dumps(d)); }

dgbr::BinaryDataset dataset_of(const dgbr::Matrix& x, const dgbr::Vector& y) {
  return dgbr::BinaryDataset(x, y);
}

}  // namespace

PYBIND11_MODULE(_dgbr, m) {
  m.doc() = "Stable prediction with global sample-weight balancing";

  static py::exception<dgbr::Error> error(m, "DgbrError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const dgbr::Error& e) {
      const std::string msg = std::string(dgbr::error_kind_name(e.kind())) + ": " + e.what();
      PyErr_SetString(error.ptr(), msg.c_str());
    }
  });

  m.def("binarize", &dgbr::binarize, py::arg("values"));

  m.def(
      "balancing_loss",
      [](const dgbr::Matrix& x, const dgbr::Vector& w) {
        return dgbr::balancing_loss(x, dgbr::SampleWeights::from_weights(w));
      },
      py::arg("features"), py::arg("weights"));
  m.def(
      "exact_balancing_weights",
      [](const dgbr::Matrix& x) { return dgbr::exact_balancing_weights(x).weights(); },
      py::arg("features"));
  m.def("max_imbalance", &dgbr::max_imbalance, py::arg("features"), py::arg("weights"));
  m.def("missing_pattern_count", &dgbr::missing_pattern_count, py::arg("features"));
  m.def(
      "imbalance_report",
      [](const dgbr::Matrix& x, const dgbr::Vector& w) {
        return loads(dgbr::to_json(dgbr::imbalance_report(x, w)));
      },
      py::arg("features"), py::arg("weights"));

  m.def("alpha_from_m", &dgbr::alpha_from_m, py::arg("p"), py::arg("m"));
  m.def("expected_alpha", &dgbr::expected_alpha, py::arg("n"), py::arg("p"));
  m.def(
      "risk_bound",
      [](const py::dict& inputs) {
        return loads(dgbr::to_json(dgbr::risk_bound(dgbr::bound_inputs_from_json(dumps(inputs)))));
      },
      py::arg("inputs"));

  m.def(
      "generate_environment",
      [](const py::dict& spec, double r, std::uint64_t seed) {
        const dgbr::BinaryDataset d =
            dgbr::generate_environment(dgbr::gen_spec_from_json(dumps(spec)), r, seed);
        return py::make_tuple(d.features(), d.outcome());
      },
      py::arg("spec"), py::arg("r"), py::arg("seed"));
  m.def("derive_seed", &dgbr::derive_seed, py::arg("seed"), py::arg("label"));
  m.def("rmse", &dgbr::rmse, py::arg("predictions"), py::arg("truth"));

  py::class_<dgbr::DgbrModel>(m, "Model")
      .def_property_readonly("method", [](const dgbr::DgbrModel& s) { return dgbr::method_name(s.method); })
      .def_property_readonly("beta", [](const dgbr::DgbrModel& s) { return s.beta; })
      .def_property_readonly("weights", [](const dgbr::DgbrModel& s) { return s.weights.weights(); })
      .def_property_readonly("layer_sizes", [](const dgbr::DgbrModel& s) { return s.autoenc.layer_sizes; })
      .def("embed", &dgbr::DgbrModel::embed, py::arg("features"))
      .def("predict_proba", &dgbr::DgbrModel::predict_proba, py::arg("features"))
      .def("to_json", [](const dgbr::DgbrModel& s) { return dgbr::to_json(s); })
      .def_static("from_json", &dgbr::model_from_json, py::arg("text"));

  m.def(
      "fit",
      [](const std::string& method, const dgbr::Matrix& x, const dgbr::Vector& y, const py::dict& hyper) {
        const dgbr::BinaryDataset d = dataset_of(x, y);
        dgbr::FitResult r = dgbr::fit(dgbr::parse_method(method), d, hyper_of(hyper));
        return py::make_tuple(std::move(r.model), r.trace.to_csv());
      },
      py::arg("method"), py::arg("features"), py::arg("outcome"), py::arg("hyper") = py::dict(),
      "Returns (model, trace_csv).");
  m.def(
      "matched_baseline",
      [](const py::dict& hyper, dgbr::Index n) {
        return loads(dgbr::to_json(dgbr::matched_baseline(hyper_of(hyper), n)));
      },
      py::arg("hyper"), py::arg("n"));
  m.def(
      "default_hyper", [] { return loads(dgbr::to_json(dgbr::HyperParams{})); });

  m.def(
      "sweep",
      [](const dgbr::DgbrModel& model, const std::vector<std::tuple<std::string, dgbr::Matrix, dgbr::Vector>>& envs) {
        std::vector<std::pair<std::string, dgbr::BinaryDataset>> ds;
        for (const auto& [label, x, y] : envs) ds.emplace_back(label, dataset_of(x, y));
        return loads(dgbr::sweep(model, ds).to_json());
      },
      py::arg("model"), py::arg("environments"),
      "environments: list of (label, features, outcome).");
}
