// Python bindings for the core library: benchmarks, the min-norm solvers,
// front metrics and a one-call search over a benchmark.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "modnas/errors.hpp"
#include "modnas/experiment.hpp"
#include "modnas/pareto.hpp"

namespace py = pybind11;
using namespace modnas;

namespace {

py::dict search_benchmark(const Benchmark& bench, std::uint64_t seed, std::optional<std::size_t> epochs,
                          std::optional<std::size_t> steps, const std::string& scheme, bool exact_hardware) {
  ExperimentConfig cfg = paper_mini();
  SearchConfig s = cfg.search;
  s.seed = seed;
  if (epochs) s.epochs = *epochs;
  if (steps) s.steps_per_epoch = *steps;
  s.scheme = parse_scheme(scheme);
  HardwareModels hw;
  {
    py::gil_scoped_release release;
    hw = exact_hardware ? exact_hardware_models(bench)
                        : train_hardware_models(bench, cfg.predictor, cfg.predictor_hidden);
  }
  SeedRun run = [&] {
    py::gil_scoped_release release;
    return run_seed(bench, s, hw.view());
  }();
  py::dict hv, fronts;
  for (const auto& p : run.profiles) {
    hv[py::int_(p.device)] = p.hv;
    fronts[py::int_(p.device)] = p.front.values();
  }
  py::dict out;
  out["hv"] = hv;
  out["fronts"] = fronts;
  out["train_devices"] = bench.train_devices();
  out["test_devices"] = bench.test_devices();
  return out;
}

}  // namespace

PYBIND11_MODULE(_modnas, m) {
  m.doc() = "Multi-objective differentiable architecture search core";

  auto base = py::register_exception<Error>(m, "ModnasError", PyExc_RuntimeError);
  // bad arguments surface as ValueError subclasses
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
  py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);

  py::class_<ArchSpace>(m, "ArchSpace")
      .def(py::init<std::vector<std::size_t>>(), py::arg("choices"))
      .def_property_readonly("choices", &ArchSpace::choice_counts)
      .def_property_readonly("encoding_size", &ArchSpace::encoding_size)
      .def_property_readonly("total_configs", &ArchSpace::total_configs)
      .def("config_at", [](const ArchSpace& s, std::uint64_t i) { return s.config_at(i).choices; })
      .def("encode", [](const ArchSpace& s, std::vector<std::size_t> c) { return s.encode(ArchConfig{std::move(c)}); })
      .def("__repr__", [](const ArchSpace& s) { return "ArchSpace(" + s.to_json().dump() + ")"; });

  py::class_<BenchmarkRecipe>(m, "BenchmarkRecipe")
      .def(py::init<>())
      .def_readwrite("seed", &BenchmarkRecipe::seed)
      .def_readwrite("choices", &BenchmarkRecipe::choices)
      .def_readwrite("num_objectives", &BenchmarkRecipe::num_objectives)
      .def_readwrite("num_devices", &BenchmarkRecipe::num_devices)
      .def_readwrite("num_train_devices", &BenchmarkRecipe::num_train_devices)
      .def_readwrite("profile_size", &BenchmarkRecipe::profile_size)
      .def_readwrite("heterogeneity", &BenchmarkRecipe::heterogeneity)
      .def_readwrite("conflict", &BenchmarkRecipe::conflict)
      .def_readwrite("noise", &BenchmarkRecipe::noise)
      .def_readwrite("interaction", &BenchmarkRecipe::interaction);

  py::class_<Benchmark>(m, "Benchmark")
      .def_static("load", &Benchmark::load, py::arg("path"))
      .def("save", &Benchmark::save, py::arg("path"))
      .def_property_readonly("space", [](const Benchmark& b) { return b.space; })
      .def_property_readonly("num_objectives", &Benchmark::num_objectives)
      .def_property_readonly("num_devices", [](const Benchmark& b) { return b.devices.size(); })
      .def_property_readonly("train_devices", &Benchmark::train_devices)
      .def_property_readonly("test_devices", &Benchmark::test_devices)
      .def("objectives", &Benchmark::objectives, py::arg("device"), py::arg("config"))
      .def("normalized_objectives", &Benchmark::normalized_objectives, py::arg("device"), py::arg("config"))
      .def("true_front", [](const Benchmark& b, std::size_t d) { return enumerate_true_front(b, d).values(); },
           py::arg("device"))
      .def("content_hash", &Benchmark::content_hash);

  m.def("generate_benchmark", &generate_benchmark, py::arg("recipe"));
  m.def("paper_mini_recipe", [] { return paper_mini().recipe; });

  m.def("closed_form_gamma",
        [](const Vec& g1, const Vec& g2) { return closed_form_gamma(g1, g2).gamma; }, py::arg("g1"), py::arg("g2"),
        "argmin over [0, 1] of |gamma g1 + (1 - gamma) g2|^2");
  m.def(
      "frank_wolfe_gamma",
      [](const std::vector<Vec>& grads, std::size_t max_iters, double tol) {
        FrankWolfeOptions o;
        o.max_iters = max_iters;
        o.tol = tol;
        const FrankWolfeResult r = frank_wolfe_gamma(grads, o);
        return py::make_tuple(r.gamma, r.objective);
      },
      py::arg("gradients"), py::arg("max_iters") = 100, py::arg("tol") = 1e-6,
      "Min-norm convex combination of the gradients; returns (gamma, squared norm)");

  m.def("dominates", &dominates, py::arg("a"), py::arg("b"));
  m.def("nondominated", [](const std::vector<Vec>& pts) { return nondominated_filter(pts).values(); },
        py::arg("points"));
  m.def("hypervolume", py::overload_cast<const std::vector<Vec>&, const Vec&>(&hypervolume), py::arg("points"),
        py::arg("reference"));
  m.def("gd", &gd, py::arg("front"), py::arg("reference_set"));
  m.def("igd", &igd, py::arg("front"), py::arg("reference_set"));
  m.def("gd_plus", &gd_plus, py::arg("front"), py::arg("reference_set"));
  m.def("igd_plus", &igd_plus, py::arg("front"), py::arg("reference_set"));

  m.def("search", &search_benchmark, py::arg("bench"), py::arg("seed") = 0, py::arg("epochs") = py::none(),
        py::arg("steps") = py::none(), py::arg("scheme") = "mgd", py::arg("exact_hardware") = false,
        "Pretrain, search and profile every device; returns HVs and fronts keyed by device id");

#ifdef MODNAS_VERSION
  m.attr("__version__") = MODNAS_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
