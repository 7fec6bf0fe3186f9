#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vigraph/config.hpp"
#include "vigraph/dataset_io.hpp"
#include "vigraph/errors.hpp"
#include "vigraph/evaluate.hpp"
#include "vigraph/generator.hpp"
#include "vigraph/imbalance.hpp"
#include "vigraph/objectives.hpp"
#include "vigraph/report.hpp"
#include "vigraph/trainer.hpp"

namespace py = pybind11;
using namespace vigraph;

namespace {

std::vector<SplitTag> parse_split(const std::vector<std::string>& tags) {
  std::vector<SplitTag> out;
  for (const std::string& t : tags) {
    if (t == "train") out.push_back(SplitTag::train);
    else if (t == "val") out.push_back(SplitTag::val);
    else if (t == "test") out.push_back(SplitTag::test);
    else if (t == "unlabeled") out.push_back(SplitTag::unlabeled);
    else throw InvalidArgument("unknown split tag '" + t + "'");
  }
  return out;
}

/// Config from a JSON string layered over the defaults.
PipelineConfig config_from(const std::string& text) {
  if (text.empty()) return PipelineConfig{};
  return apply_config(PipelineConfig{}, nlohmann::json::parse(text));
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Variational minority-node generation for imbalanced graphs";

  py::register_exception<Error>(m, "VigraphError");

  py::class_<AttributedGraph>(m, "Graph")
      .def(py::init([](const Matrix& features, const std::vector<std::pair<int, int>>& edges,
                       const std::vector<int>& labels, const std::vector<std::string>& split, int num_classes) {
             std::vector<Edge> e;
             for (auto [u, v] : edges) e.push_back({u, v});
             return AttributedGraph(features, e, labels, parse_split(split), num_classes);
           }),
           py::arg("features"), py::arg("edges"), py::arg("labels"), py::arg("split"),
           py::arg("num_classes") = -1)
      .def_property_readonly("node_count", &AttributedGraph::node_count)
      .def_property_readonly("feature_dim", &AttributedGraph::feature_dim)
      .def_property_readonly("num_classes", &AttributedGraph::num_classes)
      .def_property_readonly("features", &AttributedGraph::features)
      .def_property_readonly("labels", &AttributedGraph::labels)
      .def_property_readonly("edges",
                             [](const AttributedGraph& g) {
                               std::vector<std::pair<int, int>> out;
                               for (const Edge& e : g.edges()) out.emplace_back(e.u, e.v);
                               return out;
                             })
      .def_property_readonly("split",
                             [](const AttributedGraph& g) {
                               std::vector<std::string> out;
                               for (SplitTag t : g.split()) out.emplace_back(to_string(t));
                               return out;
                             })
      .def("class_counts", [](const AttributedGraph& g) { return class_counts(make_pools(g), g.num_classes()); });

  m.def(
      "default_config", [] { return json_to_py(to_json(PipelineConfig{})); },
      "Default pipeline configuration as a dict.");
  m.def(
      "resolve_config", [](const std::string& text) { return json_to_py(to_json(config_from(text))); },
      py::arg("config"), "Defaults with a JSON config string applied.");

  m.def("load_dataset", &load_dataset, py::arg("root"));
  m.def("save_dataset", &save_dataset, py::arg("graph"), py::arg("root"));

  m.def("kl_standard_normal", &kl_standard_normal, py::arg("mu"), py::arg("log_sigma"));
  m.def("structure_reconstruction_loss", &structure_reconstruction_loss, py::arg("target"), py::arg("a_hat"));
  m.def("siamese_contrastive_loss", &siamese_contrastive_loss, py::arg("x1"), py::arg("x2"), py::arg("tau"));

  m.def(
      "construct_scenario",
      [](const AttributedGraph& g, double lambda, const std::string& mode, const std::string& minority,
         std::uint64_t seed) {
        const auto classes = select_minority_classes(g, parse_minority_policy(minority));
        auto [built, s] = construct_scenario(g, parse_construction_mode(mode), lambda, classes, seed);
        const AuditReport audit = audit_scenario(g, built, s);
        return py::make_tuple(built, json_to_py(s.to_json()), json_to_py(audit.to_json()));
      },
      py::arg("graph"), py::arg("lam"), py::arg("mode") = "rigorous", py::arg("minority") = "half",
      py::arg("seed") = 0, "Returns (graph, scenario dict, audit dict).");

  py::class_<VgaeParameters>(m, "Model")
      .def("save", [](const VgaeParameters& p, const std::filesystem::path& path) { save_checkpoint(p, path); })
      .def_static("load", &load_checkpoint);

  m.def(
      "train",
      [](const AttributedGraph& g, const std::string& config, std::uint64_t seed) {
        PipelineConfig c = config_from(config);
        c.train.seed = seed;
        const AttributedGraph x = preprocess(g, c);
        TrainResult r = train(x, make_pools(x), c.train);
        return py::make_tuple(r.params, r.history.to_csv());
      },
      py::arg("graph"), py::arg("config") = "", py::arg("seed") = 0,
      "Trains the VGAE; returns (model, history csv). `config` is a JSON string.");

  m.def("embed", &embed_nodes, py::arg("model"), py::arg("graph"));

  m.def(
      "generate",
      [](const VgaeParameters& p, const AttributedGraph& g, const std::string& scenario, std::uint64_t seed) {
        const ImbalanceScenario s = ImbalanceScenario::from_json(nlohmann::json::parse(scenario));
        const auto nodes = generate_minority_nodes(p, g, make_pools(g), s, seed);
        Matrix z(static_cast<Eigen::Index>(nodes.size()), p.mu_weight.cols());
        std::vector<int> classes, sources;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          z.row(static_cast<Eigen::Index>(i)) = nodes[i].latent.transpose();
          classes.push_back(nodes[i].class_id);
          sources.push_back(nodes[i].source_node);
        }
        return py::make_tuple(z, classes, sources);
      },
      py::arg("model"), py::arg("graph"), py::arg("scenario"), py::arg("seed") = 0,
      "Returns (latents, class ids, source nodes). `scenario` is the JSON text from construct_scenario.");

  m.def(
      "compute_metrics",
      [](const std::vector<int>& pred, const std::vector<int>& gold, int k) {
        const MetricTriple t = compute_metrics(pred, gold, k);
        py::dict d;
        d["acc"] = t.acc;
        d["bacc"] = t.bacc;
        d["f1"] = t.macro_f1;
        return d;
      },
      py::arg("pred"), py::arg("gold"), py::arg("num_classes"));

  m.def(
      "run_pipeline",
      [](const AttributedGraph& g, double lambda, const std::string& mode, const std::vector<std::uint64_t>& seeds,
         const std::string& config, const std::string& dataset) {
        const PipelineConfig c = config_from(config);
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(g, dataset, lambda, parse_construction_mode(mode), seeds, c);
        }
        return json_to_py(to_json(r));
      },
      py::arg("graph"), py::arg("lam"), py::arg("mode") = "rigorous", py::arg("seeds") = std::vector<std::uint64_t>{0},
      py::arg("config") = "", py::arg("dataset") = "graph", "Full pipeline; returns the report as a dict.");
}
