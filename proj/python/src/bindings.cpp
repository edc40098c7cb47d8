#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "f2l/config.hpp"
#include "f2l/data.hpp"
#include "f2l/error.hpp"
#include "f2l/experiment.hpp"
#include "f2l/fedsim.hpp"
#include "f2l/losses.hpp"
#include "f2l/rng.hpp"

namespace py = pybind11;
using namespace f2l;

namespace {

using Rows = std::vector<std::vector<double>>;

Tensor to_tensor(const Rows& rows) {
  if (rows.empty()) throw ShapeError("expected a non-empty matrix");
  std::vector<double> flat;
  for (const auto& r : rows) {
    if (r.size() != rows[0].size()) throw ShapeError("ragged matrix");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return Tensor::matrix(rows.size(), rows[0].size(), std::move(flat));
}

Rows to_rows(const Tensor& t) {
  const auto shape = t.shape();
  Rows out(shape[0], std::vector<double>(shape[1]));
  for (std::size_t r = 0; r < shape[0]; ++r)
    for (std::size_t c = 0; c < shape[1]; ++c) out[r][c] = t.at(r, c);
  return out;
}

ExperimentConfig make_config(const std::map<std::string, std::string>& values) {
  ExperimentConfig c;
  for (const auto& [key, value] : values) set_config_value(c, key, value);
  validate(c);
  return c;
}

std::map<std::string, std::string> config_dict(const ExperimentConfig& c) {
  std::map<std::string, std::string> out;
  for (const auto& key : config_keys()) out[key.name] = get_config_value(c, key.name);
  return out;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

py::list summary_rows(const std::vector<VariantOutcome>& outcomes) {
  py::list rows;
  for (const auto& o : outcomes) {
    py::dict row;
    row["method"] = o.variant.method;
    row["setting"] = o.variant.setting;
    row["repetitions"] = o.tests.size();
    row["mean"] = o.mean;
    row["std"] = o.std;
    std::vector<double> per_rep;
    for (const auto& t : o.tests) per_rep.push_back(t.mean);
    row["repetition_means"] = per_rep;
    rows.append(row);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_f2l, m) {
  m.doc() = "Deterministic federated few-shot learning simulator";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<EpisodeError>(m, "EpisodeError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  m.def("derive_seed", [](std::uint64_t master, const std::vector<std::uint64_t>& path) {
    return derive_seed(master, std::span<const std::uint64_t>(path));
  });

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("size", &Dataset::size)
      .def_property_readonly("dim", &Dataset::dim)
      .def_property_readonly("num_classes", &Dataset::num_classes)
      .def_property_readonly("labels", &Dataset::labels)
      .def_property_readonly("features", [](const Dataset& d) {
        Rows out;
        for (std::size_t i = 0; i < d.size(); ++i) out.emplace_back(d.row(i).begin(), d.row(i).end());
        return out;
      });

  m.def("synth_gaussian", &synth_gaussian, py::arg("num_classes"), py::arg("per_class"), py::arg("dim"),
        py::arg("separation"), py::arg("seed"));
  m.def("load_csv", [](const std::string& path) { return load_csv(path); });

  m.def(
      "split_classes",
      [](std::size_t num_classes, std::size_t base, std::size_t validation, std::size_t novel, std::uint64_t seed) {
        const ClassSplit s = split_classes(num_classes, {base, validation, novel}, seed);
        return py::make_tuple(s.base, s.validation, s.novel);
      },
      py::arg("num_classes"), py::arg("base"), py::arg("validation"), py::arg("novel"), py::arg("seed"));

  m.def(
      "partition",
      [](const Dataset& data, std::size_t clients, const std::string& mode, double alpha, std::uint64_t seed) {
        PartitionMode pm;
        if (mode == "iid") pm = PartitionMode::iid();
        else if (mode == "dirichlet") pm = PartitionMode::dirichlet(alpha);
        else throw ConfigError("partition mode must be iid or dirichlet, got '" + mode + "'");
        return partition(data, clients, pm, seed).clients;
      },
      py::arg("data"), py::arg("clients"), py::arg("mode") = "iid", py::arg("alpha") = 1.0, py::arg("seed") = 0);

  m.def(
      "cross_entropy",
      [](const Rows& logits, const std::vector<int>& labels) { return cross_entropy(to_tensor(logits), labels).item(); },
      py::arg("logits"), py::arg("labels"));
  m.def(
      "mi_loss",
      [](const Rows& h_server, const Rows& h_client, const Rows& client_probs, const std::vector<int>& labels) {
        const MiWeights w = mi_weights(to_tensor(client_probs), labels);
        return mi_loss(to_tensor(h_server), to_tensor(h_client), w).item();
      },
      py::arg("h_server"), py::arg("h_client"), py::arg("client_probs"), py::arg("labels"));
  m.def(
      "adaptive_temperature",
      [](const Rows& logits, const std::vector<int>& labels) {
        return adaptive_temperature(to_tensor(logits), labels).values;
      },
      py::arg("server_logits"), py::arg("labels"));
  m.def(
      "kd_loss",
      [](const Rows& server_logits, const Rows& client_logits, const std::vector<int>& labels) {
        const Tensor zs = to_tensor(server_logits);
        return kd_loss(zs, to_tensor(client_logits), adaptive_temperature(zs, labels)).item();
      },
      py::arg("server_logits"), py::arg("client_logits"), py::arg("labels"));
  m.def(
      "softmax_rows",
      [](const Rows& logits, const std::vector<double>& temperatures) {
        return to_rows(softmax_rows(to_tensor(logits), temperatures));
      },
      py::arg("logits"), py::arg("temperatures"));

  m.def(
      "aggregate",
      [](const std::vector<std::vector<double>>& returns) {
        std::vector<ParamVector> params;
        for (const auto& r : returns) {
          ParamVector p;
          p.add("server.flat", Tensor::matrix(1, r.size(), r));
          params.push_back(std::move(p));
        }
        const ParamVector mean = aggregate(params);
        return std::vector<double>(mean[0].values().begin(), mean[0].values().end());
      },
      py::arg("returns"));

  m.def("config_keys", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : config_keys()) out.emplace_back(k.name, k.section);
    return out;
  });
  m.def(
      "parse_config", [](const std::string& text) { return config_dict(parse_config_text(text)); }, py::arg("text"),
      "Parses config text; returns every key as a string.");
  m.def(
      "serialize_config", [](const std::map<std::string, std::string>& values) {
        return serialize_config(make_config(values));
      },
      py::arg("values"));

  m.def(
      "run_experiment",
      [](const std::map<std::string, std::string>& values, const std::string& mode,
         const std::vector<std::string>& methods, const std::string& param,
         const std::vector<std::string>& sweep_values) {
        const ExperimentConfig c = make_config(values);
        std::vector<Variant> variants;
        if (mode == "run") variants = run_variants(c);
        else if (mode == "baseline") variants = baseline_variants(c, parse_methods(methods));
        else if (mode == "ablate") variants = ablation_variants(c);
        else if (mode == "sweep") variants = sweep_variants(c, param, sweep_values);
        else throw ConfigError("mode must be run, baseline, ablate or sweep, got '" + mode + "'");
        std::vector<VariantOutcome> outcomes;
        {
          py::gil_scoped_release release;
          outcomes = run_experiment(c, variants);
        }
        return summary_rows(outcomes);
      },
      py::arg("config"), py::arg("mode") = "run",
      py::arg("methods") = std::vector<std::string>{"local", "fl_maml", "fl_proto"}, py::arg("param") = "",
      py::arg("values") = std::vector<std::string>{},
      "Runs the variants for `mode` under config['output_dir']; returns the summary rows.");
}
