// Copyright (c) 2026 The vqdprobe Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <vector>

#include "vqd/cli.hpp"
#include "vqd/corpus.hpp"
#include "vqd/embedstore.hpp"
#include "vqd/errors.hpp"
#include "vqd/harness.hpp"
#include "vqd/linmod.hpp"
#include "vqd/metrics.hpp"
#include "vqd/modelsel.hpp"
#include "vqd/synth.hpp"

namespace py = pybind11;
using namespace vqd;

namespace {

std::vector<double> to_vec(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["metric"] = std::string(to_string(r.metric));
  d["point"] = r.point;
  d["ci_low"] = r.ci_low;
  d["ci_high"] = r.ci_high;
  d["n"] = r.n;
  d["n_boot"] = r.n_boot;
  d["seed"] = r.seed;
  return d;
}

py::dict fit_dict(const LinearFit& f) {
  py::dict d;
  d["weights"] = f.weights;
  d["intercept"] = f.intercept;
  d["iterations"] = f.iterations;
  d["converged"] = f.converged;
  return d;
}

BootstrapOptions boot(size_t n_boot, uint64_t seed, double level) {
  BootstrapOptions o;
  o.n_boot = n_boot;
  o.seed = seed;
  o.level = level;
  return o;
}

py::list manifest_rows(const Manifest& m) {
  py::list rows;
  for (const auto& r : m.records) {
    py::dict d;
    d["utterance_id"] = r.utterance_id;
    d["speaker_id"] = r.speaker_id;
    d["category"] = r.category ? py::cast(std::string(to_string(*r.category))) : py::none();
    d["split"] = r.split ? py::cast(std::string(to_string(*r.split))) : py::none();
    for (Dimension dim : kAllDimensions) {
      const auto& s = r.scores[index_of(dim)];
      d[py::str(std::string(to_string(dim)))] = s ? py::cast(*s) : py::none();
    }
    d["severity"] = r.severity ? py::cast(*r.severity) : py::none();
    d["emotion"] = r.emotion ? py::cast(std::string(to_string(*r.emotion))) : py::none();
    d["duration_s"] = r.duration_s ? py::cast(*r.duration_s) : py::none();
    rows.append(d);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Linear probes of perceptual voice-quality dimensions";
  m.attr("__version__") = VQD_VERSION;

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::exception<Error>(m, "VqdError", PyExc_RuntimeError); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object& type = error_type.get_stored();
      py::object exc = type(py::str(e.what()));
      exc.attr("code") = std::string(error_code_name(e.code()));
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  // metrics
  m.def("average_ranks", [](py::array_t<double> v) { return average_ranks(to_vec(v)); });
  m.def("pearson", [](py::array_t<double> p, py::array_t<double> t) {
    return pearson(to_vec(p), to_vec(t));
  });
  m.def("spearman", [](py::array_t<double> p, py::array_t<double> t) {
    return spearman(to_vec(p), to_vec(t));
  });
  m.def("auc", [](py::array_t<double> s, py::array_t<double> l) {
    return auc(to_vec(s), to_vec(l));
  });
  m.def(
      "bootstrap_spearman",
      [](py::array_t<double> p, py::array_t<double> t, size_t n_boot, uint64_t seed,
         double level) {
        return report_dict(bootstrap_spearman(to_vec(p), to_vec(t), boot(n_boot, seed, level)));
      },
      py::arg("pred"), py::arg("truth"), py::arg("n_boot") = 1000, py::arg("seed") = 0,
      py::arg("level") = 0.95);
  m.def(
      "bootstrap_auc",
      [](py::array_t<double> s, py::array_t<double> l, size_t n_boot, uint64_t seed,
         double level) {
        return report_dict(bootstrap_auc(to_vec(s), to_vec(l), boot(n_boot, seed, level)));
      },
      py::arg("scores"), py::arg("labels"), py::arg("n_boot") = 1000, py::arg("seed") = 0,
      py::arg("level") = 0.95);
  m.def("label_weighted_score", [](py::array_t<double> p, py::array_t<double> v) {
    return label_weighted_score(to_vec(p), to_vec(v));
  });

  // linmod
  m.def(
      "lasso_fit",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
        return fit_dict(lasso_fit(X, y, lambda));
      },
      py::arg("X"), py::arg("y"), py::arg("lam"));
  m.def(
      "logistic_fit",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y01, double lambda) {
        return fit_dict(logistic_fit(X, y01, lambda));
      },
      py::arg("X"), py::arg("y"), py::arg("lam"));
  m.def("lasso_lambda_max", &lasso_lambda_max, py::arg("X"), py::arg("y"));
  m.def(
      "lambda_grid",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::string& task,
         size_t k) { return lambda_grid(X, y, parse_task(task), k); },
      py::arg("X"), py::arg("y"), py::arg("task") = "regression",
      py::arg("k") = kLambdaGridSize);
  m.def(
      "binarize_threshold",
      [](const std::vector<int>& scores) {
        const auto c = binarize_threshold(scores);
        return py::make_tuple(c.threshold, c.positive_rate);
      },
      py::arg("scores"));

  py::class_<ProbeModel>(m, "ProbeModel")
      .def_property_readonly("task", [](const ProbeModel& p) { return std::string(to_string(p.task)); })
      .def_property_readonly("dimension",
                             [](const ProbeModel& p) { return std::string(to_string(p.dimension)); })
      .def_readonly("backend_name", &ProbeModel::backend_name)
      .def_readonly("weights", &ProbeModel::weights)
      .def_readonly("intercept", &ProbeModel::intercept)
      .def_readonly("lam", &ProbeModel::lambda)
      .def_readonly("binarization_threshold", &ProbeModel::binarization_threshold)
      .def("predict", [](const ProbeModel& p, const Eigen::MatrixXd& X) { return predict(p, X); });
  m.def("load_model", [](const std::filesystem::path& p) { return load_model(p); });

  // embedstore
  py::class_<EmbeddingTable>(m, "EmbeddingTable")
      .def(py::init<std::string, uint32_t>(), py::arg("backend_name"), py::arg("dim"))
      .def_property_readonly("backend_name", &EmbeddingTable::backend_name)
      .def_property_readonly("dim", &EmbeddingTable::dim)
      .def_property_readonly("ids", &EmbeddingTable::ids)
      .def("__len__", &EmbeddingTable::rows)
      .def("add_row",
           [](EmbeddingTable& t, std::string id,
              py::array_t<float, py::array::c_style | py::array::forcecast> v) {
             if (v.ndim() != 1) throw py::value_error("expected a 1-d array");
             t.add_row(std::move(id), {v.data(), static_cast<size_t>(v.size())});
           })
      .def("values",
           [](const EmbeddingTable& t) {
             py::array_t<float> out({t.rows(), static_cast<size_t>(t.dim())});
             std::copy(t.values().begin(), t.values().end(), out.mutable_data());
             return out;
           })
      .def("bitwise_equal", &EmbeddingTable::bitwise_equal);
  m.def("read_table", [](const std::filesystem::path& p) { return read_table(p); });
  m.def("write_table",
        [](const EmbeddingTable& t, const std::filesystem::path& p) { write_table(t, p); });
  m.def("encode_table", [](const EmbeddingTable& t) { return py::bytes(encode_table(t)); });
  m.def("decode_table", [](const py::bytes& b) { return decode_table(std::string(b)); });

  // corpus
  m.def("load_manifest",
        [](const std::filesystem::path& p) { return manifest_rows(load_manifest(p)); });
  m.def("quantize_to_scale", [](py::array_t<double> z) { return quantize_to_scale(to_vec(z)); });
  m.def(
      "synth",
      [](const std::filesystem::path& out, size_t n_speakers, size_t utterances_per_speaker,
         uint32_t dim, uint64_t seed, double noise_sigma, bool emit_severity) {
        SynthSpec spec;
        spec.n_speakers = n_speakers;
        spec.utterances_per_speaker = utterances_per_speaker;
        spec.dim = dim;
        spec.seed = seed;
        spec.noise_sigma = noise_sigma;
        spec.emit_severity = emit_severity;
        const auto c = generate(spec);
        std::filesystem::create_directories(out);
        write_manifest(c.manifest, out / "manifest.csv");
        write_table(c.table, out / "embeddings.vqde");
      },
      py::arg("out"), py::arg("n_speakers") = 200, py::arg("utterances_per_speaker") = 10,
      py::arg("dim") = 64, py::arg("seed") = 0, py::arg("noise_sigma") = 0.25,
      py::arg("emit_severity") = false);

  // harness
  m.def(
      "evaluate",
      [](const std::string& config_json) {
        const auto cfg = config_from_json(nlohmann::json::parse(config_json));
        const auto man = load_manifest(cfg.manifest_path);
        std::vector<EmbeddingTable> tables;
        for (const auto& [_, path] : cfg.embedding_paths) tables.push_back(read_table(path));
        const auto r = run_table1(cfg, man, tables);
        py::list rows;
        for (const auto& c : r.cells) {
          auto d = report_dict(c.report);
          d["backend"] = c.backend;
          d["dimension"] = std::string(to_string(c.dimension));
          rows.append(d);
        }
        return rows;
      },
      py::arg("config_json"),
      "Run the test-split evaluation for a JSON config; returns one dict per cell.");
  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> owned{"vqd-probe"};
        owned.insert(owned.end(), args.begin(), args.end());
        std::vector<char*> argv;
        for (auto& a : owned) argv.push_back(a.data());
        py::gil_scoped_release release;
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Run vqd-probe with the given arguments; returns the exit code.");
}
