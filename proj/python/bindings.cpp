#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ais/adapt.hpp"
#include "ais/cli.hpp"
#include "ais/error.hpp"
#include "ais/exact.hpp"
#include "ais/experiment.hpp"
#include "ais/model.hpp"
#include "ais/problem.hpp"

namespace py = pybind11;
using namespace ais;

namespace {

using Rows = std::vector<std::vector<double>>;
using ThetaDict = std::map<std::string, Rows>;

struct PyModel {
  Model model;
};

struct PyProblem {
  std::shared_ptr<const EstimationProblem> problem;
};

Assignment to_assignment(const std::map<std::string, int>& evidence) {
  Assignment out;
  for (const auto& [k, v] : evidence) out[k] = v;
  return out;
}

ThetaDict to_dict(const EstimationProblem& problem, const SamplerParams& theta) {
  ThetaDict out;
  const auto free = problem.free_vars();
  for (std::size_t m = 0; m < free.size(); ++m) {
    const Table& t = theta.tables[m];
    Rows rows(t.rows(), std::vector<double>(t.cols()));
    for (std::size_t j = 0; j < t.rows(); ++j)
      for (std::size_t k = 0; k < t.cols(); ++k) rows[j][k] = t(j, k);
    out[problem.name(free[m])] = std::move(rows);
  }
  return out;
}

SamplerParams from_dict(const EstimationProblem& problem, const ThetaDict& dict) {
  SamplerParams theta = init_params(problem, 0.0);
  const auto free = problem.free_vars();
  if (dict.size() != free.size()) throw DomainError("theta must have one table per free variable");
  for (std::size_t m = 0; m < free.size(); ++m) {
    const auto it = dict.find(problem.name(free[m]));
    if (it == dict.end()) throw DomainError("theta has no table for '" + problem.name(free[m]) + "'");
    Table& t = theta.tables[m];
    if (it->second.size() != t.rows()) throw DomainError("theta table '" + it->first + "' has the wrong row count");
    for (std::size_t j = 0; j < t.rows(); ++j) {
      if (it->second[j].size() != t.cols()) throw DomainError("theta table '" + it->first + "' has a ragged row");
      for (std::size_t k = 0; k < t.cols(); ++k) t(j, k) = it->second[j][k];
    }
  }
  return theta;
}

py::dict trace_step(const TraceStep& s) {
  py::dict d;
  d["t"] = s.t;
  d["alpha"] = s.alpha;
  d["sample_count"] = s.sample_count;
  d["batch_estimate"] = s.batch_estimate;
  d["running_estimate"] = s.running_estimate;
  d["sample_variance"] = s.sample_variance;
  d["boundary_hits"] = s.boundary_hits;
  d["update_skipped"] = s.update_skipped;
  d["warnings"] = s.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Adaptive importance sampling for discrete Bayesian networks and influence diagrams";

  auto base = py::register_exception<Error>(m, "AisError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<StateSpaceError>(m, "StateSpaceError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("is_influence_diagram",
                             [](const PyModel& self) { return std::holds_alternative<InfluenceDiagram>(self.model); })
      .def_property_readonly("variables",
                             [](const PyModel& self) {
                               std::vector<std::string> names;
                               for (const auto& v : chance_network(self.model).variables) names.push_back(v.name);
                               return names;
                             })
      .def("render", [](const PyModel& self) { return render(self.model); }, "Model as JSON text.");

  m.def("load", [](const std::string& text) { return PyModel{load(text)}; }, py::arg("text"),
        "Parse and validate a model from JSON text.");
  m.def("load_file", [](const std::string& path) { return PyModel{load_file(path)}; }, py::arg("path"));
  m.def(
      "validate",
      [](const std::string& text) -> std::vector<std::string> {
        try {
          load(text);
        } catch (const ValidationError& e) {
          return e.violations().empty() ? std::vector<std::string>{e.what()} : e.violations();
        }
        return {};
      },
      py::arg("text"), "List of structural violations; empty when the model is valid.");

  py::class_<PyProblem>(m, "Problem")
      .def(py::init([](const PyModel& model, const std::map<std::string, int>& evidence, std::optional<int> action) {
             return PyProblem{std::make_shared<const EstimationProblem>(model.model, to_assignment(evidence), action)};
           }),
           py::arg("model"), py::arg("evidence") = std::map<std::string, int>{}, py::arg("action") = py::none())
      .def_property_readonly("free_variables",
                             [](const PyProblem& self) {
                               std::vector<std::string> names;
                               for (std::size_t i : self.problem->free_vars()) names.push_back(self.problem->name(i));
                               return names;
                             })
      .def_property_readonly("state_space_size", [](const PyProblem& self) { return self.problem->state_space_size(); });

  m.def("true_value", [](const PyProblem& p) { return exact::true_value(*p.problem); }, py::arg("problem"));

  m.def("prior_params", [](const PyProblem& p, double gamma) { return to_dict(*p.problem, init_params(*p.problem, gamma)); },
        py::arg("problem"), py::arg("gamma") = 0.0);

  m.def(
      "weight_variance",
      [](const PyProblem& p, std::optional<ThetaDict> theta, double gamma) {
        const SamplerParams params = theta ? from_dict(*p.problem, *theta) : init_params(*p.problem, gamma);
        return exact::weight_variance(*p.problem, params);
      },
      py::arg("problem"), py::arg("theta") = py::none(), py::arg("gamma") = 0.0,
      "Exact Var[w] under theta (default: the prior clamped to gamma).");

  m.def(
      "estimate",
      [](const PyProblem& p, std::size_t samples, std::uint64_t seed) {
        Rng rng(seed);
        return batch_estimate(*p.problem, init_params(*p.problem, 0.0), samples, rng).estimate;
      },
      py::arg("problem"), py::arg("samples"), py::arg("seed") = Rng::kDefaultSeed, "Likelihood-weighting estimate.");

  m.def(
      "adapt",
      [](const PyProblem& p, const std::string& method, std::size_t updates, std::size_t batch, std::optional<double> beta,
         double gamma, const std::string& projection, std::optional<bool> smoothing, std::size_t min_batch,
         std::uint64_t seed) {
        AdaptConfig config;
        config.kind = parse_gradient_kind(method);
        config.total_updates = updates;
        config.batch_size = batch;
        config.beta = beta;
        config.gamma = gamma;
        config.projection = parse_projection_mode(projection);
        config.dirichlet_smoothing = smoothing;
        config.min_local_batch = min_batch;
        AdaptResult result;
        {
          py::gil_scoped_release release;
          Rng rng(seed);
          result = adapt_loop(*p.problem, config, rng);
        }
        py::list steps;
        for (const auto& s : result.trace.steps) steps.append(trace_step(s));
        py::dict out;
        out["estimate"] = result.estimate.value;
        out["initial_theta"] = to_dict(*p.problem, result.trace.initial);
        out["final_theta"] = to_dict(*p.problem, result.final_theta);
        out["trace"] = steps;
        return out;
      },
      py::arg("problem"), py::arg("method") = "var", py::arg("updates") = 100, py::arg("batch") = 1,
      py::arg("beta") = py::none(), py::arg("gamma") = 0.1, py::arg("projection") = "mean",
      py::arg("smoothing") = py::none(), py::arg("min_batch") = 50, py::arg("seed") = Rng::kDefaultSeed,
      "Run the adaptive sampler; returns the combined estimate, final parameters and per-step trace.");

  m.def(
      "select_action",
      [](const PyModel& model, const std::map<std::string, int>& evidence) {
        const auto* id = std::get_if<InfluenceDiagram>(&model.model);
        if (!id) throw DomainError("select_action needs an influence diagram");
        const ActionChoice choice = select_action(*id, to_assignment(evidence), exact_evaluator());
        return py::make_tuple(choice.action, choice.values);
      },
      py::arg("model"), py::arg("evidence") = std::map<std::string, int>{},
      "Exact best action (lowest index on ties) and the value of every action.");

  m.def(
      "run_experiment",
      [](const std::string& config_text, const std::string& base_dir, std::optional<std::uint64_t> seed,
         std::optional<std::size_t> threads) {
        ExperimentConfig config = cli::parse_experiment_config(config_text, base_dir);
        if (seed) config.master_seed = *seed;
        if (threads) config.threads = *threads;
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(config);
        }
        py::list mse;
        for (const auto& row : result.mse) {
          py::dict d;
          d["method"] = row.method;
          d["checkpoint_samples"] = row.checkpoint_samples;
          d["mse"] = row.mse;
          d["replications"] = row.replications;
          d["sign_test_p"] = row.sign_test_p ? py::object(py::float_(*row.sign_test_p)) : py::object(py::none());
          mse.append(d);
        }
        py::list variance;
        for (const auto& row : result.variance) {
          py::dict d;
          d["method"] = row.method;
          d["t"] = row.point.t;
          d["total_samples"] = row.point.total_samples;
          d["true_variance"] = row.point.true_variance;
          variance.append(d);
        }
        py::dict out;
        out["true_value"] = result.true_value;
        out["mse"] = mse;
        out["variance"] = variance;
        return out;
      },
      py::arg("config_text"), py::arg("base_dir") = ".", py::arg("seed") = py::none(), py::arg("threads") = py::none(),
      "Run a replicated experiment described by JSON text; model paths resolve against base_dir.");
}
