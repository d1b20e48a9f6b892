#include "ais/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "ais/exact.hpp"
#include "json.hpp"

namespace ais::cli {

using json = nlohmann::json;

Assignment parse_evidence(const std::string& text) {
  Assignment out;
  if (text.empty()) return out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    item = first == std::string::npos ? std::string() : item.substr(first, last - first + 1);
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw ParseError("evidence item '" + item + "' is not of the form NAME=VALUE");
    }
    const std::string name = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    int v = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
      throw ParseError("evidence value '" + value + "' for '" + name + "' is not an integer");
    }
    if (!out.emplace(name, v).second) throw ParseError("evidence names '" + name + "' twice");
  }
  return out;
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

// Evidence names must be declared chance variables with in-range values.
void check_evidence(const Model& model, const Assignment& evidence) {
  const Network& net = chance_network(model);
  std::vector<std::string> problems;
  for (const auto& [name, value] : evidence) {
    auto idx = net.index_of(name);
    if (!idx) {
      problems.push_back("evidence names undeclared variable '" + name + "'");
    } else if (value < 0 || value >= net.variables[*idx].arity) {
      problems.push_back("evidence value " + std::to_string(value) + " for '" + name + "' is outside [0, " +
                         std::to_string(net.variables[*idx].arity) + ")");
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
}

template <typename T>
T field_or(const json& obj, const char* key, T fallback) {
  return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ParseError(where + ": unknown field \"" + key + "\"");
  }
}

AdaptConfig adapt_config_from(const std::string& method, std::optional<double> beta, double gamma, std::size_t batch,
                              std::size_t updates, const std::string& projection, std::optional<bool> smoothing,
                              std::optional<std::size_t> min_batch) {
  AdaptConfig config;
  config.kind = parse_gradient_kind(method);
  config.beta = beta;
  config.gamma = gamma;
  config.batch_size = batch;
  config.total_updates = updates;
  config.projection = parse_projection_mode(projection);
  config.dirichlet_smoothing = smoothing;
  if (min_batch) config.min_local_batch = *min_batch;
  return config;
}

std::string theta_csv(const EstimationProblem& problem, const Trace& trace) {
  std::ostringstream out;
  out << "t,variable,row,value,theta\n";
  auto dump = [&](std::size_t t, const SamplerParams& theta) {
    const auto free = problem.free_vars();
    for (std::size_t m = 0; m < theta.tables.size(); ++m) {
      for (std::size_t j = 0; j < theta.tables[m].rows(); ++j) {
        for (std::size_t k = 0; k < theta.tables[m].cols(); ++k) {
          out << t << ',' << problem.name(free[m]) << ',' << j << ',' << k << ','
              << format_double(theta.tables[m](j, k)) << '\n';
        }
      }
    }
  };
  dump(0, trace.initial);
  for (const auto& step : trace.steps) dump(step.t, step.theta);
  return out.str();
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed experiment config: ") + e.what());
  }
  reject_unknown(doc, "experiment",
                 {"model", "evidence", "action", "replications", "lw_multiplier", "seed", "checkpoints",
                  "variance_stride", "threads", "methods", "mse_csv", "variance_csv"});
  if (!doc.contains("model") || !doc.contains("methods") || !doc.contains("checkpoints")) {
    throw ParseError("experiment: \"model\", \"methods\" and \"checkpoints\" are required");
  }

  try {
    std::filesystem::path model_path = doc.at("model").get<std::string>();
    if (model_path.is_relative()) model_path = std::filesystem::path(base_dir) / model_path;
    Model model = load_file(model_path.string());

    Assignment evidence;
    if (doc.contains("evidence")) {
      for (const auto& [name, value] : doc.at("evidence").items()) evidence[name] = value.get<int>();
    }
    check_evidence(model, evidence);
    std::optional<int> action;
    if (doc.contains("action")) action = doc.at("action").get<int>();

    ExperimentConfig config;
    config.problem = std::make_shared<const EstimationProblem>(std::move(model), evidence, action);
    config.replications = field_or<std::size_t>(doc, "replications", 40);
    config.lw_multiplier = field_or<std::size_t>(doc, "lw_multiplier", 2);
    config.master_seed = field_or<std::uint64_t>(doc, "seed", Rng::kDefaultSeed);
    config.checkpoints = doc.at("checkpoints").get<std::vector<std::size_t>>();
    config.variance_stride = field_or<std::size_t>(doc, "variance_stride", 0);
    config.threads = field_or<std::size_t>(doc, "threads", 0);

    for (std::size_t i = 0; i < doc.at("methods").size(); ++i) {
      const json& m = doc.at("methods")[i];
      const std::string where = "methods[" + std::to_string(i) + "]";
      reject_unknown(m, where, {"name", "method", "beta", "gamma", "batch", "projection", "smoothing", "min_batch"});
      const std::string method = m.at("method").get<std::string>();
      const std::string name = field_or<std::string>(m, "name", method);
      if (method == "lw") {
        config.methods.push_back(MethodSpec::likelihood_weighting(name));
      } else if (method == "optimal") {
        config.methods.push_back(MethodSpec::fixed(name, exact::optimal_params(*config.problem)));
      } else {
        std::optional<double> beta;
        if (m.contains("beta")) beta = m.at("beta").get<double>();
        std::optional<bool> smoothing;
        if (m.contains("smoothing")) smoothing = m.at("smoothing").get<bool>();
        std::optional<std::size_t> min_batch;
        if (m.contains("min_batch")) min_batch = m.at("min_batch").get<std::size_t>();
        config.methods.push_back(MethodSpec::adaptive(
            name, adapt_config_from(method, beta, field_or<double>(m, "gamma", 0.1), field_or<std::size_t>(m, "batch", 1),
                                    1, field_or<std::string>(m, "projection", "mean"), smoothing, min_batch)));
      }
    }
    return config;
  } catch (const json::exception& e) {
    throw ParseError(std::string("experiment config: ") + e.what());
  }
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive importance sampling for Bayesian networks and influence diagrams", "ais"};
  app.require_subcommand(1);

  std::string model_path;
  std::string evidence_text;
  std::optional<int> action;
  std::uint64_t seed = Rng::kDefaultSeed;

  auto* validate_cmd = app.add_subcommand("validate", "check a model file");
  validate_cmd->add_option("file", model_path, "model file")->required();

  bool with_variance = false;
  double gamma = 0.0;
  auto* exact_cmd = app.add_subcommand("exact", "exact value by enumeration");
  exact_cmd->add_option("file", model_path, "model file")->required();
  exact_cmd->add_option("--evidence", evidence_text, "observations, e.g. X2=1,X3=0");
  exact_cmd->add_option("--action", action, "action index (influence diagrams)");
  exact_cmd->add_flag("--variance", with_variance, "also print Var[w] of the prior sampler");
  exact_cmd->add_option("--gamma", gamma, "epsilon-boundary factor of the sampler used with --variance");

  std::size_t samples = 1000;
  auto* estimate_cmd = app.add_subcommand("estimate", "likelihood-weighting estimate");
  estimate_cmd->add_option("file", model_path, "model file")->required();
  estimate_cmd->add_option("--evidence", evidence_text, "observations, e.g. X2=1");
  estimate_cmd->add_option("--action", action, "action index (influence diagrams)");
  estimate_cmd->add_option("--samples", samples, "number of samples")->check(CLI::PositiveNumber);
  estimate_cmd->add_option("--seed", seed, "random seed");

  std::string method = "var";
  std::size_t updates = 100;
  std::size_t batch = 1;
  std::optional<double> beta;
  double adapt_gamma = 0.1;
  std::string projection = "mean";
  std::string trace_path = "trace.csv";
  std::string theta_path;
  std::optional<bool> smoothing;
  std::optional<std::size_t> min_batch;
  auto* adapt_cmd = app.add_subcommand("adapt", "adaptive importance-sampling estimate");
  adapt_cmd->add_option("file", model_path, "model file")->required();
  adapt_cmd->add_option("--evidence", evidence_text, "observations, e.g. X2=1");
  adapt_cmd->add_option("--action", action, "action index (influence diagrams)");
  adapt_cmd->add_option("--method", method, "var|l2|kl1|kl2|kls|local-l2|local-kl1|local-kl2|local-kls|sis");
  adapt_cmd->add_option("--updates", updates, "number of updates T")->check(CLI::PositiveNumber);
  adapt_cmd->add_option("--batch", batch, "samples per update N(t)")->check(CLI::PositiveNumber);
  adapt_cmd->add_option("--beta", beta, "step-size numerator: alpha(t) = beta / t");
  adapt_cmd->add_option("--gamma", adapt_gamma, "epsilon-boundary factor");
  adapt_cmd->add_option("--projection", projection, "mean|literal");
  adapt_cmd->add_option("--smoothing", smoothing, "Dirichlet smoothing of the empirical distribution");
  adapt_cmd->add_option("--min-batch", min_batch, "smallest batch accepted by empirical-distribution methods");
  adapt_cmd->add_option("--seed", seed, "random seed");
  adapt_cmd->add_option("--trace-out", trace_path, "trace CSV path");
  adapt_cmd->add_option("--theta-out", theta_path, "optional CSV of the sampler parameters at every step");

  std::string config_path;
  std::optional<std::uint64_t> experiment_seed;
  std::string mse_path;
  std::string variance_path;
  auto* experiment_cmd = app.add_subcommand("experiment", "replicated MSE / variance experiment");
  experiment_cmd->add_option("config", config_path, "experiment JSON")->required();
  experiment_cmd->add_option("--seed", experiment_seed, "override the master seed");
  experiment_cmd->add_option("--mse-out", mse_path, "MSE CSV path");
  experiment_cmd->add_option("--variance-out", variance_path, "variance CSV path");

  std::vector<const char*> argv{"ais"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    auto make_problem = [&](Model model) {
      const Assignment evidence = parse_evidence(evidence_text);
      check_evidence(model, evidence);
      return EstimationProblem(std::move(model), evidence, action);
    };

    if (*validate_cmd) {
      load(read_text(model_path));  // throws on any violation
      out << "ok\n";
    } else if (*exact_cmd) {
      Model model = load(read_text(model_path));
      const auto* id = std::get_if<InfluenceDiagram>(&model);
      if (id && !action) {
        const Assignment evidence = parse_evidence(evidence_text);
        check_evidence(model, evidence);
        const auto choice = select_action(*id, evidence, exact_evaluator());
        out << "action,value\n";
        for (std::size_t a = 0; a < choice.values.size(); ++a) out << a << ',' << format_double(choice.values[a]) << '\n';
        out << "best," << choice.action << '\n';
      } else {
        const EstimationProblem problem = make_problem(std::move(model));
        out << format_double(exact::true_value(problem)) << '\n';
        if (with_variance) {
          out << format_double(exact::weight_variance(problem, init_params(problem, gamma))) << '\n';
        }
      }
    } else if (*estimate_cmd) {
      const EstimationProblem problem = make_problem(load(read_text(model_path)));
      err << "seed " << seed << '\n';
      Rng rng(seed);
      out << format_double(batch_estimate(problem, init_params(problem, 0.0), samples, rng).estimate) << '\n';
    } else if (*adapt_cmd) {
      const EstimationProblem problem = make_problem(load(read_text(model_path)));
      AdaptConfig config = adapt_config_from(method, beta, adapt_gamma, batch, updates, projection, smoothing, min_batch);
      config.record_theta = !theta_path.empty();
      err << "seed " << seed << '\n';
      Rng rng(seed);
      const AdaptResult result = adapt_loop(problem, config, rng);
      std::ostringstream trace;
      write_trace_csv(trace, result.trace);
      write_text(trace_path, trace.str());
      if (!theta_path.empty()) write_text(theta_path, theta_csv(problem, result.trace));
      out << format_double(result.trace.steps.back().running_estimate) << '\n';
    } else if (*experiment_cmd) {
      const std::string text = read_text(config_path);
      ExperimentConfig config =
          parse_experiment_config(text, std::filesystem::path(config_path).parent_path().string());
      if (experiment_seed) config.master_seed = *experiment_seed;
      const json doc = json::parse(text);
      if (mse_path.empty()) mse_path = field_or<std::string>(doc, "mse_csv", "mse.csv");
      if (variance_path.empty()) variance_path = field_or<std::string>(doc, "variance_csv", "variance.csv");
      err << "seed " << config.master_seed << '\n';

      const ExperimentResult result = run_experiment(config);
      std::ostringstream mse;
      write_mse_csv(mse, result.mse);
      write_text(mse_path, mse.str());
      if (config.variance_stride > 0) {
        std::ostringstream variance;
        write_variance_csv(variance, result.variance);
        write_text(variance_path, variance.str());
      }
      out << "wrote " << mse_path;
      if (config.variance_stride > 0) out << " and " << variance_path;
      out << '\n';
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace ais::cli
