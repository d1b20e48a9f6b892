#include "ais/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "ais/exact.hpp"

namespace ais {

MethodSpec MethodSpec::likelihood_weighting(std::string name) {
  MethodSpec m;
  m.name = std::move(name);
  m.type = Type::LikelihoodWeighting;
  return m;
}

MethodSpec MethodSpec::adaptive(std::string name, AdaptConfig config) {
  MethodSpec m;
  m.name = std::move(name);
  m.type = Type::Adaptive;
  m.adapt = config;
  return m;
}

MethodSpec MethodSpec::fixed(std::string name, SamplerParams theta) {
  MethodSpec m;
  m.name = std::move(name);
  m.type = Type::Fixed;
  m.theta = std::move(theta);
  return m;
}

void ExperimentConfig::validate() const {
  if (!problem) throw DomainError("experiment has no problem");
  if (methods.empty()) throw DomainError("experiment has no methods");
  if (replications < 1) throw DomainError("replications must be at least 1");
  if (lw_multiplier < 1) throw DomainError("the LW sample multiplier must be at least 1");
  if (checkpoints.empty()) throw DomainError("experiment has no checkpoints");
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    if (checkpoints[c] < 1 || (c > 0 && checkpoints[c] <= checkpoints[c - 1])) {
      throw DomainError("checkpoints must be positive and strictly increasing");
    }
  }
  for (const auto& m : methods) {
    if (m.type == MethodSpec::Type::Adaptive) {
      m.adapt.validate();
      if (checkpoints.front() < m.adapt.batch_size) {
        throw DomainError("method '" + m.name + "': first checkpoint is smaller than one batch");
      }
    } else if (m.type == MethodSpec::Type::Fixed) {
      check_shape(*problem, m.theta);
    }
  }
}

namespace {

struct MethodRun {
  std::vector<double> estimates;  // one per checkpoint
  std::vector<VariancePoint> variance;
};

// Draws from a fixed sampler, reporting the running mean after scale * c samples for each checkpoint c.
MethodRun run_fixed(const EstimationProblem& problem, const SamplerParams& theta, std::span<const std::size_t> checkpoints,
                    std::size_t scale, std::size_t stride, Rng& rng) {
  MethodRun run;
  double sum = 0.0;
  std::size_t drawn = 0;
  for (std::size_t c : checkpoints) {
    for (; drawn < scale * c; ++drawn) sum += weight(problem, theta, draw(theta, problem, rng)).weight;
    run.estimates.push_back(sum / static_cast<double>(drawn));
  }
  if (stride > 0) {
    const double var = exact::weight_variance(problem, theta);
    for (std::size_t s = 0; s <= checkpoints.back(); s += stride) run.variance.push_back({s, s, var});
  }
  return run;
}

MethodRun run_adaptive(const EstimationProblem& problem, AdaptConfig config, std::span<const std::size_t> checkpoints,
                       std::size_t stride, Rng& rng) {
  const std::size_t n = config.batch_size;
  config.total_updates = (checkpoints.back() + n - 1) / n;
  config.record_theta = stride > 0;
  const AdaptResult result = adapt_loop(problem, config, rng);
  MethodRun run;
  for (std::size_t c : checkpoints) run.estimates.push_back(result.trace.steps[c / n - 1].running_estimate);
  if (stride > 0) run.variance = variance_curve(problem, result.trace, stride);
  return run;
}

// P(X >= wins) for X ~ Binomial(trials, 1/2).
double sign_test_upper_tail(std::size_t wins, std::size_t trials) {
  if (trials == 0) return 1.0;
  double tail = 0.0;
  for (std::size_t k = wins; k <= trials; ++k) {
    const double log_term = std::lgamma(static_cast<double>(trials) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                            std::lgamma(static_cast<double>(trials - k) + 1.0) -
                            static_cast<double>(trials) * std::log(2.0);
    tail += std::exp(log_term);
  }
  return std::min(tail, 1.0);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const EstimationProblem& problem = *config.problem;
  const std::size_t methods = config.methods.size();
  const std::size_t reps = config.replications;

  ExperimentResult result;
  result.true_value = exact::true_value(problem);

  // runs[r][m]
  std::vector<std::vector<MethodRun>> runs(reps, std::vector<MethodRun>(methods));
  auto run_replication = [&](std::size_t r) {
    const std::uint64_t seed = replication_seed(config.master_seed, r);
    for (std::size_t m = 0; m < methods; ++m) {
      const MethodSpec& spec = config.methods[m];
      Rng rng(seed);
      switch (spec.type) {
        case MethodSpec::Type::LikelihoodWeighting:
          runs[r][m] = run_fixed(problem, init_params(problem, 0.0), config.checkpoints, config.lw_multiplier,
                                 config.variance_stride, rng);
          break;
        case MethodSpec::Type::Fixed:
          runs[r][m] = run_fixed(problem, spec.theta, config.checkpoints, 1, config.variance_stride, rng);
          break;
        case MethodSpec::Type::Adaptive:
          runs[r][m] = run_adaptive(problem, spec.adapt, config.checkpoints, config.variance_stride, rng);
          break;
      }
    }
  };

  std::size_t threads = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  threads = std::min(threads, reps);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < reps; r = next++) {
          try {
            run_replication(r);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = reps;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);

  const auto lw = std::find_if(config.methods.begin(), config.methods.end(), [](const MethodSpec& m) {
    return m.type == MethodSpec::Type::LikelihoodWeighting;
  });
  const std::size_t lw_index = static_cast<std::size_t>(lw - config.methods.begin());

  result.errors.assign(methods, std::vector<std::vector<double>>(config.checkpoints.size()));
  for (std::size_t m = 0; m < methods; ++m) {
    for (std::size_t c = 0; c < config.checkpoints.size(); ++c) {
      double sq = 0.0;
      for (std::size_t r = 0; r < reps; ++r) {
        const double err = runs[r][m].estimates[c] - result.true_value;
        result.errors[m][c].push_back(err);
        sq += err * err;
      }
      result.mse.push_back(MseRow{config.methods[m].name, config.checkpoints[c], sq / static_cast<double>(reps), reps, {}});
    }
  }
  if (lw != config.methods.end()) {
    for (std::size_t m = 0; m < methods; ++m) {
      if (m == lw_index) continue;
      for (std::size_t c = 0; c < config.checkpoints.size(); ++c) {
        std::size_t wins = 0, trials = 0;
        for (std::size_t r = 0; r < reps; ++r) {
          const double mine = std::abs(result.errors[m][c][r]);
          const double base = std::abs(result.errors[lw_index][c][r]);
          if (mine == base) continue;
          ++trials;
          if (mine < base) ++wins;
        }
        result.mse[m * config.checkpoints.size() + c].sign_test_p = sign_test_upper_tail(wins, trials);
      }
    }
  }

  if (config.variance_stride > 0) {
    for (std::size_t m = 0; m < methods; ++m) {
      const std::size_t points = runs[0][m].variance.size();
      for (std::size_t p = 0; p < points; ++p) {
        double sum = 0.0;
        for (std::size_t r = 0; r < reps; ++r) sum += runs[r][m].variance[p].true_variance;
        VariancePoint point = runs[0][m].variance[p];
        point.true_variance = sum / static_cast<double>(reps);
        result.variance.push_back(VarianceRow{config.methods[m].name, point});
      }
    }
  }
  return result;
}

std::vector<VariancePoint> variance_curve(const EstimationProblem& problem, const Trace& trace, std::size_t stride) {
  if (stride < 1) throw DomainError("variance_curve: stride must be at least 1");
  const std::size_t batch = trace.steps.empty() ? 0 : trace.steps.front().sample_count;
  std::vector<VariancePoint> curve;
  for (std::size_t s = 0; s <= trace.steps.size(); s += stride) {
    const SamplerParams& theta = s == 0 ? trace.initial : trace.steps[s - 1].theta;
    if (theta.tables.empty() && !problem.free_vars().empty()) {
      throw DomainError("variance_curve: trace step " + std::to_string(s) + " has no parameter snapshot");
    }
    curve.push_back({s, s * batch, exact::weight_variance(problem, theta)});
  }
  return curve;
}

ValueEvaluator exact_evaluator() {
  return [](const EstimationProblem& problem) { return exact::true_value(problem); };
}

ValueEvaluator lw_evaluator(std::size_t samples, std::uint64_t seed) {
  return [samples, seed](const EstimationProblem& problem) {
    Rng rng(seed);
    return batch_estimate(problem, init_params(problem, 0.0), samples, rng).estimate;
  };
}

ValueEvaluator adaptive_evaluator(AdaptConfig config, std::uint64_t seed) {
  config.record_theta = false;
  return [config, seed](const EstimationProblem& problem) {
    Rng rng(seed);
    return adapt_loop(problem, config, rng).estimate.value;
  };
}

ActionChoice select_action(const InfluenceDiagram& id, const Assignment& evidence, const ValueEvaluator& evaluator) {
  if (id.decision.arity < 1) throw DomainError("decision has no actions");
  ActionChoice choice;
  for (int a = 0; a < id.decision.arity; ++a) {
    choice.values.push_back(evaluator(EstimationProblem(id, evidence, a)));
    if (choice.values[static_cast<std::size_t>(a)] > choice.values[static_cast<std::size_t>(choice.action)]) {
      choice.action = a;
    }
  }
  return choice;
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

void write_mse_csv(std::ostream& out, const std::vector<MseRow>& rows) {
  out << "method,checkpoint_samples,mse,replications,sign_test_p\n";
  for (const auto& row : rows) {
    out << row.method << ',' << row.checkpoint_samples << ',' << format_double(row.mse) << ',' << row.replications << ','
        << (row.sign_test_p ? format_double(*row.sign_test_p) : std::string()) << '\n';
  }
}

void write_variance_csv(std::ostream& out, const std::vector<VarianceRow>& rows) {
  out << "method,t,total_samples,true_variance\n";
  for (const auto& row : rows) {
    out << row.method << ',' << row.point.t << ',' << row.point.total_samples << ','
        << format_double(row.point.true_variance) << '\n';
  }
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
  out << "t,alpha,batch_estimate,running_estimate,boundary_hits,warnings\n";
  for (const auto& step : trace.steps) {
    std::string warnings;
    for (const auto& w : step.warnings) {
      if (!warnings.empty()) warnings += "; ";
      warnings += w;
    }
    // Warnings are free text; keep the field CSV-safe.
    std::replace(warnings.begin(), warnings.end(), ',', ';');
    out << step.t << ',' << format_double(step.alpha) << ',' << format_double(step.batch_estimate) << ','
        << format_double(step.running_estimate) << ',' << step.boundary_hits << ',' << warnings << '\n';
  }
}

}  // namespace ais
