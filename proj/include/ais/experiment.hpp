#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ais/adapt.hpp"
#include "ais/problem.hpp"
#include "ais/sampling.hpp"

namespace ais {

/// One estimator compared in an experiment.
struct MethodSpec {
  enum class Type {
    LikelihoodWeighting,  // prior sampler, no adaptation, multiplier x samples
    Adaptive,             // adapt_loop with `adapt`
    Fixed,                // fixed sampler `theta`, no adaptation
  };

  std::string name;
  Type type = Type::Adaptive;
  AdaptConfig adapt;
  SamplerParams theta;

  static MethodSpec likelihood_weighting(std::string name = "lw");
  static MethodSpec adaptive(std::string name, AdaptConfig config);
  static MethodSpec fixed(std::string name, SamplerParams theta);
};

struct ExperimentConfig {
  std::shared_ptr<const EstimationProblem> problem;
  std::vector<MethodSpec> methods;
  std::size_t replications = 40;
  std::size_t lw_multiplier = 2;
  std::uint64_t master_seed = Rng::kDefaultSeed;
  std::vector<std::size_t> checkpoints;  // total samples, strictly increasing
  std::size_t variance_stride = 0;       // 0 disables the variance curves
  std::size_t threads = 0;               // 0 = hardware concurrency

  void validate() const;
};

struct MseRow {
  std::string method;
  std::size_t checkpoint_samples = 0;
  double mse = 0.0;
  std::size_t replications = 0;
  /// One-sided sign-test p-value for "beats LW" over paired replications;
  /// empty for LW itself or when no LW method is present.
  std::optional<double> sign_test_p;
};

struct VariancePoint {
  std::size_t t = 0;
  std::size_t total_samples = 0;
  double true_variance = 0.0;
};

struct VarianceRow {
  std::string method;
  VariancePoint point;
};

struct ExperimentResult {
  double true_value = 0.0;
  std::vector<MseRow> mse;
  std::vector<VarianceRow> variance;
  /// errors[m][c][r]: estimate minus true value for method m, checkpoint c, replication r.
  std::vector<std::vector<std::vector<double>>> errors;
};

/// Replicated MSE-versus-samples comparison. Replication r seeds every
/// method with replication_seed(master_seed, r), so methods see common
/// random streams. Checkpoints reuse prefixes of one run per replication:
/// an adaptive method with batch N reports its combined estimate after
/// floor(c / N) batches. Results are reduced in replication order and do
/// not depend on the thread count.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Exact Var[w] at every `stride`-th parameter snapshot of the trace,
/// starting with the initial sampler (t = 0). total_samples = t * batch.
std::vector<VariancePoint> variance_curve(const EstimationProblem& problem, const Trace& trace, std::size_t stride);

/// Maps a problem to an estimate of its value.
using ValueEvaluator = std::function<double(const EstimationProblem&)>;

ValueEvaluator exact_evaluator();
ValueEvaluator lw_evaluator(std::size_t samples, std::uint64_t seed = Rng::kDefaultSeed);
ValueEvaluator adaptive_evaluator(AdaptConfig config, std::uint64_t seed = Rng::kDefaultSeed);

struct ActionChoice {
  int action = 0;
  std::vector<double> values;
};

/// Evaluates V_o(a) for every action and returns the argmax (lowest index on ties).
ActionChoice select_action(const InfluenceDiagram& id, const Assignment& evidence, const ValueEvaluator& evaluator);

/// Shortest decimal text that reads back as the same double.
std::string format_double(double value);

void write_mse_csv(std::ostream& out, const std::vector<MseRow>& rows);
void write_variance_csv(std::ostream& out, const std::vector<VarianceRow>& rows);
void write_trace_csv(std::ostream& out, const Trace& trace);

}  // namespace ais
