#pragma once

#include <span>
#include <vector>

#include "ais/problem.hpp"
#include "ais/rng.hpp"
#include "ais/table.hpp"

namespace ais {

/// Parameters of the importance-sampling distribution
///   f(z | theta) = prod_i theta_i[pa_i(z)][z_i]
/// over the free variables. `tables[m]` belongs to `problem.free_vars()[m]`
/// and has the same shape as that variable's CPT; evidence and action
/// parents are read from the clamped assignment when indexing rows.
struct SamplerParams {
  std::vector<Table> tables;

  bool operator==(const SamplerParams&) const = default;
};

/// Per-parameter partial derivatives, shaped like SamplerParams.
struct Gradient {
  std::vector<Table> tables;

  bool operator==(const Gradient&) const = default;
};

/// Zero gradient shaped like `theta`.
Gradient zero_gradient(const SamplerParams& theta);

/// One draw z with its importance weight w = g(z) / f(z | theta).
/// `values` is a full slot assignment (evidence and action filled in).
struct WeightedSample {
  std::vector<int> values;
  double weight = 0.0;
  double log_weight = 0.0;  // -inf when g(z) = 0
};

/// Combined estimate sum_t W(t) * batch_values[t].
struct Estimate {
  double value = 0.0;
  std::vector<double> batch_values;
  std::vector<double> batch_weights;
  std::vector<std::size_t> sample_counts;
};

/// Lower bound gamma / arity on each sampler probability.
inline double epsilon_bound(double gamma, int arity) { return gamma / static_cast<double>(arity); }

/// Raises entries below `eps` to `eps` and rescales the remaining entries so
/// the row still sums to 1. Relative odds among the rescaled entries are kept;
/// entries pushed under `eps` by the rescale are clamped in turn.
void enforce_epsilon_row(std::span<double> row, double eps);

/// Sampler initialized to the network's conditional distributions, clamped
/// to the epsilon-boundary gamma / |Omega|. Requires 0 <= gamma < 1.
SamplerParams init_params(const EstimationProblem& problem, double gamma);

/// Row of free-variable table `m` selected by the parent values in `values`.
std::size_t sampler_row(const EstimationProblem& problem, std::size_t m, std::span<const int> values);

/// f(z | theta) as a direct product, and its logarithm.
double sampler_probability(const EstimationProblem& problem, const SamplerParams& theta,
                           std::span<const int> values);
double sampler_log_probability(const EstimationProblem& problem, const SamplerParams& theta,
                               std::span<const int> values);

/// Forward-samples the free variables in topological order; evidence and
/// the action keep their clamped values.
std::vector<int> draw(const SamplerParams& theta, const EstimationProblem& problem, Rng& rng);

/// Importance weight of a full assignment, accumulated in log space one
/// factor at a time. Throws DomainError when f(z | theta) = 0.
WeightedSample weight(const EstimationProblem& problem, const SamplerParams& theta, std::vector<int> values);

struct Batch {
  double estimate = 0.0;
  std::vector<WeightedSample> samples;
};

/// Mean weight of `n` fresh draws. Requires n >= 1.
Batch batch_estimate(const EstimationProblem& problem, const SamplerParams& theta, std::size_t n, Rng& rng);

/// sum_t weights[t] * batches[t]. Weights must be nonnegative and sum to 1.
double combined_estimate(std::span<const double> batches, std::span<const double> weights);

/// Throws DomainError unless theta matches the problem's free-variable shapes.
void check_shape(const EstimationProblem& problem, const SamplerParams& theta);

}  // namespace ais
