#include "ais/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ais {

void enforce_epsilon_row(std::span<double> row, double eps) {
  if (eps <= 0.0) return;
  std::vector<bool> clamped(row.size(), false);
  for (std::size_t k = 0; k < row.size(); ++k) clamped[k] = row[k] < eps;
  if (std::none_of(clamped.begin(), clamped.end(), [](bool c) { return c; })) return;

  const std::vector<double> original(row.begin(), row.end());
  for (bool changed = true; changed;) {
    changed = false;
    double free_mass = 1.0;
    double free_total = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (clamped[k]) {
        free_mass -= eps;
      } else {
        free_total += original[k];
      }
    }
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (clamped[k]) {
        row[k] = eps;
        continue;
      }
      row[k] = original[k] * free_mass / free_total;
      if (row[k] < eps) {
        clamped[k] = true;
        changed = true;
      }
    }
  }
}

Gradient zero_gradient(const SamplerParams& theta) {
  Gradient grad;
  for (const auto& t : theta.tables) grad.tables.emplace_back(t.rows(), t.cols(), 0.0);
  return grad;
}

SamplerParams init_params(const EstimationProblem& problem, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("gamma must lie in [0, 1)");
  SamplerParams theta;
  for (std::size_t i : problem.free_vars()) {
    Table table = problem.cpt(i);
    const double eps = epsilon_bound(gamma, problem.arity(i));
    for (std::size_t j = 0; j < table.rows(); ++j) enforce_epsilon_row(table.row(j), eps);
    theta.tables.push_back(std::move(table));
  }
  return theta;
}

void check_shape(const EstimationProblem& problem, const SamplerParams& theta) {
  const auto free = problem.free_vars();
  if (theta.tables.size() != free.size()) {
    throw DomainError("sampler has " + std::to_string(theta.tables.size()) + " tables for " +
                      std::to_string(free.size()) + " free variables");
  }
  for (std::size_t m = 0; m < free.size(); ++m) {
    const Cpt& cpt = problem.cpt(free[m]);
    if (theta.tables[m].rows() != cpt.rows() || theta.tables[m].cols() != cpt.cols()) {
      throw DomainError("sampler table for '" + problem.name(free[m]) + "' has the wrong shape");
    }
  }
}

std::size_t sampler_row(const EstimationProblem& problem, std::size_t m, std::span<const int> values) {
  const std::size_t i = problem.free_vars()[m];
  return parent_config_index(values, problem.parent_slots(i), problem.parent_arities(i));
}

double sampler_probability(const EstimationProblem& problem, const SamplerParams& theta,
                           std::span<const int> values) {
  double p = 1.0;
  const auto free = problem.free_vars();
  for (std::size_t m = 0; m < free.size(); ++m) {
    p *= theta.tables[m](sampler_row(problem, m, values), static_cast<std::size_t>(values[free[m]]));
  }
  return p;
}

double sampler_log_probability(const EstimationProblem& problem, const SamplerParams& theta,
                               std::span<const int> values) {
  double lp = 0.0;
  const auto free = problem.free_vars();
  for (std::size_t m = 0; m < free.size(); ++m) {
    const double p = theta.tables[m](sampler_row(problem, m, values), static_cast<std::size_t>(values[free[m]]));
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    lp += std::log(p);
  }
  return lp;
}

std::vector<int> draw(const SamplerParams& theta, const EstimationProblem& problem, Rng& rng) {
  std::vector<int> values = problem.base_assignment();
  const auto free = problem.free_vars();
  for (std::size_t m = 0; m < free.size(); ++m) {
    values[free[m]] = static_cast<int>(rng.categorical(theta.tables[m].row(sampler_row(problem, m, values))));
  }
  return values;
}

WeightedSample weight(const EstimationProblem& problem, const SamplerParams& theta, std::vector<int> values) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const auto free = problem.free_vars();
  // Free variables contribute log P - log theta, evidence variables log P.
  double log_w = 0.0;
  bool g_zero = false;
  std::size_t m = 0;
  for (std::size_t i : problem.order()) {
    const double p = problem.cpt(i)(parent_config_index(values, problem.parent_slots(i), problem.parent_arities(i)),
                                    static_cast<std::size_t>(values[i]));
    const bool is_free = m < free.size() && free[m] == i;
    if (is_free) {
      const double q = theta.tables[m](sampler_row(problem, m, values), static_cast<std::size_t>(values[i]));
      if (q <= 0.0) {
        throw DomainError("sample has zero probability under the sampler at '" + problem.name(i) + "'");
      }
      ++m;
      if (p == q) continue;
      if (p > 0.0) log_w += std::log(p) - std::log(q);
    } else if (p > 0.0) {
      log_w += std::log(p);
    }
    if (p <= 0.0) g_zero = true;
  }
  if (problem.is_influence_diagram()) log_w += std::log(problem.utility(values));

  WeightedSample s;
  s.values = std::move(values);
  s.log_weight = g_zero ? kNegInf : log_w;
  s.weight = g_zero ? 0.0 : std::exp(log_w);
  return s;
}

Batch batch_estimate(const EstimationProblem& problem, const SamplerParams& theta, std::size_t n, Rng& rng) {
  if (n < 1) throw DomainError("batch_estimate needs at least one sample");
  Batch batch;
  batch.samples.reserve(n);
  double sum = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    batch.samples.push_back(weight(problem, theta, draw(theta, problem, rng)));
    sum += batch.samples.back().weight;
  }
  batch.estimate = sum / static_cast<double>(n);
  return batch;
}

double combined_estimate(std::span<const double> batches, std::span<const double> weights) {
  if (batches.size() != weights.size()) {
    throw DomainError("combined_estimate: " + std::to_string(batches.size()) + " batches but " +
                      std::to_string(weights.size()) + " weights");
  }
  double total = 0.0;
  double value = 0.0;
  for (std::size_t t = 0; t < batches.size(); ++t) {
    if (weights[t] < 0.0) throw DomainError("combined_estimate: negative weight");
    total += weights[t];
    value += weights[t] * batches[t];
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("combined_estimate: weights sum to " + std::to_string(total) + ", not 1");
  return value;
}

}  // namespace ais
