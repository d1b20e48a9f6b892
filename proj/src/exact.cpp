#include "ais/exact.hpp"

#include <cmath>

namespace ais::exact {

void for_each_state(const EstimationProblem& problem, const std::function<void(std::span<const int>)>& visit,
                    std::size_t max_states) {
  const std::size_t size = problem.state_space_size();
  if (size > max_states) {
    throw StateSpaceError("free state space has " + std::to_string(size) + " configurations, above the cap of " +
                          std::to_string(max_states) + "; refusing to enumerate");
  }
  const auto free = problem.free_vars();
  std::vector<int> values = problem.base_assignment();
  for (std::size_t i : free) values[i] = 0;
  for (std::size_t s = 0; s < size; ++s) {
    visit(values);
    // Odometer increment, last free variable fastest.
    for (std::size_t m = free.size(); m-- > 0;) {
      if (++values[free[m]] < problem.arity(free[m])) break;
      values[free[m]] = 0;
    }
  }
}

JointTable enumerate(const EstimationProblem& problem, const SamplerParams& theta, std::size_t max_states) {
  check_shape(problem, theta);
  JointTable table;
  for_each_state(
      problem,
      [&](std::span<const int> values) {
        table.entries.push_back(JointEntry{std::vector<int>(values.begin(), values.end()), problem.g(values),
                                           sampler_probability(problem, theta, values)});
      },
      max_states);
  return table;
}

double true_value(const EstimationProblem& problem, std::size_t max_states) {
  double total = 0.0;
  for_each_state(problem, [&](std::span<const int> values) { total += problem.g(values); }, max_states);
  return total;
}

std::vector<double> optimal_distribution(const EstimationProblem& problem, std::size_t max_states) {
  std::vector<double> g;
  for_each_state(problem, [&](std::span<const int> values) { g.push_back(problem.g(values)); }, max_states);
  double total = 0.0;
  for (double v : g) total += v;
  if (!(total > 0.0)) throw DomainError("optimal distribution undefined: G = 0");
  for (double& v : g) v /= total;
  return g;
}

SamplerParams optimal_params(const EstimationProblem& problem, std::size_t max_states) {
  const auto free = problem.free_vars();
  SamplerParams counts;
  for (std::size_t i : free) counts.tables.emplace_back(problem.cpt(i).rows(), problem.cpt(i).cols(), 0.0);
  double total = 0.0;
  for_each_state(
      problem,
      [&](std::span<const int> values) {
        const double g = problem.g(values);
        total += g;
        for (std::size_t m = 0; m < free.size(); ++m) {
          counts.tables[m](sampler_row(problem, m, values), static_cast<std::size_t>(values[free[m]])) += g;
        }
      },
      max_states);
  if (!(total > 0.0)) throw DomainError("optimal distribution undefined: G = 0");
  for (auto& table : counts.tables) {
    for (std::size_t j = 0; j < table.rows(); ++j) {
      auto row = table.row(j);
      double mass = 0.0;
      for (double v : row) mass += v;
      for (double& v : row) v = mass > 0.0 ? v / mass : 1.0 / static_cast<double>(row.size());
    }
  }
  return counts;
}

double weight_variance(const EstimationProblem& problem, const SamplerParams& theta, std::size_t max_states) {
  check_shape(problem, theta);
  const double big_g = true_value(problem, max_states);
  // Centered form sum_z f (w - G)^2; equal to sum f w^2 - G^2 and never negative.
  double var = 0.0;
  for_each_state(
      problem,
      [&](std::span<const int> values) {
        const double g = problem.g(values);
        const double f = sampler_probability(problem, theta, values);
        if (f <= 0.0) {
          if (g > 0.0) throw DomainError("infinite variance: g > 0 where the sampler has zero probability");
          return;
        }
        const double w = g / f;
        var += f * (w - big_g) * (w - big_g);
      },
      max_states);
  return var;
}

Gradient exact_gradient_var(const EstimationProblem& problem, const SamplerParams& theta, std::size_t max_states) {
  check_shape(problem, theta);
  const auto free = problem.free_vars();
  Gradient grad = zero_gradient(theta);
  // d/dtheta_ijk of sum_z g^2 / f is -sum_z f w^2 I(z_i = k, pa = j) / theta_ijk.
  for_each_state(
      problem,
      [&](std::span<const int> values) {
        const double g = problem.g(values);
        const double f = sampler_probability(problem, theta, values);
        if (f <= 0.0) {
          if (g > 0.0) throw DomainError("infinite variance: g > 0 where the sampler has zero probability");
          return;
        }
        const double w = g / f;
        for (std::size_t m = 0; m < free.size(); ++m) {
          const std::size_t j = sampler_row(problem, m, values);
          const auto k = static_cast<std::size_t>(values[free[m]]);
          grad.tables[m](j, k) -= f * w * w / theta.tables[m](j, k);
        }
      },
      max_states);
  return grad;
}

}  // namespace ais::exact
