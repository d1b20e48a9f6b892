#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ais/problem.hpp"
#include "ais/sampling.hpp"

namespace ais::exact {

/// Default limit on |Omega_Z| for exhaustive enumeration.
inline constexpr std::size_t kDefaultMaxStates = std::size_t{1} << 22;

struct JointEntry {
  std::vector<int> values;  // full slot assignment
  double g = 0.0;
  double f = 0.0;
};

/// Every configuration of the free variables with its g and f(. | theta).
struct JointTable {
  std::vector<JointEntry> entries;
};

/// Calls `visit(values)` once per free configuration. The first free
/// variable (in topological order) is the most significant digit, so states
/// come in lexicographic order and every sum below has a fixed summation
/// order. Throws StateSpaceError when |Omega_Z| exceeds `max_states`.
void for_each_state(const EstimationProblem& problem, const std::function<void(std::span<const int>)>& visit,
                    std::size_t max_states = kDefaultMaxStates);

JointTable enumerate(const EstimationProblem& problem, const SamplerParams& theta,
                     std::size_t max_states = kDefaultMaxStates);

/// G = sum_z g(z): P(O = o) for networks, V_o(a) for influence diagrams.
double true_value(const EstimationProblem& problem, std::size_t max_states = kDefaultMaxStates);

/// f*(z) = g(z) / G, aligned with enumerate()'s state order.
/// Throws DomainError when G = 0.
std::vector<double> optimal_distribution(const EstimationProblem& problem,
                                         std::size_t max_states = kDefaultMaxStates);

/// Local conditionals of f* over the sampler structure. Rows whose parent
/// configuration has zero mass under f* are uniform.
SamplerParams optimal_params(const EstimationProblem& problem, std::size_t max_states = kDefaultMaxStates);

/// Var[w] = sum_z f(z|theta) w(z)^2 - G^2 under the sampler theta.
/// Throws DomainError (infinite variance) when g > 0 somewhere f = 0.
double weight_variance(const EstimationProblem& problem, const SamplerParams& theta,
                       std::size_t max_states = kDefaultMaxStates);

/// Exact partials of Var[w] with respect to each theta_ijk, treating every
/// theta_ijk as a free coordinate of the product form of f (no simplex
/// constraint, no projection).
Gradient exact_gradient_var(const EstimationProblem& problem, const SamplerParams& theta,
                            std::size_t max_states = kDefaultMaxStates);

}  // namespace ais::exact
