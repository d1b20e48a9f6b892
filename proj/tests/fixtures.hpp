#pragma once

// Shared test models plus a brute-force oracle that works directly on the
// model structs (names, CPT lookups by hand), independent of the library's
// enumeration and weight code.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ais/model.hpp"
#include "ais/problem.hpp"
#include "ais/rng.hpp"
#include "ais/sampling.hpp"

namespace fixtures {

inline ais::Cpt cpt(std::vector<std::vector<double>> rows) {
  ais::Cpt t(rows.size(), rows.front().size());
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (std::size_t k = 0; k < rows[j].size(); ++k) t(j, k) = rows[j][k];
  return t;
}

/// X1 -> X2; P(X1=1)=0.6, P(X2=1|X1=0)=0.2, P(X2=1|X1=1)=0.7.
inline ais::Network chain2() {
  ais::Network net;
  net.variables = {{"X1", 2, {}}, {"X2", 2, {"X1"}}};
  net.cpts = {cpt({{0.4, 0.6}}), cpt({{0.8, 0.2}, {0.3, 0.7}})};
  return net;
}

/// chain2 with X2 also depending on a binary decision A; U(X2) = (1, 3).
inline ais::InfluenceDiagram gamble1() {
  ais::InfluenceDiagram id;
  id.network.variables = {{"X1", 2, {}}, {"X2", 2, {"X1", "A"}}};
  id.network.cpts = {cpt({{0.4, 0.6}}), cpt({{0.8, 0.2}, {0.5, 0.5}, {0.3, 0.7}, {0.1, 0.9}})};
  id.decision = {"A", 2, {}};
  id.utility = {{"X2"}, {1.0, 3.0}};
  return id;
}

inline ais::EstimationProblem chain2_problem() { return ais::EstimationProblem(chain2(), {{"X2", 1}}); }
inline ais::EstimationProblem gamble1_problem(int action = 0) { return ais::EstimationProblem(gamble1(), {}, action); }

/// Random row on the simplex with every entry >= floor.
inline std::vector<double> random_row(ais::Rng& rng, std::size_t n, double floor = 0.0) {
  std::vector<double> row(n);
  double sum = 0.0;
  for (double& v : row) {
    v = 0.05 + rng.uniform();
    sum += v;
  }
  for (double& v : row) v = floor + (1.0 - floor * static_cast<double>(n)) * v / sum;
  return row;
}

/// Random network over three variables: A (arity 2), B (arity 3, parent A),
/// C (arity 2, parents A, B).
inline ais::Network random_network3(ais::Rng& rng) {
  ais::Network net;
  net.variables = {{"A", 2, {}}, {"B", 3, {"A"}}, {"C", 2, {"A", "B"}}};
  for (const auto& [rows, cols] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 2}, {2, 3}, {6, 2}}) {
    ais::Cpt t(rows, cols);
    for (std::size_t j = 0; j < rows; ++j) {
      const auto row = random_row(rng, cols, 0.02);
      for (std::size_t k = 0; k < cols; ++k) t(j, k) = row[k];
    }
    net.cpts.push_back(t);
  }
  return net;
}

/// Random sampler with every entry >= floor, shaped for the problem.
inline ais::SamplerParams random_theta(const ais::EstimationProblem& problem, ais::Rng& rng, double floor = 0.05) {
  ais::SamplerParams theta = ais::init_params(problem, 0.0);
  for (auto& table : theta.tables) {
    for (std::size_t j = 0; j < table.rows(); ++j) {
      const auto row = random_row(rng, table.cols(), floor);
      for (std::size_t k = 0; k < table.cols(); ++k) table(j, k) = row[k];
    }
  }
  return theta;
}

// ---------------------------------------------------------------------------
// Brute-force oracle on named assignments.

using Named = std::map<std::string, int>;

inline std::size_t row_of(const Named& values, const std::vector<std::string>& parents,
                          const std::function<int(const std::string&)>& arity) {
  std::size_t r = 0;
  for (const auto& p : parents) r = r * static_cast<std::size_t>(arity(p)) + static_cast<std::size_t>(values.at(p));
  return r;
}

struct BruteState {
  Named values;  // every chance variable plus the decision
  double g = 0.0;
};

/// Every configuration of the non-evidence chance variables, with g computed
/// as a plain product of CPT entries (and utility).
inline std::vector<BruteState> brute_states(const ais::Model& model, const Named& evidence, int action = -1) {
  const ais::Network& net = ais::chance_network(model);
  const auto* id = std::get_if<ais::InfluenceDiagram>(&model);
  auto arity = [&](const std::string& name) {
    if (id && name == id->decision.name) return id->decision.arity;
    return net.variables[*net.index_of(name)].arity;
  };
  std::vector<std::string> free;
  for (const auto& v : net.variables)
    if (!evidence.count(v.name)) free.push_back(v.name);

  std::size_t total = 1;
  for (const auto& name : free) total *= static_cast<std::size_t>(arity(name));
  std::vector<BruteState> out;
  for (std::size_t index = 0; index < total; ++index) {
    BruteState s;
    s.values = evidence;
    if (id) s.values[id->decision.name] = action;
    std::size_t rest = index;
    for (std::size_t m = free.size(); m-- > 0;) {
      s.values[free[m]] = static_cast<int>(rest % static_cast<std::size_t>(arity(free[m])));
      rest /= static_cast<std::size_t>(arity(free[m]));
    }
    double g = 1.0;
    for (std::size_t i = 0; i < net.variables.size(); ++i) {
      const auto& v = net.variables[i];
      g *= net.cpts[i](row_of(s.values, v.parents, arity), static_cast<std::size_t>(s.values.at(v.name)));
    }
    if (id) g *= id->utility.table[row_of(s.values, id->utility.parents, arity)];
    s.g = g;
    out.push_back(s);
  }
  return out;
}

}  // namespace fixtures

namespace fixtures {

/// f(z | theta) from the per-variable tables, looked up by variable name.
inline double brute_f(const ais::EstimationProblem& problem, const ais::SamplerParams& theta, const Named& values) {
  const ais::Network& net = ais::chance_network(problem.model());
  const auto* id = std::get_if<ais::InfluenceDiagram>(&problem.model());
  auto arity = [&](const std::string& name) {
    if (id && name == id->decision.name) return id->decision.arity;
    return net.variables[*net.index_of(name)].arity;
  };
  double f = 1.0;
  const auto free = problem.free_vars();
  for (std::size_t m = 0; m < free.size(); ++m) {
    const auto& v = net.variables[free[m]];
    f *= theta.tables[m](row_of(values, v.parents, arity), static_cast<std::size_t>(values.at(v.name)));
  }
  return f;
}

/// Dense slot vector for a named assignment.
inline std::vector<int> slots(const ais::EstimationProblem& problem, const Named& values) {
  std::vector<int> out(problem.num_slots());
  for (std::size_t s = 0; s < problem.num_slots(); ++s) out[s] = values.at(problem.name(s));
  return out;
}

}  // namespace fixtures
