#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ais/error.hpp"
#include "ais/table.hpp"

namespace ais {

/// A discrete chance variable. Values are 0-based indices in [0, arity).
struct Variable {
  std::string name;
  int arity = 0;
  std::vector<std::string> parents;

  bool operator==(const Variable&) const = default;
};

/// A Bayesian network: variables plus one CPT per variable, aligned by index.
///
/// CPT rows are indexed by the parent configuration with the first-listed
/// parent as the most significant mixed-radix digit.
struct Network {
  std::vector<Variable> variables;
  std::vector<Cpt> cpts;

  std::optional<std::size_t> index_of(std::string_view name) const;

  bool operator==(const Network&) const = default;
};

struct DecisionNode {
  std::string name;
  int arity = 0;
  std::vector<std::string> parents;  // informational parents

  bool operator==(const DecisionNode&) const = default;
};

/// Utility over a parent set; entries in parent-config-index order.
struct UtilityNode {
  std::vector<std::string> parents;
  std::vector<double> table;

  bool operator==(const UtilityNode&) const = default;
};

/// A Bayesian network extended with a single decision node and a single
/// utility node. Chance-node CPTs may list the decision among their parents.
struct InfluenceDiagram {
  Network network;
  DecisionNode decision;
  UtilityNode utility;

  bool operator==(const InfluenceDiagram&) const = default;
};

using Model = std::variant<Network, InfluenceDiagram>;

const Network& chance_network(const Model& model);

/// Variable name -> value index.
using Assignment = std::map<std::string, int, std::less<>>;

/// Mixed-radix index of the parents' joint value, first parent most significant.
/// Throws DomainError when a parent is missing from the assignment.
std::size_t parent_config_index(const Assignment& assignment,
                                std::span<const std::string> parents,
                                std::span<const int> arities);

/// Dense variant used on hot paths: `values[slots[p]]` is the value of parent p.
inline std::size_t parent_config_index(std::span<const int> values,
                                       std::span<const std::size_t> slots,
                                       std::span<const int> arities) {
  std::size_t index = 0;
  for (std::size_t p = 0; p < slots.size(); ++p) {
    index = index * static_cast<std::size_t>(arities[p]) + static_cast<std::size_t>(values[slots[p]]);
  }
  return index;
}

/// Inverse of parent_config_index: the digits of `index` in the given radices.
std::vector<int> decode_config_index(std::size_t index, std::span<const int> arities);

/// Indices of `net.variables` in an order where every variable follows its
/// parents. Ties go to declaration order. Parents named in `external` (the
/// decision node of an influence diagram) are treated as given roots.
/// Throws ValidationError naming a cycle member, or an unknown parent.
std::vector<std::size_t> topological_order(const Network& net,
                                           std::span<const std::string> external = {});

/// All invariant violations of the model; empty when well formed.
std::vector<std::string> validate(const Network& net);
std::vector<std::string> validate(const InfluenceDiagram& id);
std::vector<std::string> validate(const Model& model);

/// Parses the JSON model format. Throws ParseError on malformed text or
/// unknown fields and ValidationError when the parsed model is invalid.
Model load(std::string_view text);
Model load_file(const std::string& path);

/// Renders a model in the JSON format accepted by load().
std::string render(const Model& model);

}  // namespace ais
