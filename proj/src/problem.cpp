#include "ais/problem.hpp"

#include <cmath>
#include <limits>

namespace ais {

EstimationProblem::EstimationProblem(Model model, const Assignment& evidence, std::optional<int> action)
    : model_(std::move(model)), action_(action) {
  if (auto report = validate(model_); !report.empty()) throw ValidationError(std::move(report));

  const Network& net = chance_network(model_);
  const auto* id = std::get_if<InfluenceDiagram>(&model_);
  const std::size_t n = net.variables.size();

  for (const auto& v : net.variables) {
    arity_.push_back(v.arity);
    slot_arity_.push_back(v.arity);
    slot_name_.push_back(v.name);
  }
  if (id) {
    decision_slot_ = n;
    slot_arity_.push_back(id->decision.arity);
    slot_name_.push_back(id->decision.name);
    if (!action) throw DomainError("an influence-diagram problem requires an action");
    if (*action < 0 || *action >= id->decision.arity) {
      throw DomainError("action " + std::to_string(*action) + " out of range [0, " +
                        std::to_string(id->decision.arity) + ")");
    }
  } else if (action) {
    throw DomainError("an action was given but the model has no decision node");
  }

  auto slot_of = [&](const std::string& name) -> std::size_t {
    if (auto idx = net.index_of(name)) return *idx;
    if (id && name == id->decision.name) return n;
    throw ValidationError("unknown variable '" + name + "'");
  };

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> slots;
    std::vector<int> arities;
    for (const auto& p : net.variables[i].parents) {
      slots.push_back(slot_of(p));
      arities.push_back(slot_arity_[slots.back()]);
    }
    parent_slots_.push_back(std::move(slots));
    parent_arities_.push_back(std::move(arities));
  }
  if (id) {
    for (const auto& p : id->utility.parents) {
      utility_slots_.push_back(slot_of(p));
      utility_arities_.push_back(slot_arity_[utility_slots_.back()]);
    }
  }

  base_.assign(slot_arity_.size(), -1);
  if (decision_slot_) base_[*decision_slot_] = *action;
  for (const auto& [name, value] : evidence) {
    auto idx = net.index_of(name);
    if (!idx) {
      if (id && name == id->decision.name) {
        throw DomainError("the decision '" + name + "' is set through the action, not the evidence");
      }
      throw DomainError("evidence names unknown variable '" + name + "'");
    }
    if (value < 0 || value >= arity_[*idx]) {
      throw DomainError("evidence value " + std::to_string(value) + " for '" + name + "' out of range [0, " +
                        std::to_string(arity_[*idx]) + ")");
    }
    base_[*idx] = value;
  }
  if (id) {
    for (const auto& p : id->decision.parents) {
      if (base_[*net.index_of(p)] < 0) {
        throw DomainError("informational parent '" + p + "' of decision '" + id->decision.name +
                          "' must be observed");
      }
    }
  }

  const std::string external[] = {id ? id->decision.name : std::string()};
  order_ = topological_order(net, id ? std::span<const std::string>(external) : std::span<const std::string>());
  for (std::size_t i : order_) {
    if (base_[i] < 0) free_.push_back(i);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (base_[i] >= 0) evidence_.push_back(i);
  }
}

const Cpt& EstimationProblem::cpt(std::size_t i) const { return chance_network(model_).cpts[i]; }

double EstimationProblem::utility(std::span<const int> values) const {
  const auto* id = std::get_if<InfluenceDiagram>(&model_);
  if (!id) return 1.0;
  return id->utility.table[parent_config_index(values, utility_slots_, utility_arities_)];
}

double EstimationProblem::log_g(std::span<const int> values) const {
  double acc = 0.0;
  for (std::size_t i : order_) {
    const double p = cpt(i)(parent_config_index(values, parent_slots_[i], parent_arities_[i]),
                            static_cast<std::size_t>(values[i]));
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(p);
  }
  if (is_influence_diagram()) acc += std::log(utility(values));
  return acc;
}

double EstimationProblem::g(std::span<const int> values) const {
  double acc = utility(values);
  for (std::size_t i : order_) {
    acc *= cpt(i)(parent_config_index(values, parent_slots_[i], parent_arities_[i]), static_cast<std::size_t>(values[i]));
  }
  return acc;
}

std::size_t EstimationProblem::state_space_size() const noexcept {
  std::size_t size = 1;
  for (std::size_t i : free_) {
    const auto a = static_cast<std::size_t>(arity_[i]);
    if (size > std::numeric_limits<std::size_t>::max() / a) return std::numeric_limits<std::size_t>::max();
    size *= a;
  }
  return size;
}

Assignment EstimationProblem::free_assignment(std::span<const int> values) const {
  Assignment out;
  for (std::size_t i : free_) out[slot_name_[i]] = values[i];
  return out;
}

}  // namespace ais
