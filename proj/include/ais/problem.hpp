#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ais/model.hpp"

namespace ais {

/// A model, an evidence assignment and (for influence diagrams) an action.
///
/// Defines the summand g over the free variables Z (all non-evidence chance
/// variables): g(z) = prod_i P(x_i | pa_i) with evidence clamped, times
/// U(...) with the decision clamped to the action for influence diagrams.
/// The target quantity is G = sum_z g(z), i.e. P(O = o) or V_o(a).
///
/// Internally every node has a "slot": chance variables occupy slots
/// [0, n) in declaration order and the decision, when present, occupies
/// slot n. Full assignments are dense vectors of slot values.
class EstimationProblem {
 public:
  EstimationProblem(Model model, const Assignment& evidence, std::optional<int> action = std::nullopt);

  const Model& model() const noexcept { return model_; }
  bool is_influence_diagram() const noexcept { return decision_slot_.has_value(); }
  std::optional<int> action() const noexcept { return action_; }

  std::size_t num_chance() const noexcept { return arity_.size(); }
  std::size_t num_slots() const noexcept { return base_.size(); }
  int arity(std::size_t slot) const { return slot_arity_[slot]; }
  const std::string& name(std::size_t slot) const { return slot_name_[slot]; }

  /// Parent slots / arities of chance variable i, in CPT order.
  std::span<const std::size_t> parent_slots(std::size_t i) const { return parent_slots_[i]; }
  std::span<const int> parent_arities(std::size_t i) const { return parent_arities_[i]; }
  const Cpt& cpt(std::size_t i) const;

  /// Free chance variables, in topological order.
  std::span<const std::size_t> free_vars() const noexcept { return free_; }
  /// Clamped chance variables (declaration order).
  std::span<const std::size_t> evidence_vars() const noexcept { return evidence_; }
  /// Chance variables in topological order.
  std::span<const std::size_t> order() const noexcept { return order_; }

  /// Slot values with evidence and action filled in, free slots set to -1.
  const std::vector<int>& base_assignment() const noexcept { return base_; }

  /// g at a full assignment, accumulated as a sum of logs. -inf when g = 0.
  double log_g(std::span<const int> values) const;
  /// g at a full assignment as a direct product of factors.
  double g(std::span<const int> values) const;
  /// Utility at a full assignment (1 for Bayesian-network problems).
  double utility(std::span<const int> values) const;

  /// |Omega_Z|, saturating at SIZE_MAX.
  std::size_t state_space_size() const noexcept;

  /// The free-variable part of a full assignment, keyed by name.
  Assignment free_assignment(std::span<const int> values) const;

 private:
  Model model_;
  std::optional<int> action_;
  std::optional<std::size_t> decision_slot_;

  std::vector<int> arity_;
  std::vector<int> slot_arity_;
  std::vector<std::string> slot_name_;
  std::vector<std::vector<std::size_t>> parent_slots_;
  std::vector<std::vector<int>> parent_arities_;
  std::vector<std::size_t> utility_slots_;
  std::vector<int> utility_arities_;

  std::vector<std::size_t> order_;
  std::vector<std::size_t> free_;
  std::vector<std::size_t> evidence_;
  std::vector<int> base_;
};

}  // namespace ais
