#include "ais/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ais {

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error([&] {
        std::string msg = "invalid model:";
        for (const auto& v : violations) msg += "\n  " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

ValidationError::ValidationError(const std::string& message)
    : Error(message), violations_{message} {}

std::optional<std::size_t> Network::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == name) return i;
  }
  return std::nullopt;
}

const Network& chance_network(const Model& model) {
  if (const auto* id = std::get_if<InfluenceDiagram>(&model)) return id->network;
  return std::get<Network>(model);
}

std::size_t parent_config_index(const Assignment& assignment,
                                std::span<const std::string> parents,
                                std::span<const int> arities) {
  if (parents.size() != arities.size()) {
    throw DomainError("parent_config_index: " + std::to_string(parents.size()) + " parents but " +
                      std::to_string(arities.size()) + " arities");
  }
  std::size_t index = 0;
  for (std::size_t p = 0; p < parents.size(); ++p) {
    auto it = assignment.find(parents[p]);
    if (it == assignment.end()) {
      throw DomainError("parent_config_index: no value assigned to parent '" + parents[p] + "'");
    }
    if (it->second < 0 || it->second >= arities[p]) {
      throw DomainError("parent_config_index: value " + std::to_string(it->second) + " of '" +
                        parents[p] + "' out of range [0, " + std::to_string(arities[p]) + ")");
    }
    index = index * static_cast<std::size_t>(arities[p]) + static_cast<std::size_t>(it->second);
  }
  return index;
}

std::vector<int> decode_config_index(std::size_t index, std::span<const int> arities) {
  std::vector<int> digits(arities.size());
  for (std::size_t p = arities.size(); p-- > 0;) {
    const auto radix = static_cast<std::size_t>(arities[p]);
    digits[p] = static_cast<int>(index % radix);
    index /= radix;
  }
  return digits;
}

namespace {

// Parent indices of each variable; -1 marks an external parent.
std::vector<std::vector<long>> resolve_parents(const Network& net,
                                               std::span<const std::string> external) {
  std::vector<std::vector<long>> resolved(net.variables.size());
  for (std::size_t i = 0; i < net.variables.size(); ++i) {
    for (const auto& parent : net.variables[i].parents) {
      if (auto idx = net.index_of(parent)) {
        resolved[i].push_back(static_cast<long>(*idx));
      } else if (std::find(external.begin(), external.end(), parent) != external.end()) {
        resolved[i].push_back(-1);
      } else {
        throw ValidationError("variable '" + net.variables[i].name + "' has unknown parent '" +
                              parent + "'");
      }
    }
  }
  return resolved;
}

}  // namespace

std::vector<std::size_t> topological_order(const Network& net,
                                           std::span<const std::string> external) {
  const auto parents = resolve_parents(net, external);
  const std::size_t n = net.variables.size();
  std::vector<bool> placed(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  // Repeatedly take the earliest-declared variable whose parents are all placed.
  while (order.size() < n) {
    bool progressed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (placed[i]) continue;
      const bool ready = std::all_of(parents[i].begin(), parents[i].end(), [&](long p) {
        return p < 0 || placed[static_cast<std::size_t>(p)];
      });
      if (ready) {
        placed[i] = true;
        order.push_back(i);
        progressed = true;
        break;
      }
    }
    if (!progressed) {
      // Walk unplaced parents until a node repeats; that node lies on a cycle.
      std::size_t cur = 0;
      while (placed[cur]) ++cur;
      std::vector<bool> seen(n, false);
      while (!seen[cur]) {
        seen[cur] = true;
        for (long p : parents[cur]) {
          if (p >= 0 && !placed[static_cast<std::size_t>(p)]) {
            cur = static_cast<std::size_t>(p);
            break;
          }
        }
      }
      throw ValidationError("cycle detected through variable '" + net.variables[cur].name + "'");
    }
  }
  return order;
}

namespace {

constexpr double kRowSumTolerance = 1e-9;

template <typename T>
bool has_duplicates(const std::vector<T>& items) {
  std::set<T> seen(items.begin(), items.end());
  return seen.size() != items.size();
}

void validate_network(const Network& net, std::span<const std::string> external,
                      const std::optional<DecisionNode>& decision,
                      std::vector<std::string>& out) {
  std::set<std::string> names;
  for (const auto& v : net.variables) {
    if (!names.insert(v.name).second) out.push_back("duplicate variable name '" + v.name + "'");
    if (v.arity < 1) out.push_back("variable '" + v.name + "' has arity " + std::to_string(v.arity) + " < 1");
    if (has_duplicates(v.parents)) out.push_back("variable '" + v.name + "' lists a parent twice");
    if (std::find(v.parents.begin(), v.parents.end(), v.name) != v.parents.end()) {
      out.push_back("variable '" + v.name + "' lists itself as a parent");
    }
  }
  if (net.cpts.size() != net.variables.size()) {
    out.push_back("expected " + std::to_string(net.variables.size()) + " CPTs, found " +
                  std::to_string(net.cpts.size()));
  }

  bool parents_known = true;
  for (std::size_t i = 0; i < net.variables.size(); ++i) {
    const auto& v = net.variables[i];
    std::size_t rows = 1;
    bool known = true;
    for (const auto& p : v.parents) {
      if (auto idx = net.index_of(p)) {
        rows *= static_cast<std::size_t>(std::max(net.variables[*idx].arity, 0));
      } else if (decision && p == decision->name) {
        rows *= static_cast<std::size_t>(std::max(decision->arity, 0));
      } else {
        out.push_back("variable '" + v.name + "' has unknown parent '" + p + "'");
        known = false;
      }
    }
    parents_known = parents_known && known;
    if (i >= net.cpts.size()) continue;
    const Cpt& cpt = net.cpts[i];
    if (known && cpt.rows() != rows) {
      out.push_back("CPT of '" + v.name + "' has " + std::to_string(cpt.rows()) +
                    " rows, expected " + std::to_string(rows) + " (dimension mismatch)");
    }
    if (v.arity >= 1 && cpt.cols() != static_cast<std::size_t>(v.arity)) {
      out.push_back("CPT of '" + v.name + "' has " + std::to_string(cpt.cols()) +
                    " columns, expected " + std::to_string(v.arity) + " (dimension mismatch)");
    }
    for (std::size_t j = 0; j < cpt.rows(); ++j) {
      double sum = 0.0;
      for (double p : cpt.row(j)) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
          std::ostringstream msg;
          msg << "CPT of '" << v.name << "' row " << j << " has entry " << p << " outside [0, 1]";
          out.push_back(msg.str());
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "CPT of '" << v.name << "' row " << j << " sums to " << sum << ", not 1";
        out.push_back(msg.str());
      }
    }
  }

  if (parents_known) {
    try {
      topological_order(net, external);
    } catch (const ValidationError& e) {
      out.push_back(e.what());
    }
  }
}

}  // namespace

std::vector<std::string> validate(const Network& net) {
  std::vector<std::string> out;
  validate_network(net, {}, std::nullopt, out);
  return out;
}

std::vector<std::string> validate(const InfluenceDiagram& id) {
  std::vector<std::string> out;
  const auto& net = id.network;
  const auto& dec = id.decision;
  const std::string external[] = {dec.name};
  validate_network(net, external, dec, out);

  if (net.index_of(dec.name)) out.push_back("decision '" + dec.name + "' collides with a chance variable");
  if (dec.arity < 1) out.push_back("decision '" + dec.name + "' has arity " + std::to_string(dec.arity) + " < 1");
  if (has_duplicates(dec.parents)) out.push_back("decision '" + dec.name + "' lists a parent twice");
  for (const auto& p : dec.parents) {
    if (!net.index_of(p)) out.push_back("decision '" + dec.name + "' has unknown informational parent '" + p + "'");
  }

  // Informational parents must not descend from the decision.
  std::vector<bool> downstream(net.variables.size(), false);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < net.variables.size(); ++i) {
      if (downstream[i]) continue;
      for (const auto& p : net.variables[i].parents) {
        auto idx = net.index_of(p);
        if (p == dec.name || (idx && downstream[*idx])) {
          downstream[i] = changed = true;
          break;
        }
      }
    }
  }
  for (const auto& p : dec.parents) {
    if (auto idx = net.index_of(p); idx && downstream[*idx]) {
      out.push_back("cycle detected: informational parent '" + p + "' descends from decision '" + dec.name + "'");
    }
  }

  const auto& util = id.utility;
  if (has_duplicates(util.parents)) out.push_back("utility lists a parent twice");
  std::size_t size = 1;
  bool known = true;
  for (const auto& p : util.parents) {
    if (auto idx = net.index_of(p)) {
      size *= static_cast<std::size_t>(std::max(net.variables[*idx].arity, 0));
    } else if (p == dec.name) {
      size *= static_cast<std::size_t>(std::max(dec.arity, 0));
    } else {
      out.push_back("utility has unknown parent '" + p + "'");
      known = false;
    }
  }
  if (known && util.table.size() != size) {
    out.push_back("utility table has " + std::to_string(util.table.size()) + " entries, expected " +
                  std::to_string(size) + " (dimension mismatch)");
  }
  for (std::size_t j = 0; j < util.table.size(); ++j) {
    if (!std::isfinite(util.table[j]) || util.table[j] <= 0.0) {
      std::ostringstream msg;
      msg << "utility entry " << j << " is " << util.table[j] << "; utilities must be strictly positive";
      out.push_back(msg.str());
    }
  }
  return out;
}

std::vector<std::string> validate(const Model& model) {
  return std::visit([](const auto& m) { return validate(m); }, model);
}

}  // namespace ais
