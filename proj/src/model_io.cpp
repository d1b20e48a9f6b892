#include <fstream>
#include <set>
#include <sstream>

#include "ais/model.hpp"
#include "json.hpp"

namespace ais {

using json = nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional = {}) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  std::set<std::string> allowed;
  for (const char* k : required) {
    allowed.insert(k);
    if (!obj.contains(k)) throw ParseError(where + ": missing field \"" + k + "\"");
  }
  for (const char* k : optional) allowed.insert(k);
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ParseError(where + ": unknown field \"" + key + "\"");
  }
}

std::string get_name(const json& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(where + ": expected a string");
  return v.get<std::string>();
}

int get_arity(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ParseError(where + ": expected an integer");
  return v.get<int>();
}

double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  return v.get<double>();
}

std::vector<std::string> get_names(const json& v, const std::string& where) {
  if (!v.is_array()) throw ParseError(where + ": expected an array of names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_name(v[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Cpt get_cpt(const json& v, const std::string& where, int arity) {
  if (!v.is_array()) throw ParseError(where + ": expected an array of rows");
  // Width comes from the first row when present; ragged tables cannot be represented.
  const std::size_t cols = v.empty() ? static_cast<std::size_t>(std::max(arity, 0)) : (v[0].is_array() ? v[0].size() : 0);
  Cpt cpt(v.size(), cols);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const std::string row_where = where + "[" + std::to_string(j) + "]";
    if (!v[j].is_array()) throw ParseError(row_where + ": expected an array of probabilities");
    if (v[j].size() != cols) {
      throw ParseError(row_where + ": row has " + std::to_string(v[j].size()) + " entries, expected " +
                       std::to_string(cols) + " (dimension mismatch)");
    }
    for (std::size_t k = 0; k < cols; ++k) cpt(j, k) = get_number(v[j][k], row_where + "[" + std::to_string(k) + "]");
  }
  return cpt;
}

json names_json(const std::vector<std::string>& names) {
  json arr = json::array();
  for (const auto& n : names) arr.push_back(n);
  return arr;
}

}  // namespace

Model load(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  require_keys(doc, "model", {"variables", "cpts"}, {"decision", "utility"});

  Network net;
  const json& vars = doc["variables"];
  if (!vars.is_array()) throw ParseError("variables: expected an array");
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string where = "variables[" + std::to_string(i) + "]";
    require_keys(vars[i], where, {"name", "arity", "parents"});
    net.variables.push_back(Variable{get_name(vars[i]["name"], where + ".name"),
                                     get_arity(vars[i]["arity"], where + ".arity"),
                                     get_names(vars[i]["parents"], where + ".parents")});
  }

  const json& cpts = doc["cpts"];
  if (!cpts.is_object()) throw ParseError("cpts: expected an object mapping names to tables");
  for (const auto& [key, value] : cpts.items()) {
    if (!net.index_of(key)) throw ParseError("cpts: unknown field \"" + key + "\" (not a declared variable)");
  }
  for (const auto& v : net.variables) {
    if (!cpts.contains(v.name)) throw ParseError("cpts: missing table for variable \"" + v.name + "\"");
    net.cpts.push_back(get_cpt(cpts[v.name], "cpts." + v.name, v.arity));
  }

  Model model;
  if (doc.contains("decision") || doc.contains("utility")) {
    if (!doc.contains("decision")) throw ParseError("model: \"utility\" requires a \"decision\" block");
    if (!doc.contains("utility")) throw ParseError("model: \"decision\" requires a \"utility\" block");
    const json& d = doc["decision"];
    require_keys(d, "decision", {"name", "arity", "parents"});
    const json& u = doc["utility"];
    require_keys(u, "utility", {"parents", "table"});
    if (!u["table"].is_array()) throw ParseError("utility.table: expected an array of numbers");
    std::vector<double> table;
    for (std::size_t j = 0; j < u["table"].size(); ++j) {
      table.push_back(get_number(u["table"][j], "utility.table[" + std::to_string(j) + "]"));
    }
    model = InfluenceDiagram{std::move(net),
                             DecisionNode{get_name(d["name"], "decision.name"), get_arity(d["arity"], "decision.arity"),
                                          get_names(d["parents"], "decision.parents")},
                             UtilityNode{get_names(u["parents"], "utility.parents"), std::move(table)}};
  } else {
    model = std::move(net);
  }

  if (auto report = validate(model); !report.empty()) throw ValidationError(std::move(report));
  return model;
}

Model load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load(buf.str());
}

std::string render(const Model& model) {
  const Network& net = chance_network(model);
  json doc;
  doc["variables"] = json::array();
  json cpts = json::object();
  for (std::size_t i = 0; i < net.variables.size(); ++i) {
    const auto& v = net.variables[i];
    doc["variables"].push_back({{"name", v.name}, {"arity", v.arity}, {"parents", names_json(v.parents)}});
    json rows = json::array();
    for (std::size_t j = 0; j < net.cpts[i].rows(); ++j) {
      auto r = net.cpts[i].row(j);
      rows.push_back(json(std::vector<double>(r.begin(), r.end())));
    }
    cpts[v.name] = std::move(rows);
  }
  doc["cpts"] = std::move(cpts);
  if (const auto* id = std::get_if<InfluenceDiagram>(&model)) {
    doc["decision"] = {{"name", id->decision.name}, {"arity", id->decision.arity},
                       {"parents", names_json(id->decision.parents)}};
    doc["utility"] = {{"parents", names_json(id->utility.parents)}, {"table", id->utility.table}};
  }
  return doc.dump(2) + "\n";
}

}  // namespace ais
