#include "decomp/json_io.hpp"

namespace decomp {

Relation relation_from_string(const std::string& s) {
  if (s == "<=") return Relation::Le;
  if (s == "<") return Relation::Lt;
  if (s == ">=") return Relation::Ge;
  if (s == ">") return Relation::Gt;
  if (s == "=") return Relation::Eq;
  throw ExprError("unknown relation '" + s + "'");
}

Json to_json(const Constraint& c) { return {{"lhs", c.lhs.key()}, {"rel", to_string(c.rel)}, {"rhs", c.rhs.key()}}; }

Constraint constraint_from_json(const Json& j) {
  return Constraint(parse_sexpr(j.at("lhs").get<std::string>()), relation_from_string(j.at("rel").get<std::string>()),
                    parse_sexpr(j.at("rhs").get<std::string>()));
}

Json to_json(const Region& r) {
  Json vars = Json::array();
  for (const auto& v : r.vars()) vars.push_back({{"name", v.name}, {"role", v.role == VarRole::Index ? "index" : "real"}});
  Json cs = Json::array();
  for (const auto& c : r.constraints()) cs.push_back(to_json(c));
  return {{"vars", vars}, {"constraints", cs}};
}

Region region_from_json(const Json& j) {
  std::vector<VarDecl> vars;
  for (const auto& v : j.at("vars"))
    vars.push_back({v.at("name").get<std::string>(), v.value("role", "real") == "index" ? VarRole::Index : VarRole::Real});
  std::vector<Constraint> cs;
  for (const auto& c : j.at("constraints")) cs.push_back(constraint_from_json(c));
  return Region(vars, cs);
}

Json to_json(const Assignment& a) {
  Json j = Json::object();
  for (const auto& [k, v] : a) j[k] = v;
  return j;
}

}  // namespace decomp
