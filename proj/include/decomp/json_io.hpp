#pragma once

// JSON encodings shared by certificates, run records and the HTTP API.
// Expressions travel as their canonical s-expression text.

#include "decomp/expr.hpp"
#include "decomp/region.hpp"

#include <json.hpp>

namespace decomp {

using Json = nlohmann::json;

Relation relation_from_string(const std::string& s);

Json to_json(const Constraint& c);
Constraint constraint_from_json(const Json& j);

Json to_json(const Region& r);
Region region_from_json(const Json& j);

Json to_json(const Assignment& a);

}  // namespace decomp
