#pragma once

// JSON factor literal used by fixtures and tests:
//   {"scope": [names], "domains": {name: [values]}, "entries": [{"assign": [indices], "p": real}]}
// `assign` indexes into the listed domain values of each scope variable, in
// scope order.

#include <nlohmann/json.hpp>

#include "pgmforge/factor.hpp"
#include "pgmforge/variables.hpp"

namespace pgm {

/// Variables named in the literal are looked up in `registry` and added when
/// missing (with the literal's values as symbols).
SparseFactor factor_from_json(const nlohmann::json& literal, VariableRegistry& registry);

nlohmann::json factor_to_json(const SparseFactor& f, const VariableRegistry& registry);

}  // namespace pgm
