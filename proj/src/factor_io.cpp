#include "pgmforge/factor_io.hpp"

#include "pgmforge/errors.hpp"

namespace pgm {

namespace {

std::string symbol_text(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

SparseFactor factor_from_json(const nlohmann::json& literal, VariableRegistry& registry) {
  try {
    const auto& names = literal.at("scope");
    const auto& domain_map = literal.at("domains");
    std::vector<VarId> scope;
    std::vector<Domain> domains;
    // Literal index -> root value code, per scope position.
    std::vector<std::vector<Value>> codes;
    for (const auto& name_json : names) {
      const auto name = name_json.get<std::string>();
      const auto& listed = domain_map.at(name);
      std::vector<std::string> symbols;
      for (const auto& v : listed) symbols.push_back(symbol_text(v));
      auto var = registry.find(name);
      if (!var) var = registry.add(name, symbols);
      const auto& root = registry.symbols(*var);
      std::vector<Value> code;
      for (const auto& s : symbols) {
        const auto it = std::ranges::find(root, s);
        if (it == root.end())
          fail(ErrorCode::OutOfDomainValue, "value '" + s + "' unknown for variable '" + name + "'");
        code.push_back(static_cast<Value>(it - root.begin()));
      }
      domains.emplace_back(code);
      codes.push_back(std::move(code));
      scope.push_back(*var);
    }
    std::vector<Entry> entries;
    for (const auto& e : literal.at("entries")) {
      const auto& assign = e.at("assign");
      if (assign.size() != scope.size())
        fail(ErrorCode::ScopeMismatch, "entry length does not match the scope");
      Entry entry;
      entry.potential = e.value("p", 1.0);
      for (std::size_t c = 0; c < scope.size(); ++c) {
        const auto idx = assign[c].get<std::size_t>();
        if (idx >= codes[c].size())
          fail(ErrorCode::OutOfDomainValue, "assignment index out of range");
        entry.assignment.push_back(codes[c][idx]);
      }
      entries.push_back(std::move(entry));
    }
    return make_factor(std::move(scope), std::move(domains), std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("factor literal: ") + e.what());
  }
}

nlohmann::json factor_to_json(const SparseFactor& f, const VariableRegistry& registry) {
  nlohmann::json out;
  out["scope"] = nlohmann::json::array();
  out["domains"] = nlohmann::json::object();
  for (std::size_t c = 0; c < f.arity(); ++c) {
    const auto& name = registry.label(f.scope()[c]);
    out["scope"].push_back(name);
    auto values = nlohmann::json::array();
    for (Value v : f.domains()[c].values()) values.push_back(registry.symbols(f.scope()[c]).at(v));
    out["domains"][name] = values;
  }
  out["entries"] = nlohmann::json::array();
  for (std::size_t r = 0; r < f.size(); ++r) {
    auto assign = nlohmann::json::array();
    const auto row = f.row(r);
    for (std::size_t c = 0; c < f.arity(); ++c) assign.push_back(*f.domains()[c].index_of(row[c]));
    out["entries"].push_back({{"assign", assign}, {"p", f.potential(r)}});
  }
  return out;
}

}  // namespace pgm
