#include "pgmforge/variables.hpp"

#include "pgmforge/errors.hpp"

namespace pgm {

VarId VariableRegistry::add(std::string label, std::vector<std::string> symbols) {
  if (by_label_.contains(label)) fail(ErrorCode::DuplicateEntry, "variable '" + label + "' exists");
  if (symbols.empty() || symbols.size() > kMaxCardinality)
    fail(ErrorCode::OutOfDomainValue, "variable '" + label + "' needs 1.." +
                                          std::to_string(kMaxCardinality) + " values");
  const VarId id{static_cast<std::uint32_t>(labels_.size())};
  by_label_.emplace(label, id);
  labels_.push_back(std::move(label));
  symbols_.push_back(std::move(symbols));
  return id;
}

std::optional<VarId> VariableRegistry::find(const std::string& label) const {
  const auto it = by_label_.find(label);
  if (it == by_label_.end()) return std::nullopt;
  return it->second;
}

const std::string& VariableRegistry::label(VarId var) const {
  if (var.value >= labels_.size()) fail(ErrorCode::UnknownVariable, "unregistered variable id");
  return labels_[var.value];
}

const std::vector<std::string>& VariableRegistry::symbols(VarId var) const {
  if (var.value >= symbols_.size()) fail(ErrorCode::UnknownVariable, "unregistered variable id");
  return symbols_[var.value];
}

Domain VariableRegistry::root_domain(VarId var) const { return Domain::range(symbols(var).size()); }

std::vector<VarId> VariableRegistry::all() const {
  std::vector<VarId> out;
  for (std::uint32_t i = 0; i < labels_.size(); ++i) out.push_back(VarId{i});
  return out;
}

}  // namespace pgm
