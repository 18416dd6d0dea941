#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pgmforge/factor.hpp"

namespace pgm {

/// Labels and value symbols for the variables of one model. VarIds are dense
/// indices handed out in insertion order; labels are unique.
class VariableRegistry {
 public:
  VarId add(std::string label, std::vector<std::string> symbols);

  std::optional<VarId> find(const std::string& label) const;
  const std::string& label(VarId var) const;
  const std::vector<std::string>& symbols(VarId var) const;
  /// Full domain {0..card-1} of the variable.
  Domain root_domain(VarId var) const;
  std::size_t size() const noexcept { return labels_.size(); }
  std::vector<VarId> all() const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::vector<std::string>> symbols_;
  std::map<std::string, VarId, std::less<>> by_label_;
};

}  // namespace pgm
