#pragma once

#include <stdexcept>
#include <string>

namespace pci {

/// Thrown for contract violations: malformed declarations, invalid rule
/// sets, inconsistent oracle constraints, bad query input.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pci
