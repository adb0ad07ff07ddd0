#pragma once

#include <stdexcept>
#include <string>

namespace fissura {

/// Runtime error carrying the name of the module that raised it, so CLI
/// diagnostics read e.g. "volume: region out of bounds".
class Error : public std::runtime_error {
public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const { return module_; }

private:
  std::string module_;
};

[[noreturn]] inline void raise(const std::string& module, const std::string& message) {
  throw Error(module, message);
}

inline void require(bool cond, const std::string& module, const std::string& message) {
  if (!cond) raise(module, message);
}

}  // namespace fissura
