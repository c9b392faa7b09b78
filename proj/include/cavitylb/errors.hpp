#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace cavitylb {

// Numeric failure carrying a stable machine-readable code (NO_ROOT,
// STEP_UNDERFLOW, UNSUPPORTED_POLICY, ...). The CLI maps these to exit
// code 2 with an error JSON on stderr.
class numeric_error : public std::runtime_error {
  public:
    numeric_error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

  private:
    std::string code_;
};

}  // namespace cavitylb
