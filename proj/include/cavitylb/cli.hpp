#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace cavitylb {

// Expands "lo:hi:step" (inclusive) into a grid; a single number gives a
// one-point grid. Throws std::invalid_argument on malformed text.
std::vector<double> parse_grid(const std::string& text);

// Validates a run configuration (unknown keys rejected) and executes it.
// Results go to `out`; on failure a machine-readable error JSON goes to
// `err`. Returns 0 on success, 1 on configuration errors, 2 on numeric
// failures.
int run_command(const nlohmann::json& config, std::ostream& out, std::ostream& err);

nlohmann::json load_config_file(const std::string& path);

}  // namespace cavitylb
