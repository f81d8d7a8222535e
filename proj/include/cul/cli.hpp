// Command-line front end: pretrain, solve-boundaries, sweep, rates,
// baselines and report.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace cul::cli {

enum ExitCode : int {
    kOk = 0,
    kIoFailure = 1,
    kConfigError = 2,
    kNumericFailure = 3,
    kConstraintViolation = 4,
};

/// args excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

/// Every accepted config key, in echo order.
[[nodiscard]] std::vector<std::string> config_keys();

/// Fill problem- and command-dependent defaults and validate. Throws
/// InvalidArgument naming the offending key.
[[nodiscard]] nlohmann::ordered_json resolve_config(const nlohmann::json& given, const std::string& command);

}  // namespace cul::cli
