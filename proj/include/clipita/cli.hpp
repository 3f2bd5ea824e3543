#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace clipita::cli {

/// Runs one invocation. args[0] is the program name, args[1] the subcommand
/// (gen-data, train, eval, analyze). Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args);

/// Parses `key = value` lines; `#` starts a comment. Keys are normalized to
/// dashed form (n_products -> n-products). Throws clipita::ParseError.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text,
                                                                   const std::string& source);

}  // namespace clipita::cli
