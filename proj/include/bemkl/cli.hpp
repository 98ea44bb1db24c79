// Command-line front end: kernels, train, predict, bench.
#ifndef BEMKL_CLI_HPP
#define BEMKL_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace bemkl {

/// Runs the tool with argv-style arguments (argv[0] is the program name).
/// Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct FlagInfo {
  std::string subcommand;
  std::string name;  // e.g. "--bundle"
  std::string description;
};

/// Every registered flag of every subcommand, in registration order.
std::vector<FlagInfo> flag_registry();
std::vector<std::string> subcommand_names();

}  // namespace bemkl

#endif  // BEMKL_CLI_HPP
