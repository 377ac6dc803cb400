#ifndef CPPDSE_REPORT_HPP
#define CPPDSE_REPORT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

namespace cppdse {

inline constexpr const char* tool_name = "cppdse";
inline constexpr const char* tool_version = "0.1.0";

// Exit codes shared by every subcommand.
inline constexpr int exit_ok = 0;
inline constexpr int exit_domain = 1;  // well-formed input, negative answer
inline constexpr int exit_usage = 2;   // bad flags, unreadable/invalid input

struct cli_options {
  std::string subcommand;
  std::string kernel_path;
  std::string report_path;
  std::string platform_path;  // empty = built-in default platform
  std::string point_path;
  double budget_secs = 180.0;
  std::uint64_t budget_evals = 0;
  std::uint64_t seed = 1905;
  int jobs = 1;
  std::string out_dir;
  bool trace = false;
};

// Every JSON artifact embeds this under "manifest" so results can be traced
// back to the exact invocation that produced them.
std::string manifest_json(const cli_options& o);

int cmd_check(const cli_options& o, std::ostream& out, std::ostream& err);
int cmd_space(const cli_options& o, std::ostream& out, std::ostream& err);
int cmd_estimate(const cli_options& o, std::ostream& out, std::ostream& err);
int cmd_explore(const cli_options& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const cli_options& o, std::ostream& out, std::ostream& err);

}  // namespace cppdse

#endif  // CPPDSE_REPORT_HPP
