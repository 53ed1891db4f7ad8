#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace eigenrank {

struct ProcessResult {
  int exit_code = 0;
  /// Combined stdout/stderr of the child.
  std::string output;
};

/// Runs argv[0] (PATH lookup) with no shell, stdout and stderr captured to
/// `log_path`. Throws spawn_failure if the program cannot be started. A
/// child killed by signal s reports exit code 128 + s.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::filesystem::path& log_path);

/// Whitespace-separated tokens; no quoting.
std::vector<std::string> split_command(std::string_view command);

}  // namespace eigenrank
