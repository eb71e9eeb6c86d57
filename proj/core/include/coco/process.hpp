#pragma once

#include <string>
#include <vector>

namespace coco {

struct CommandResult {
  int status = -1;  // exit status, -1 when the command could not be started
  std::string out;  // captured stdout; stderr is discarded
};

// Runs argv through /bin/sh with every argument single-quoted.
CommandResult run_command(const std::vector<std::string>& argv);

std::string shell_quote(const std::string& arg);

}  // namespace coco
