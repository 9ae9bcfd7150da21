#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ptlab::cli {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,  // verify ran but something did not hold
  kUsage = 2,
  kGuard = 3,
  kRuntime = 4,
};

/// Runs one subcommand. args excludes the program name. Results go to --out
/// (stdout when absent or "-"); the manifest goes to --manifest, else
/// <out>.manifest.json, else stderr when writing to stdout.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ptlab::cli
