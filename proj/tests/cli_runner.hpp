#pragma once

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>

namespace kronsim::test {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

inline CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + KRONSIM_CLI_PATH + "\" " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace kronsim::test
