#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"

namespace skewsim::cli {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitContractViolation = 2;
inline constexpr int kExitConfigError = 3;
inline constexpr int kExitWindowError = 4;

struct RunOptions {
  Config config;
  std::string out_dir = "out";
  std::vector<std::int64_t> seeds;
  int threads = 1;
  std::string negative_control;  // empty = none
};

const std::vector<std::string>& subcommand_names();

// Dispatch; returns the process exit code and prints contract violations.
int run_subcommand(const std::string& name, const RunOptions& opts);

}  // namespace skewsim::cli
