#include <CLI11.hpp>
#include <iostream>
#include <numeric>

#include "config.hpp"
#include "runners.hpp"
#include "skewsim/errors.hpp"

int main(int argc, char** argv) {
  using namespace skewsim::cli;

  CLI::App app{"skewsim: simulation and verification toolkit for skew products "
               "driven by combined random and quasiperiodic forcing"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string seeds_arg;
  std::string negative_control;
  int threads = 1;

  // Environment variables mirror the flags with the SKEWSIM_ prefix.
  app.add_option("--config", config_path, "experiment config file")
      ->envname("SKEWSIM_CONFIG");
  app.add_option("--out", out_dir, "output directory")->envname("SKEWSIM_OUT");
  app.add_option("--seeds", seeds_arg, "comma-separated seed list (overrides config)")
      ->envname("SKEWSIM_SEEDS");
  app.add_option("--threads", threads, "worker threads for per-seed loops")
      ->envname("SKEWSIM_THREADS");
  app.add_option("--negative-control", negative_control,
                 "enable a named negative control (e.g. corrupt-c)")
      ->envname("SKEWSIM_NEGATIVE_CONTROL");

  std::map<std::string, CLI::App*> subs;
  for (const auto& name : subcommand_names()) {
    subs[name] = app.add_subcommand(name);
    subs[name]->fallthrough(true);
  }

  CLI11_PARSE(app, argc, argv);

  std::string chosen;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) chosen = name;

  try {
    RunOptions opts;
    if (!config_path.empty()) {
      opts.config = Config::parse_file(config_path);
    } else if (chosen != "catalog") {
      throw skewsim::ConfigError("--config is required for subcommand '" + chosen + "'");
    }
    opts.out_dir = opts.config.get_string("", "out_dir", out_dir);
    if (out_dir != "out") opts.out_dir = out_dir;  // flag wins over config

    if (!seeds_arg.empty())
      opts.seeds = parse_int_list(seeds_arg);
    else if (opts.config.has("", "seeds"))
      opts.seeds = opts.config.get_int_list("", "seeds");
    else {
      opts.seeds.resize(10);
      std::iota(opts.seeds.begin(), opts.seeds.end(), 1);
    }
    if (opts.seeds.empty()) throw skewsim::ConfigError("seed list is empty");

    opts.threads = threads;
    if (threads == 1)
      opts.threads = static_cast<int>(opts.config.get_int("", "threads", 1));
    opts.negative_control = negative_control;

    return run_subcommand(chosen, opts);
  } catch (const skewsim::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == skewsim::ErrorKind::config ? kExitConfigError : kExitWindowError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
