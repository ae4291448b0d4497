// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <iostream>

#include "permhe/cli/commands.hpp"

namespace permhe::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_failure = 1,
  exit_config = 2,
  exit_transport = 3,
  exit_protocol = 4,
};

inline int exit_code_for(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::config: return exit_config;
    case ErrorCategory::transport: return exit_transport;
    case ErrorCategory::protocol: return exit_protocol;
    case ErrorCategory::computation: return exit_failure;
  }
  return exit_failure;
}

/// PROUD_LOG = trace | debug | info | warn | error | off (default warn).
inline void configure_logging() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto logger = spdlog::stderr_color_mt("permhe");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  });
  const char* env = std::getenv("PROUD_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

namespace detail {
inline std::atomic<bool> g_stop{false};
extern "C" inline void on_signal(int) { g_stop = true; }
}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  configure_logging();
  CLI::App app{"Privacy-preserving inference: encrypted linear layers, client-side activations."};
  app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags win");
  app.require_subcommand(0, 1);

  RunConfig c;
  std::uint64_t seed = 0;
  app.add_option("--role", c.role, "serve | infer | bench when no subcommand is given")
      ->check(CLI::IsMember({"serve", "server", "infer", "client", "bench"}));
  app.add_option("--addr", c.addr, "host:port to listen on or connect to")->capture_default_str();
  app.add_option("--model", c.model, "model manifest (JSON)");
  app.add_option("--input", c.input, "samples file (csv or raw-idx)");
  app.add_option("--input-format", c.input_format, "csv | raw-idx (default: by extension)");
  app.add_option("--backend", c.backend, "clear | ckks_lite")->check(CLI::IsMember({"clear", "ckks_lite"}))->capture_default_str();
  app.add_option("--ring-dim", c.ring_dim, "ring dimension N (slots = N/2)")->capture_default_str();
  app.add_option("--scale-bits", c.scale_bits, "log2 of the encoding scale")->capture_default_str();
  app.add_option("--workers", c.workers, "threads per MatF")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--batch", c.batch, "matrices packed per ciphertext")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--count", c.count, "inputs per session")->check(CLI::PositiveNumber)->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "fix all client randomness");
  app.add_option("--trials", c.trials, "bench repetitions")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--report", c.report, "write the phase report as CSV");
  app.add_flag("--local", c.local, "infer/bench against an in-process server using --model");
  app.add_option("--sessions", c.sessions, "serve: exit after this many sessions (0 = until signaled)");

  auto* serve = app.add_subcommand("serve", "run the model owner's server");
  auto* infer = app.add_subcommand("infer", "run one client inference and print the phase report");
  auto* bench = app.add_subcommand("bench", "repeat inference and emit per-trial and mean reports");
  auto* make_model = app.add_subcommand("make-model", "write a random-weight model");
  auto* make_samples = app.add_subcommand("make-samples", "write random gray-level samples as CSV");
  for (auto* s : {serve, infer, bench, make_model, make_samples}) s->fallthrough();

  std::string kind = "mlp", activation = "relu", out_path;
  std::vector<std::size_t> dims{64, 16, 10};
  make_model->add_option("--kind", kind, "mlp | lenet5")->capture_default_str();
  make_model->add_option("--dims", dims, "mlp layer widths, input first")->delimiter(',');
  make_model->add_option("--activation", activation, "relu | sigmoid | tanh | square")->capture_default_str();
  make_model->add_option("--out", out_path, "manifest path")->required();
  std::size_t sample_count = 10, sample_dim = 64, classes = 10;
  make_samples->add_option("--num", sample_count, "number of samples")->capture_default_str();
  make_samples->add_option("--dim", sample_dim, "values per sample")->capture_default_str();
  make_samples->add_option("--classes", classes, "label range")->capture_default_str();
  make_samples->add_option("--out", out_path, "CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? exit_ok : exit_config;
  }
  if (*seed_opt) c.seed = seed;

  std::string role = c.role;
  if (*serve) role = "serve";
  if (*infer) role = "infer";
  if (*bench) role = "bench";
  if (role == "server") role = "serve";
  if (role == "client") role = "infer";

  try {
    if (*make_model) {
      cmd_make_model(kind, dims, activation, c.seed.value_or(1), out_path, out);
    } else if (*make_samples) {
      cmd_make_samples(sample_count, sample_dim, classes, c.seed.value_or(1), out_path, out);
    } else if (role == "serve") {
      detail::g_stop = false;
      std::signal(SIGINT, detail::on_signal);
      std::signal(SIGTERM, detail::on_signal);
      cmd_serve(c, out, &detail::g_stop);
    } else if (role == "infer") {
      cmd_infer(c, out);
    } else if (role == "bench") {
      cmd_bench(c, out);
    } else {
      err << "no command given; see --help\n";
      return exit_config;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_failure;
  }
  return exit_ok;
}

}  // namespace permhe::cli
