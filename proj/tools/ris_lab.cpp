// ris-lab: scenario sweeps, cross-location matrices, and the networked
// broker/agent/REPL trio, all driven by one scenario file.

#include <string>

#include <CLI11.hpp>

#include "rislab/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"RIS codebook laboratory"};
  app.require_subcommand(1);

  std::string log_flag;
  app.add_option("--log-level", log_flag, "off|info|debug (overrides RIS_LAB_LOG)");

  std::string scenario_path, out_path, listen_addr, connect_addr, role;
  std::string store_path = "cb_store.json";

  CLI::App* run = app.add_subcommand("run", "sweep seeds x algorithms to CSV");
  run->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  run->add_option("--out", out_path, "output CSV path")->required();

  CLI::App* locations = app.add_subcommand("locations", "cross-location codebook matrix to CSV");
  locations->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  locations->add_option("--out", out_path, "output CSV path")->required();

  CLI::App* serve = app.add_subcommand("serve", "run the broker");
  serve->add_option("--listen", listen_addr, "host:port (port 0 = ephemeral)")->required();

  CLI::App* agent = app.add_subcommand("agent", "run a ris or rx agent");
  agent->add_option("--role", role, "ris|rx")->required();
  agent->add_option("--connect", connect_addr, "broker host:port")->required();
  agent->add_option("--scenario", scenario_path, "scenario JSON file (rx role)");
  agent->add_option("--store", store_path, "codebook store file (ris role)");

  CLI::App* repl = app.add_subcommand("repl", "interactive user client");
  repl->add_option("--connect", connect_addr, "broker host:port")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : rislab::exit_code::kConfig;
  }

  if (!log_flag.empty()) {
    if (log_flag == "debug")
      rislab::log_level() = rislab::LogLevel::kDebug;
    else if (log_flag == "info")
      rislab::log_level() = rislab::LogLevel::kInfo;
    else
      rislab::log_level() = rislab::LogLevel::kOff;
  }

  if (run->parsed()) return rislab::cmd_run(scenario_path, out_path);
  if (locations->parsed()) return rislab::cmd_locations(scenario_path, out_path);
  if (serve->parsed()) return rislab::cmd_serve(listen_addr);
  if (agent->parsed()) return rislab::cmd_agent(role, connect_addr, scenario_path, store_path);
  if (repl->parsed()) return rislab::cmd_repl(connect_addr);
  return rislab::exit_code::kConfig;
}
